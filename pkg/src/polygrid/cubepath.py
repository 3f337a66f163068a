"""Connecting surjective cube labelings by single-vertex recolorings.

A d-cube labeling assigns one of 2^d - 1 colors to each of the 2^d cube
vertices.  Surjective labelings (all colors present) can always be morphed
into one another without ever losing surjectivity, changing one vertex at
a time; `connect` produces such a path with at most 2^(d+1) steps, and
`bfs_shortest_path` is an independent optimal oracle for small d.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

__all__ = [
    "CubeLabeling",
    "LabelingPath",
    "PathError",
    "is_surjective",
    "connect",
    "connect_sequence",
    "bfs_shortest_path",
]


class PathError(ValueError):
    """Inputs that the path machinery rejects (wrong size, not surjective)."""


@dataclass(frozen=True)
class CubeLabeling:
    """A map from the 2^d cube vertices (d-bit indices) to colors below 2^d - 1."""

    d: int
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if self.d < 1:
            raise PathError("cube dimension must be positive")
        if len(self.values) != 1 << self.d:
            raise PathError(f"expected {1 << self.d} vertex values, got {len(self.values)}")
        k = (1 << self.d) - 1
        for v in self.values:
            if not 0 <= v < k:
                raise PathError(f"color {v} outside [0, {k})")

    @property
    def num_colors(self) -> int:
        return (1 << self.d) - 1

    def with_value(self, vertex: int, color: int) -> "CubeLabeling":
        vals = list(self.values)
        vals[vertex] = color
        return CubeLabeling(self.d, tuple(vals))

    def translate(self, shift: int) -> "CubeLabeling":
        """Precompose with XOR by a d-bit shift: result(z) = self(z ^ shift)."""
        return CubeLabeling(self.d, tuple(self.values[z ^ shift] for z in range(1 << self.d)))

    def diff_count(self, other: "CubeLabeling") -> int:
        return sum(a != b for a, b in zip(self.values, other.values))


def is_surjective(c: CubeLabeling) -> bool:
    """True iff every one of the 2^d - 1 colors appears on the cube."""
    return len(set(c.values)) == c.num_colors


@dataclass
class LabelingPath:
    """A sequence of surjective labelings, consecutive ones differing on <= 1 vertex."""

    steps: list[CubeLabeling]

    @property
    def num_changes(self) -> int:
        return len(self.steps) - 1

    def check(self) -> None:
        if not self.steps:
            raise PathError("empty path")
        for c in self.steps:
            if not is_surjective(c):
                raise PathError(f"non-surjective intermediate {c.values}")
        for a, b in zip(self.steps, self.steps[1:]):
            if a.diff_count(b) > 1:
                raise PathError(f"step {a.values} -> {b.values} changes more than one vertex")


def _require_surjective(c: CubeLabeling, name: str) -> None:
    if not is_surjective(c):
        raise PathError(f"{name} is not surjective: {c.values} misses a color")


def _repeated_colors(values: tuple[int, ...]) -> set[int]:
    seen: set[int] = set()
    repeated: set[int] = set()
    for v in values:
        if v in seen:
            repeated.add(v)
        seen.add(v)
    return repeated


def connect_sequence(
    start: CubeLabeling, goal: CubeLabeling
) -> tuple[list[int], list[CubeLabeling]]:
    """Full uncollapsed morphing schedule from start to goal.

    Returns (order, sequence) where order[j] is the cube vertex handled in
    slot j and sequence has exactly 2^(d+1) + 1 entries (some may repeat
    when a prescribed change is a no-op).  Slot layout: after entry 2i the
    first i vertices in `order` already carry their goal colors.

    Vertex order is the d-bit counter order with one adjustment: the
    lowest-index vertex whose goal color is repeated is swapped into the
    last slot, so the first 2^d - 1 slots carry pairwise distinct goal
    colors.
    """
    if start.d != goal.d:
        raise PathError(f"dimension mismatch: {start.d} vs {goal.d}")
    _require_surjective(start, "start labeling")
    _require_surjective(goal, "goal labeling")
    n = 1 << start.d

    goal_repeats = _repeated_colors(goal.values)
    last = min(v for v in range(n) if goal.values[v] in goal_repeats)
    order = [v for v in range(n) if v != last] + [last]

    seq = [start]
    cur = start
    for i in range(n):
        repeats = _repeated_colors(cur.values)
        k = max(j for j in range(n) if cur.values[order[j]] in repeats)
        if k < i:
            raise PathError("no spare color at or after the working slot; inputs corrupt")
        cur = cur.with_value(order[k], cur.values[order[i]])
        seq.append(cur)
        cur = cur.with_value(order[i], goal.values[order[i]])
        seq.append(cur)
    if cur.values != goal.values:
        raise PathError("morphing schedule failed to reach the goal labeling")
    return order, seq


def connect(start: CubeLabeling, goal: CubeLabeling) -> LabelingPath:
    """Path of single-vertex recolorings from start to goal, surjective throughout.

    At most 2^(d+1) changes; no-op slots in the schedule are collapsed, so
    consecutive path entries always differ on exactly one vertex.
    """
    _, seq = connect_sequence(start, goal)
    steps = [seq[0]]
    for c in seq[1:]:
        if c.values != steps[-1].values:
            steps.append(c)
    return LabelingPath(steps)


def _surjective_neighbors(values: tuple[int, ...], num_colors: int):
    counts = [0] * num_colors
    for v in values:
        counts[v] += 1
    for i, old in enumerate(values):
        if counts[old] < 2:
            continue  # removing the last copy of a color breaks surjectivity
        for color in range(num_colors):
            if color != old:
                yield values[:i] + (color,) + values[i + 1 :]


def bfs_shortest_path(start: CubeLabeling, goal: CubeLabeling) -> LabelingPath:
    """Shortest recoloring path through surjective labelings only.

    Exhaustive breadth-first search over the surjective-labeling graph;
    limited to d <= 3, where that graph is small enough to walk outright.
    """
    if start.d != goal.d:
        raise PathError(f"dimension mismatch: {start.d} vs {goal.d}")
    if start.d > 3:
        raise PathError("shortest-path oracle is limited to d <= 3")
    _require_surjective(start, "start labeling")
    _require_surjective(goal, "goal labeling")

    num_colors = start.num_colors
    parent: dict[tuple[int, ...], tuple[int, ...] | None] = {start.values: None}
    queue = deque([start.values])
    while queue:
        cur = queue.popleft()
        if cur == goal.values:
            break
        for nxt in _surjective_neighbors(cur, num_colors):
            if nxt not in parent:
                parent[nxt] = cur
                queue.append(nxt)
    if goal.values not in parent:
        raise PathError("goal unreachable through surjective labelings")

    chain = []
    node: tuple[int, ...] | None = goal.values
    while node is not None:
        chain.append(CubeLabeling(start.d, node))
        node = parent[node]
    chain.reverse()
    return LabelingPath(chain)


def all_surjective_labelings(d: int) -> list[CubeLabeling]:
    """Every surjective labeling of the d-cube, in lexicographic value order."""
    if d > 2:
        raise PathError("exhaustive enumeration is only sensible for d <= 2")
    n = 1 << d
    num_colors = n - 1
    out = []

    def rec(prefix: list[int]):
        if len(prefix) == n:
            if len(set(prefix)) == num_colors:
                out.append(CubeLabeling(d, tuple(prefix)))
            return
        remaining = n - len(prefix)
        missing = num_colors - len(set(prefix))
        if missing > remaining:
            return
        for v in range(num_colors):
            prefix.append(v)
            rec(prefix)
            prefix.pop()

    rec([])
    return out
