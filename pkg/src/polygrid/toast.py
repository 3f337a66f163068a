"""Nested hierarchical partitions of the torus with separation margins ("toasts").

A toast is a family of finite pieces covering the domain such that any two
distinct pieces are either nested with an r-ball margin or more than r
apart in the graph metric.  Pieces here are axis-aligned (possibly
wrapping) boxes, with arbitrary cell sets accepted from files for
hand-crafted cases; box geometry is checked by exact interval arithmetic,
cell sets by materializing balls.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from .grid import DomainError, TorusDomain, Vertex, VertexSet, ball

# Cell-set pieces are materialized for validation; keep them desk-sized.
MATERIALIZE_LIMIT = 1 << 22


class ToastError(ValueError):
    """Structurally invalid toast input (bad ids, bad boxes, bad geometry)."""


class SizingError(ToastError):
    """Requested toast cannot fit: reports the binding geometric constraint."""


# ---------------------------------------------------------------------------
# circular interval arithmetic (per-axis building blocks)

def interval_contains(outer: tuple[int, int], inner: tuple[int, int], s: int) -> bool:
    """Whether circular interval `inner` = (lo, length) lies inside `outer`."""
    (olo, om), (ilo, im) = outer, inner
    if om >= s:
        return True
    if im > om:
        return False
    t = (ilo - olo) % s
    return t + im <= om


def interval_gap(a: tuple[int, int], b: tuple[int, int], s: int) -> int:
    """Minimum circular distance between two intervals; 0 if they intersect."""
    (alo, am), (blo, bm) = a, b
    if am >= s or bm >= s:
        return 0
    t = (blo - alo) % s
    if t < am:
        return 0
    forward = t - am + 1
    backward = s - t - bm + 1
    if backward <= 0:
        return 0
    return min(forward, backward)


def interval_dilate(iv: tuple[int, int], r: int, s: int) -> tuple[int, int]:
    lo, m = iv
    if m + 2 * r >= s:
        return (0, s)
    return ((lo - r) % s, m + 2 * r)


def interval_indices(iv: tuple[int, int], s: int) -> np.ndarray:
    """Global coordinates covered by the interval, in circular order from lo."""
    lo, m = iv
    return (lo + np.arange(m)) % s


def interval_dist_vector(iv: tuple[int, int], s: int) -> np.ndarray:
    """dist(g, interval) for every coordinate g on the axis circle."""
    lo, m = iv
    if m >= s:
        return np.zeros(s, dtype=np.int64)
    t = (np.arange(s) - lo) % s  # offset from interval start
    inside = t < m
    forward = t - (m - 1)  # steps back to the interval end
    backward = s - t  # steps forward (wrapping) to the interval start
    out = np.minimum(forward, backward)
    out[inside] = 0
    return out


def interval_segments(iv: tuple[int, int], s: int) -> list[tuple[int, int]]:
    """Split a circular interval into at most two contiguous [start, stop) runs."""
    lo, m = iv
    lo %= s
    if m >= s:
        return [(0, s)]
    if lo + m <= s:
        return [(lo, lo + m)]
    return [(lo, s), (0, lo + m - s)]


# ---------------------------------------------------------------------------
# piece regions

@dataclass(frozen=True)
class Box:
    """Axis-aligned box on the torus, possibly wrapping on any axis."""

    lo: tuple[int, ...]
    extent: tuple[int, ...]

    def check(self, domain: TorusDomain) -> None:
        if len(self.lo) != domain.d or len(self.extent) != domain.d:
            raise ToastError(f"box rank does not match domain dimension {domain.d}")
        for lo, m, s in zip(self.lo, self.extent, domain.sides):
            if not 0 <= lo < s:
                raise ToastError(f"box corner {lo} outside [0, {s})")
            if not 1 <= m <= s:
                raise ToastError(f"box extent {m} outside [1, {s}]")

    def interval(self, axis: int) -> tuple[int, int]:
        return (self.lo[axis], self.extent[axis])

    def size(self) -> int:
        n = 1
        for m in self.extent:
            n *= m
        return n

    def is_full(self, domain: TorusDomain) -> bool:
        return self.extent == domain.sides

    def contains_vertex(self, x: Vertex, domain: TorusDomain) -> bool:
        return all(
            (c - lo) % s < m for c, lo, m, s in zip(x, self.lo, self.extent, domain.sides)
        )

    def min_vertex(self, domain: TorusDomain) -> Vertex:
        """Lexicographically least cell (product structure makes this per-axis)."""
        coords = []
        for lo, m, s in zip(self.lo, self.extent, domain.sides):
            coords.append(0 if (m >= s or lo + m > s) else lo)
        return tuple(coords)

    def cells(self, domain: TorusDomain) -> frozenset[Vertex]:
        if self.size() > MATERIALIZE_LIMIT:
            raise ToastError(f"refusing to materialize a box of {self.size()} cells")
        axes = [
            [int(v) for v in interval_indices(self.interval(j), domain.sides[j])]
            for j in range(domain.d)
        ]
        return frozenset(itertools.product(*axes))


Region = Box | frozenset


def _region_cells(region: Region, domain: TorusDomain) -> frozenset[Vertex]:
    if isinstance(region, Box):
        return region.cells(domain)
    return region


def _region_size(region: Region) -> int:
    return region.size() if isinstance(region, Box) else len(region)


@dataclass
class ToastPiece:
    id: int
    region: Region
    parent: int | None = None
    children: list[int] = field(default_factory=list)

    def cells(self, domain: TorusDomain) -> frozenset[Vertex]:
        return _region_cells(self.region, domain)

    def vertex_set(self, domain: TorusDomain) -> VertexSet:
        return VertexSet(domain, self.cells(domain))


@dataclass
class Toast:
    """A separation-margin partition hierarchy over a torus domain."""

    domain: TorusDomain
    separation: int
    pieces: dict[int, ToastPiece]

    def piece(self, piece_id: int) -> ToastPiece:
        if piece_id not in self.pieces:
            raise ToastError(f"unknown piece id {piece_id}")
        return self.pieces[piece_id]

    def roots(self) -> list[int]:
        return sorted(p.id for p in self.pieces.values() if p.parent is None)


@dataclass
class Violation:
    kind: str
    pieces: tuple[int, ...]
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] pieces {self.pieces}: {self.message}"


@dataclass
class ToastReport:
    ok: bool
    violations: list[Violation]

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# pairwise relations

def _box_thickened_inside(inner: Box, outer: Box, r: int, domain: TorusDomain) -> bool:
    """Whether the r-ball around `inner` lies inside `outer`.

    The r-ball of a box is not a box, but its axis projections are the
    dilated intervals, and for a product target the per-axis check is
    exact.
    """
    return all(
        interval_contains(
            outer.interval(j), interval_dilate(inner.interval(j), r, domain.sides[j]), domain.sides[j]
        )
        for j in range(domain.d)
    )


def box_distance(a: Box, b: Box, domain: TorusDomain) -> int:
    """Graph-metric distance between two boxes (sum of per-axis interval gaps)."""
    return sum(
        interval_gap(a.interval(j), b.interval(j), domain.sides[j]) for j in range(domain.d)
    )


def _box_inside(inner: Box, outer: Box, domain: TorusDomain) -> bool:
    return all(
        interval_contains(outer.interval(j), inner.interval(j), domain.sides[j])
        for j in range(domain.d)
    )


def _piece_relation(a: ToastPiece, b: ToastPiece, r: int, domain: TorusDomain):
    """(thickened a inside b, thickened b inside a, r-separated) for one pair."""
    if isinstance(a.region, Box) and isinstance(b.region, Box):
        ab = _box_thickened_inside(a.region, b.region, r, domain)
        ba = _box_thickened_inside(b.region, a.region, r, domain)
        apart = box_distance(a.region, b.region, domain) > r
        return ab, ba, apart
    cells_a = a.cells(domain)
    cells_b = b.cells(domain)
    ball_a = ball(VertexSet(domain, cells_a), r).cells
    ball_b = ball(VertexSet(domain, cells_b), r).cells
    return ball_a <= cells_b, ball_b <= cells_a, not (ball_a & cells_b)


def _piece_nested(inner: ToastPiece, outer: ToastPiece, domain: TorusDomain) -> bool:
    if isinstance(inner.region, Box) and isinstance(outer.region, Box):
        return _box_inside(inner.region, outer.region, domain)
    return inner.cells(domain) <= outer.cells(domain)


def validate(t: Toast) -> ToastReport:
    """Exhaustively check the toast invariants, reporting every violation.

    Checks: piece well-formedness, the pairwise margin trichotomy (exactly
    one of nested-with-margin either way or r-separated), coverage of the
    whole domain, and agreement of the parent/child links with the actual
    nesting order.
    """
    violations: list[Violation] = []
    dom = t.domain
    pieces = sorted(t.pieces.values(), key=lambda p: p.id)

    for p in pieces:
        if isinstance(p.region, Box):
            try:
                p.region.check(dom)
            except ToastError as e:
                violations.append(Violation("bad-box", (p.id,), str(e)))
        elif not p.region:
            violations.append(Violation("empty-piece", (p.id,), "piece has no cells"))
    if violations:
        return ToastReport(False, violations)

    for i, a in enumerate(pieces):
        for b in pieces[i + 1 :]:
            ab, ba, apart = _piece_relation(a, b, t.separation, dom)
            holds = int(ab) + int(ba) + int(apart)
            if holds != 1:
                detail = f"thickened-nesting a<b={ab} b<a={ba} separated={apart}"
                violations.append(
                    Violation("pairwise", (a.id, b.id), f"margin trichotomy fails: {detail}")
                )

    covered = np.zeros(dom.sides, dtype=bool)
    for p in pieces:
        if isinstance(p.region, Box):
            if p.region.is_full(dom):
                covered[...] = True
            else:
                for block in region_blocks(p.region, dom):
                    covered[block] = True
        else:
            for c in p.region:
                covered[c] = True
    if not covered.all():
        missing = tuple(int(v) for v in np.argwhere(~covered)[0])
        violations.append(
            Violation("coverage", (), f"vertex {missing} is not covered by any piece")
        )

    for p in pieces:
        strict_supersets = [
            q.id
            for q in pieces
            if q.id != p.id
            and _piece_nested(p, q, dom)
            and not (_piece_nested(q, p, dom))
        ]
        expected_parent = None
        if strict_supersets:
            # the nesting order is a forest, so the minimal superset is unique
            minimal = [
                q
                for q in strict_supersets
                if not any(
                    _piece_nested(t.pieces[z], t.pieces[q], dom) and z != q
                    for z in strict_supersets
                )
            ]
            if len(minimal) != 1:
                violations.append(
                    Violation("forest", (p.id,), f"ambiguous enclosing pieces {sorted(minimal)}")
                )
                continue
            expected_parent = minimal[0]
        if p.parent != expected_parent:
            violations.append(
                Violation(
                    "forest",
                    (p.id,),
                    f"parent link {p.parent} but nesting says {expected_parent}",
                )
            )
        expected_children = sorted(
            q.id for q in pieces if q.parent == p.id and q.id != p.id
        )
        if sorted(p.children) != expected_children:
            violations.append(
                Violation(
                    "forest",
                    (p.id,),
                    f"children {sorted(p.children)} disagree with parent links {expected_children}",
                )
            )

    return ToastReport(not violations, violations)


def region_blocks(region: Region, domain: TorusDomain):
    """Contiguous index blocks (tuples of slices) covering a box region.

    A wrapping box splits into at most 2 runs per axis, so at most 2^d
    blocks; each block can be used directly as a basic ndarray index.
    """
    if not isinstance(region, Box):
        raise ToastError("blocks are only defined for box regions")
    per_axis = [
        interval_segments(region.interval(j), domain.sides[j]) for j in range(domain.d)
    ]
    blocks = [()]
    for segs in per_axis:
        blocks = [b + (slice(lo, hi),) for b in blocks for (lo, hi) in segs]
    return blocks


def maximal_internal_pieces(t: Toast, piece_id: int) -> list[int]:
    """Children of a piece in the nesting forest, sorted by id."""
    return sorted(t.piece(piece_id).children)


def iteration_order(t: Toast) -> list[int]:
    """Post-order walk of the nesting forest: innermost pieces first."""
    order: list[int] = []

    def visit(pid: int) -> None:
        for child in sorted(t.pieces[pid].children):
            visit(child)
        order.append(pid)

    for root in t.roots():
        visit(root)
    if len(order) != len(t.pieces):
        raise ToastError("parent links do not form a forest over all pieces")
    return order


# ---------------------------------------------------------------------------
# generation

@dataclass(frozen=True)
class GenPolicy:
    """Knobs for the random box-placement generator."""

    children_per_piece: int = 2
    min_extent: int = 4
    max_extent: int | None = None
    max_tries: int = 200


def generate(
    domain: TorusDomain,
    separation: int,
    levels: int,
    seed: int,
    policy: GenPolicy | None = None,
) -> Toast:
    """Random toast: full-torus top piece plus `levels` generations of nested boxes.

    Each placed box keeps its separation-ball inside its parent and stays
    more than `separation` apart from its siblings; positions and extents
    are drawn by rejection sampling from a single seeded stream, so the
    result is a deterministic function of the arguments.  The first child
    of every parent always fits by construction; later siblings that fail
    the retry cap are skipped.
    """
    policy = policy or GenPolicy()
    if levels < 0:
        raise ToastError("levels must be nonnegative")
    if separation < 1:
        raise ToastError("separation radius must be positive")
    if policy.min_extent < 1 or policy.children_per_piece < 1:
        raise ToastError("policy extents and child counts must be positive")

    r = separation
    # extent needed at each level so a chain of descendants still fits
    need = {lv: policy.min_extent + 2 * r * (levels - lv) for lv in range(1, levels + 1)}
    if levels >= 1:
        top_cap = min(domain.sides) - 2 * r - 1
        if need[1] > top_cap:
            raise SizingError(
                f"sides {domain.sides} too small: level-1 boxes need extent >= {need[1]} "
                f"but at most {top_cap} fits once the {r}-margin is reserved"
            )

    rng = random.Random(seed)
    top = ToastPiece(0, Box(tuple(0 for _ in domain.sides), domain.sides))
    pieces = {0: top}
    next_id = 1
    frontier = [top]

    for level in range(1, levels + 1):
        new_frontier = []
        for parent in frontier:
            parent_box = parent.region
            assert isinstance(parent_box, Box)
            placed: list[Box] = []
            for child_idx in range(policy.children_per_piece):
                box = _try_place(
                    rng, domain, parent_box, placed, r, need[level], policy, level
                )
                if box is None:
                    break  # parent is too crowded for another sibling
                placed.append(box)
                piece = ToastPiece(next_id, box, parent=parent.id)
                pieces[next_id] = piece
                parent.children.append(next_id)
                next_id += 1
                new_frontier.append(piece)
        frontier = new_frontier

    toast = Toast(domain, r, pieces)
    report = validate(toast)
    if not report.ok:
        raise ToastError(
            "generator produced an invalid toast: " + "; ".join(map(str, report.violations))
        )
    return toast


def _try_place(
    rng: random.Random,
    domain: TorusDomain,
    parent: Box,
    siblings: list[Box],
    r: int,
    min_extent: int,
    policy: GenPolicy,
    level: int,
) -> Box | None:
    """Sample a box whose r-ball stays inside the parent, > r from siblings."""
    caps = []
    for j in range(domain.d):
        s = domain.sides[j]
        m = parent.extent[j]
        cap = s - 2 * r - 1 if m >= s else m - 2 * r
        if policy.max_extent is not None:
            cap = min(cap, policy.max_extent)
        if cap < min_extent:
            raise SizingError(
                f"level-{level} boxes need extent >= {min_extent} on axis {j} "
                f"but the parent only admits {cap}"
            )
        caps.append(cap)

    tries = policy.max_tries if siblings else 1
    for _ in range(tries):
        extent = tuple(rng.randint(min_extent, caps[j]) for j in range(domain.d))
        lo = []
        for j in range(domain.d):
            s = domain.sides[j]
            if parent.extent[j] >= s:
                lo.append(rng.randrange(s))
            else:
                slack = parent.extent[j] - (extent[j] + 2 * r)
                lo.append((parent.lo[j] + r + rng.randint(0, slack)) % s)
        box = Box(tuple(lo), extent)
        if all(box_distance(box, other, domain) > r for other in siblings):
            return box
    return None
