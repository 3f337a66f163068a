"""Finite torus domains and the labeling checkers everything else is tested against.

The domain is a d-dimensional torus with even side lengths.  Vertices are
coordinate tuples, the group acts by coordinatewise translation, and the
graph metric is hop distance in the grid graph (L1 with wrap-around).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

Vertex = tuple[int, ...]

MIN_SIDE = 4


class DomainError(ValueError):
    """Invalid torus geometry or a labeling/domain mismatch."""


def _pick_mask_dtype(k: int):
    for dtype, width in ((np.uint8, 8), (np.uint16, 16), (np.uint32, 32), (np.uint64, 64)):
        if k <= width:
            return dtype
    return None


@dataclass(frozen=True)
class TorusDomain:
    """A product of cyclic groups Z_s0 x ... x Z_s{d-1}, all sides even and >= 4."""

    sides: tuple[int, ...]

    def __post_init__(self):
        sides = tuple(int(s) for s in self.sides)
        object.__setattr__(self, "sides", sides)
        if len(sides) < 1:
            raise DomainError("domain needs at least one axis")
        for s in sides:
            if s < MIN_SIDE:
                raise DomainError(f"side {s} is below the minimum {MIN_SIDE}")
            if s % 2 != 0:
                raise DomainError(f"side {s} is odd; repetitive patterns need even sides")

    @property
    def d(self) -> int:
        return len(self.sides)

    @property
    def size(self) -> int:
        n = 1
        for s in self.sides:
            n *= s
        return n

    def wrap(self, coords: Sequence[int]) -> Vertex:
        if len(coords) != self.d:
            raise DomainError(f"expected {self.d} coordinates, got {len(coords)}")
        return tuple(c % s for c, s in zip(coords, self.sides))

    def act(self, x: Vertex, g: Sequence[int]) -> Vertex:
        """Translate x by the integer vector g, wrapping each coordinate."""
        if len(g) != self.d:
            raise DomainError(f"expected {self.d} shift components, got {len(g)}")
        return tuple((a + b) % s for a, b, s in zip(x, g, self.sides))

    def cube_offsets(self) -> list[Vertex]:
        """The 2^d unit-cube corner offsets, enumerated as a d-bit counter.

        Bit i of the counter is the coefficient of the i-th generator, so
        offset index eps has coordinates ((eps >> i) & 1 for i < d).
        """
        return [tuple((eps >> i) & 1 for i in range(self.d)) for eps in range(1 << self.d)]

    def cube_at(self, x: Vertex) -> tuple[Vertex, ...]:
        """The unit cube based at x: the 2^d vertices x + {0,1}^d, in counter order."""
        return tuple(self.act(x, off) for off in self.cube_offsets())

    def vertices(self) -> Iterator[Vertex]:
        return itertools.product(*(range(s) for s in self.sides))

    def index_of(self, x: Vertex) -> int:
        """Row-major vertex index (last coordinate fastest)."""
        idx = 0
        for c, s in zip(x, self.sides):
            if not 0 <= c < s:
                raise DomainError(f"coordinate {c} outside [0, {s})")
            idx = idx * s + c
        return idx

    def vertex_at(self, idx: int) -> Vertex:
        if not 0 <= idx < self.size:
            raise DomainError(f"index {idx} outside [0, {self.size})")
        coords = []
        for s in reversed(self.sides):
            coords.append(idx % s)
            idx //= s
        return tuple(reversed(coords))

    def axis_distance(self, axis: int, a: int, b: int) -> int:
        """Circular distance between two coordinates on one axis."""
        s = self.sides[axis]
        delta = abs(a - b)
        return min(delta, s - delta)

    def distance(self, x: Vertex, y: Vertex) -> int:
        """Hop distance in the grid graph: sum of circular axis distances."""
        return sum(self.axis_distance(i, a, b) for i, (a, b) in enumerate(zip(x, y)))


@dataclass(frozen=True)
class VertexSet:
    """A finite subset of a torus domain."""

    domain: TorusDomain
    cells: frozenset[Vertex]

    def __post_init__(self):
        object.__setattr__(self, "cells", frozenset(tuple(c) for c in self.cells))
        for c in self.cells:
            if len(c) != self.domain.d or any(not 0 <= v < s for v, s in zip(c, self.domain.sides)):
                raise DomainError(f"cell {c} outside domain {self.domain.sides}")

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, x: Vertex) -> bool:
        return tuple(x) in self.cells


def graph_dist(A: VertexSet, x: Vertex) -> int:
    """Hop distance from x to the nearest vertex of A; 0 iff x is in A."""
    if not A.cells:
        raise DomainError("graph_dist needs a nonempty vertex set")
    return min(A.domain.distance(x, a) for a in A.cells)


def ball(A: VertexSet, radius: int) -> VertexSet:
    """All vertices whose hop distance to A is at most radius."""
    if not A.cells:
        raise DomainError("ball needs a nonempty vertex set")
    if radius < 0:
        raise DomainError("ball radius must be nonnegative")
    dom = A.domain
    seen = set(A.cells)
    frontier = set(A.cells)
    unit = [tuple(int(i == j) for j in range(dom.d)) for i in range(dom.d)]
    for _ in range(radius):
        nxt = set()
        for x in frontier:
            for e in unit:
                for sign in (1, -1):
                    y = dom.act(x, tuple(sign * c for c in e))
                    if y not in seen:
                        seen.add(y)
                        nxt.add(y)
        if not nxt:
            break
        frontier = nxt
    return VertexSet(dom, frozenset(seen))


@dataclass
class Labeling:
    """A total color assignment on a torus domain, stored as an ndarray of shape `sides`."""

    domain: TorusDomain
    k: int
    data: np.ndarray

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"color count {self.k} must be positive")
        arr = np.asarray(self.data)
        if arr.shape != self.domain.sides:
            raise DomainError(f"data shape {arr.shape} does not match sides {self.domain.sides}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.k):
            raise DomainError(f"colors must lie in [0, {self.k})")
        dtype = np.uint8 if self.k <= 256 else np.int64
        self.data = arr.astype(dtype, copy=False)

    @classmethod
    def from_function(cls, domain: TorusDomain, k: int, fn) -> "Labeling":
        data = np.empty(domain.sides, dtype=np.int64)
        for x in domain.vertices():
            data[x] = fn(x)
        return cls(domain, k, data)

    @classmethod
    def from_flat(cls, domain: TorusDomain, k: int, flat: Sequence[int]) -> "Labeling":
        arr = np.asarray(list(flat), dtype=np.int64)
        if arr.size != domain.size:
            raise DomainError(f"flat data has {arr.size} entries, expected {domain.size}")
        return cls(domain, k, arr.reshape(domain.sides))

    @classmethod
    def constant(cls, domain: TorusDomain, k: int, color: int = 0) -> "Labeling":
        return cls(domain, k, np.full(domain.sides, color, dtype=np.int64))

    def color_at(self, x: Vertex) -> int:
        return int(self.data[tuple(x)])

    def to_flat(self) -> list[int]:
        return [int(v) for v in self.data.ravel(order="C")]

    def copy(self) -> "Labeling":
        return Labeling(self.domain, self.k, self.data.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Labeling)
            and self.domain == other.domain
            and self.k == other.k
            and np.array_equal(self.data, other.data)
        )


@dataclass
class CubeWitness:
    """A failing unit cube: its base vertex and the colors it actually contains."""

    base: Vertex
    colors: tuple[int, ...]


@dataclass
class PolychromeResult:
    ok: bool
    reason: str = ""
    witness: CubeWitness | None = None
    cubes_checked: int = 0

    def __bool__(self) -> bool:
        return self.ok


def _cube_color_masks(chunk: np.ndarray, k: int, mask_dtype) -> np.ndarray:
    """OR of per-vertex color bitmasks over each unit cube based in the chunk.

    chunk holds rows [i0, i0+n] along axis 0 (one extra row for the cube lid);
    the remaining axes are full, so wrap-around rolls are exact there.
    """
    bits = (np.uint64(1) << np.arange(k, dtype=np.uint64)).astype(mask_dtype)
    m = bits[chunk]
    acc = m[:-1] | m[1:]
    for axis in range(1, chunk.ndim):
        acc = acc | np.roll(acc, -1, axis=axis)
    return acc


def is_polychromatic(c: Labeling, k: int | None = None, chunk_rows: int = 64) -> PolychromeResult:
    """Check that every unit cube of the domain contains all k colors.

    Scans in slabs along axis 0 so that very large domains are checked
    without materializing the full stack of shifted color arrays.  On
    failure the first offending cube (row-major base order) is reported.
    """
    if k is None:
        k = c.k
    dom = c.domain
    d = dom.d
    if k > (1 << d):
        return PolychromeResult(
            False, reason=f"{k} colors cannot all appear on a cube of {1 << d} vertices"
        )
    mask_dtype = _pick_mask_dtype(k)
    if mask_dtype is None:
        raise DomainError(f"color count {k} too large for the bitmask checker")
    full = mask_dtype((1 << k) - 1)
    data = c.data
    n0 = dom.sides[0]
    checked = 0
    for i0 in range(0, n0, chunk_rows):
        n = min(chunk_rows, n0 - i0)
        rows = np.arange(i0, i0 + n + 1) % n0
        chunk = data.take(rows, axis=0)
        acc = _cube_color_masks(chunk, k, mask_dtype)
        checked += acc.size
        bad = np.argwhere(acc != full)
        if len(bad):
            local = tuple(int(v) for v in bad[0])
            base = ((local[0] + i0) % n0,) + local[1:]
            colors = tuple(sorted({c.color_at(v) for v in dom.cube_at(base)}))
            return PolychromeResult(
                False,
                reason=f"cube at {base} contains colors {colors}, missing some of 0..{k - 1}",
                witness=CubeWitness(base, colors),
                cubes_checked=checked,
            )
    return PolychromeResult(True, cubes_checked=checked)


def is_proper_2_coloring(c: Labeling, axis: int) -> bool:
    """True iff no edge in the given generator direction is monochromatic."""
    if c.k != 2:
        raise DomainError(f"proper 2-coloring check needs k=2, got k={c.k}")
    if not 0 <= axis < c.domain.d:
        raise DomainError(f"axis {axis} outside [0, {c.domain.d})")
    shifted = np.roll(c.data, -1, axis=axis)
    return bool(np.all(shifted != c.data))


def is_invariant(c: Labeling, g: Sequence[int]) -> bool:
    """True iff translating by g leaves the labeling unchanged."""
    if len(g) != c.domain.d:
        raise DomainError(f"expected {c.domain.d} shift components, got {len(g)}")
    shifted = np.roll(c.data, tuple(-int(v) for v in g), axis=tuple(range(c.domain.d)))
    return bool(np.array_equal(shifted, c.data))
