"""The constructive (2^d - 1)-polychromatic coloring pipeline.

Strategy: color each toast piece, innermost first.  A piece's bulk gets a
repetitive parity template anchored at a canonical root; around every
already-colored internal piece a halo is split into width-2d distance
shells, and the shells carry a morphing schedule of cube labelings that
slides the inner piece's template into the outer one a single parity
class at a time.  A unit cube never straddles more than two consecutive
shells, and two consecutive shell labelings agree except on one parity
class, so every cube ends up showing all colors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubepath import CubeLabeling, connect, is_surjective
from .grid import DomainError, Labeling, TorusDomain, Vertex, VertexSet, graph_dist, is_polychromatic
from .toast import (
    Box,
    Toast,
    ToastError,
    interval_dilate,
    interval_dist_vector,
    interval_segments,
    iteration_order,
    region_blocks,
    validate,
)

__all__ = [
    "PlanError",
    "RepetitiveTemplate",
    "ColoringPlan",
    "PlanReport",
    "default_thickening",
    "default_separation",
    "shell_count",
    "choose_root",
    "parity_offset",
    "parity_index",
    "shell_index",
    "make_plan",
    "paint",
    "build_coloring",
    "verify_plan_invariants",
]

# Per-vertex ownership arrays are materialized during plan verification.
VERIFY_LIMIT = 1 << 26


class PlanError(ValueError):
    """Parameters that violate the coloring plan's geometric preconditions."""


def default_thickening(d: int) -> int:
    """Halo radius around internal pieces: one width-2d shell per morphing slot."""
    return (1 << (d + 2)) * d


def default_separation(d: int) -> int:
    """Piece separation that leaves room for two halos plus a cube diameter."""
    return ((1 << (d + 3)) + 1) * d


def shell_count(d: int) -> int:
    """Number of shell indices (0 through 2^(d+1))."""
    return (1 << (d + 1)) + 1


def choose_root(K: VertexSet) -> Vertex:
    """Canonical anchor of a cell set: its lexicographically least vertex."""
    if not K.cells:
        raise DomainError("cannot choose a root of an empty set")
    return min(K.cells)


def _region_root(region, domain: TorusDomain) -> Vertex:
    if isinstance(region, Box):
        return region.min_vertex(domain)
    return min(region)


def parity_offset(root: Vertex, x: Vertex) -> tuple[int, ...]:
    """Coordinatewise parity of x relative to the root: (x - root) mod 2."""
    return tuple((a - b) % 2 for a, b in zip(x, root))


def parity_index(root: Vertex, x: Vertex) -> int:
    """Parity offset packed into a d-bit cube-vertex index (bit i = axis i)."""
    idx = 0
    for i, (a, b) in enumerate(zip(x, root)):
        idx |= ((a - b) & 1) << i
    return idx


@dataclass(frozen=True)
class RepetitiveTemplate:
    """A labeling that factors through parity: color(x) = base(parity of x - root)."""

    base: CubeLabeling
    root: Vertex

    def __post_init__(self):
        if not is_surjective(self.base):
            raise PlanError(f"template base {self.base.values} is not surjective")

    def color_at(self, x: Vertex) -> int:
        return self.base.values[parity_index(self.root, x)]


def template_color(t: RepetitiveTemplate, K: VertexSet, x: Vertex) -> int:
    """Color of x under the piece template (K fixes the chart; any x works)."""
    return t.color_at(x)


def shell_index(L: VertexSet, x: Vertex, thickening: int, width: int | None = None) -> int:
    """Which distance shell of the halo around L the vertex x falls in.

    Shells have width 2d; the outermost index is clamped so the whole halo
    maps onto the available morphing slots.
    """
    d = L.domain.d
    width = width or 2 * d
    dist = graph_dist(L, x)
    if dist == 0:
        raise PlanError(f"{x} lies inside the piece, not in its halo")
    if dist > thickening:
        raise PlanError(f"{x} at distance {dist} is outside the {thickening}-halo")
    return min(dist // width, shell_count(d) - 1)


@dataclass
class ColoringPlan:
    """Everything `paint` needs, a deterministic function of (toast, base, thickening)."""

    toast: Toast
    base: CubeLabeling
    thickening: int
    roots: dict[int, Vertex]
    shell_paths: dict[int, list[CubeLabeling]]  # child piece id -> padded schedule

    @property
    def domain(self) -> TorusDomain:
        return self.toast.domain

    @property
    def num_colors(self) -> int:
        return (1 << self.domain.d) - 1

    @property
    def shell_width(self) -> int:
        return 2 * self.domain.d

    def shell_table(self, child_id: int) -> np.ndarray:
        """(shell, parity-index) -> color matrix for one halo."""
        return np.array([c.values for c in self.shell_paths[child_id]], dtype=np.uint8)


def make_plan(toast: Toast, base: CubeLabeling, thickening: int | None = None) -> ColoringPlan:
    """Check the geometric preconditions and precompute roots and shell schedules."""
    d = toast.domain.d
    if base.d != d:
        raise PlanError(f"base labeling has dimension {base.d}, domain has {d}")
    if not is_surjective(base):
        raise PlanError(f"base labeling {base.values} is not surjective")
    if thickening is None:
        thickening = default_thickening(d)
    width = 2 * d
    slots = shell_count(d)
    if thickening % width != 0:
        raise PlanError(f"thickening {thickening} must be a multiple of the shell width {width}")
    if thickening // width < slots - 1:
        raise PlanError(
            f"thickening {thickening} leaves fewer than {slots - 1} shells of width {width}"
        )
    if toast.separation < 2 * thickening + d:
        raise PlanError(
            f"separation {toast.separation} below 2*{thickening} + {d}; halos could collide"
        )
    report = validate(toast)
    if not report.ok:
        raise PlanError(
            "toast fails validation: " + "; ".join(str(v) for v in report.violations)
        )

    roots = {
        pid: _region_root(piece.region, toast.domain) for pid, piece in toast.pieces.items()
    }
    shell_paths: dict[int, list[CubeLabeling]] = {}
    for pid, piece in toast.pieces.items():
        for child_id in sorted(piece.children):
            # the child's template read in the parent's parity chart is the
            # base translated by the child root's parity offset
            shift = parity_index(roots[pid], roots[child_id])
            inner = base.translate(shift)
            path = connect(inner, base)
            padded = path.steps + [base] * (slots - len(path.steps))
            shell_paths[child_id] = padded
    return ColoringPlan(toast, base, thickening, roots, shell_paths)


# ---------------------------------------------------------------------------
# painting

def _fill_template_box(data: np.ndarray, region: Box, root: Vertex, base_values, domain):
    base = list(base_values)
    d = domain.d
    for block in region_blocks(region, domain):
        for z in range(1 << d):
            idx = []
            empty = False
            for j, sl in enumerate(block):
                want = (root[j] + ((z >> j) & 1)) % 2
                start = sl.start + ((want - sl.start) % 2)
                if start >= sl.stop:
                    empty = True
                    break
                idx.append(slice(start, sl.stop, 2))
            if not empty:
                data[tuple(idx)] = base[z]


def _fill_template_cells(data: np.ndarray, cells, root: Vertex, base_values) -> None:
    for v in cells:
        data[v] = base_values[parity_index(root, v)]


def _cells_distance_field(domain: TorusDomain, cells) -> np.ndarray:
    """Full-domain hop distance to an arbitrary cell set (desk-scale only)."""
    if domain.size > VERIFY_LIMIT:
        raise PlanError("cell-set pieces are only supported on desk-scale domains")
    dist = np.full(domain.sides, np.iinfo(np.int64).max, dtype=np.int64)
    axis_coords = [np.arange(s) for s in domain.sides]
    for c in cells:
        total = np.zeros((), dtype=np.int64)
        for j, s in enumerate(domain.sides):
            delta = np.abs(axis_coords[j] - c[j])
            axis_d = np.minimum(delta, s - delta)
            shape = [1] * domain.d
            shape[j] = s
            total = total + axis_d.reshape(shape)
        np.minimum(dist, total, out=dist)
    return dist


def _halo_blocks(domain: TorusDomain, region, thickening: int):
    """Yield (block slices, distance-to-region array) covering the halo.

    For a box the halo is scanned block by block over the dilated box,
    with the distance field assembled from per-axis interval distances;
    for a cell set one full-domain block is produced.
    """
    if isinstance(region, Box):
        dvecs = [
            interval_dist_vector(region.interval(j), domain.sides[j]) for j in range(domain.d)
        ]
        dilated = Box(
            tuple(
                interval_dilate(region.interval(j), thickening, domain.sides[j])[0]
                for j in range(domain.d)
            ),
            tuple(
                interval_dilate(region.interval(j), thickening, domain.sides[j])[1]
                for j in range(domain.d)
            ),
        )
        for block in region_blocks(dilated, domain):
            dist = np.zeros((), dtype=np.int64)
            for j, sl in enumerate(block):
                shape = [1] * domain.d
                shape[j] = sl.stop - sl.start
                dist = dist + dvecs[j][sl.start : sl.stop].reshape(shape)
            yield block, dist
    else:
        dist = _cells_distance_field(domain, region)
        yield tuple(slice(0, s) for s in domain.sides), dist


def _block_parity_indices(block, root: Vertex, d: int) -> np.ndarray:
    zidx = np.zeros((), dtype=np.uint8)
    for j, sl in enumerate(block):
        coords = np.arange(sl.start, sl.stop)
        par = ((coords - root[j]) % 2).astype(np.uint8) << j
        shape = [1] * d
        shape[j] = len(coords)
        zidx = zidx + par.reshape(shape)
    return zidx


def _snapshot_region(data: np.ndarray, region, domain: TorusDomain):
    if isinstance(region, Box):
        return [(block, data[block].copy()) for block in region_blocks(region, domain)]
    return [(v, data[v].copy() if hasattr(data[v], "copy") else data[v]) for v in region]


def _restore_region(data: np.ndarray, snapshot) -> None:
    for key, saved in snapshot:
        data[key] = saved


def paint(plan: ColoringPlan) -> Labeling:
    """Run the plan: template fills plus halo shell morphs, innermost pieces first."""
    dom = plan.domain
    d = dom.d
    data = np.zeros(dom.sides, dtype=np.uint8)
    width = plan.shell_width
    slots = shell_count(d)

    for pid in iteration_order(plan.toast):
        piece = plan.toast.piece(pid)
        root = plan.roots[pid]
        snapshots = [
            _snapshot_region(data, plan.toast.piece(cid).region, dom)
            for cid in sorted(piece.children)
        ]

        if isinstance(piece.region, Box):
            _fill_template_box(data, piece.region, root, plan.base.values, dom)
        else:
            _fill_template_cells(data, piece.region, root, plan.base.values)

        for cid in sorted(piece.children):
            table = plan.shell_table(cid)
            child_region = plan.toast.piece(cid).region
            for block, dist in _halo_blocks(dom, child_region, plan.thickening):
                mask = (dist >= 1) & (dist <= plan.thickening)
                if not mask.any():
                    continue
                shells = np.minimum(dist // width, slots - 1)
                zidx = _block_parity_indices(block, root, d)
                colors = table[shells, np.broadcast_to(zidx, shells.shape)]
                view = data[block]
                view[mask] = colors[mask]

        for snap in snapshots:
            _restore_region(data, snap)

    return Labeling(dom, plan.num_colors, data)


def build_coloring(toast: Toast, base: CubeLabeling, thickening: int | None = None) -> Labeling:
    """Full pipeline: plan the roots and shell schedules, then paint the torus."""
    return paint(make_plan(toast, base, thickening))


# ---------------------------------------------------------------------------
# plan verification

@dataclass
class PlanViolation:
    kind: str
    where: Vertex
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] at {self.where}: {self.message}"


@dataclass
class PlanReport:
    ok: bool
    cubes_total: int
    exterior_cubes: int
    gap_cubes: int
    violations: list[PlanViolation]

    def __bool__(self) -> bool:
        return self.ok


def _ownership_arrays(plan: ColoringPlan):
    """Recompute which vertices are template bulk vs halo shells, as in paint."""
    dom = plan.domain
    owner = np.full(dom.sides, -1, dtype=np.int32)  # piece whose template colors the vertex
    gap = np.full(dom.sides, -1, dtype=np.int32)  # child id whose halo holds the vertex
    shell = np.full(dom.sides, -1, dtype=np.int16)
    width = plan.shell_width
    slots = shell_count(dom.d)

    for pid in iteration_order(plan.toast):
        piece = plan.toast.piece(pid)
        snaps = [
            (
                _snapshot_region(owner, plan.toast.piece(cid).region, dom),
                _snapshot_region(gap, plan.toast.piece(cid).region, dom),
                _snapshot_region(shell, plan.toast.piece(cid).region, dom),
            )
            for cid in sorted(piece.children)
        ]
        if isinstance(piece.region, Box):
            for block in region_blocks(piece.region, dom):
                owner[block] = pid
                gap[block] = -1
                shell[block] = -1
        else:
            for v in piece.region:
                owner[v] = pid
                gap[v] = -1
                shell[v] = -1
        for cid in sorted(piece.children):
            child_region = plan.toast.piece(cid).region
            for block, dist in _halo_blocks(dom, child_region, plan.thickening):
                mask = (dist >= 1) & (dist <= plan.thickening)
                if not mask.any():
                    continue
                shells = np.minimum(dist // width, slots - 1).astype(np.int16)
                ov = owner[block]
                gv = gap[block]
                sv = shell[block]
                ov[mask] = -1
                gv[mask] = cid
                sv[mask] = np.broadcast_to(shells, sv.shape)[mask]
        for so, sg, ss in snaps:
            _restore_region(owner, so)
            _restore_region(gap, sg)
            _restore_region(shell, ss)
    return owner, gap, shell


def _cube_stack(arr: np.ndarray, d: int) -> np.ndarray:
    """Stack of the 2^d cube-corner translates of arr (axis 0 enumerates corners)."""
    layers = []
    for eps in range(1 << d):
        shift = tuple(-((eps >> j) & 1) for j in range(d))
        layers.append(np.roll(arr, shift, axis=tuple(range(d))))
    return np.stack(layers)


def verify_plan_invariants(plan: ColoringPlan, c: Labeling, max_witnesses: int = 8) -> PlanReport:
    """Re-derive the construction's structure and check it cube by cube.

    For every unit cube: if it touches no halo, all its vertices must carry
    one piece's template colors; otherwise it must touch exactly one halo
    and span at most two consecutive shells.  Every cube must show all
    colors (delegated to the polychromatic checker).
    """
    dom = plan.domain
    if dom.size > VERIFY_LIMIT:
        raise PlanError(
            f"plan verification materializes ownership arrays; domain of {dom.size} "
            "vertices is past the limit (use the polychromatic checker alone)"
        )
    if c.domain != dom:
        raise PlanError("labeling domain does not match the plan")
    d = dom.d
    owner, gap, shell = _ownership_arrays(plan)
    violations: list[PlanViolation] = []

    def add(kind: str, coords: np.ndarray, message: str) -> None:
        for v in coords[:max_witnesses]:
            violations.append(PlanViolation(kind, tuple(int(a) for a in v), message))

    # template bulk must match each piece's repetitive pattern exactly
    base_arr = np.array(plan.base.values, dtype=np.int64)
    grids = np.indices(dom.sides)
    for pid in sorted(plan.toast.pieces):
        root = plan.roots[pid]
        zidx = np.zeros(dom.sides, dtype=np.int64)
        for j in range(d):
            zidx += ((grids[j] - root[j]) % 2) << j
        expected = base_arr[zidx]
        bad = (owner == pid) & (c.data != expected)
        if bad.any():
            add("template-mismatch", np.argwhere(bad), f"piece {pid} bulk off-template")

    big = np.int32(1 << 30)
    gaps = _cube_stack(gap, d)
    gap_max = gaps.max(axis=0)
    gap_min_pos = np.where(gaps < 0, big, gaps).min(axis=0)
    meets_gap = gap_max >= 0
    multi = meets_gap & (gap_min_pos != gap_max)
    if multi.any():
        add("multi-halo", np.argwhere(multi), "cube touches two different halos")

    shells = _cube_stack(shell, d).astype(np.int32)
    smax = shells.max(axis=0)
    smin = np.where(shells < 0, big, shells).min(axis=0)
    span_bad = meets_gap & (smax - smin > 1)
    if span_bad.any():
        add("shell-span", np.argwhere(span_bad), "cube spans non-consecutive shells")

    owners = _cube_stack(owner, d)
    omax = owners.max(axis=0)
    omin = owners.min(axis=0)
    mixed = (~meets_gap) & (omin != omax)
    if mixed.any():
        add("mixed-bulk", np.argwhere(mixed), "halo-free cube mixes two piece templates")

    poly = is_polychromatic(c, plan.num_colors)
    if not poly.ok:
        w = poly.witness
        violations.append(
            PlanViolation("not-surjective", w.base if w else (0,) * d, poly.reason)
        )

    gap_cubes = int(meets_gap.sum())
    return PlanReport(
        ok=not violations,
        cubes_total=dom.size,
        exterior_cubes=dom.size - gap_cubes,
        gap_cubes=gap_cubes,
        violations=violations,
    )
