"""Combinatorial outer approximations of continuous maps.

The minimal map of a system sends a cell to the cells its image touches;
the rho-minimal map inflates the image first.  Any map enclosing the minimal
map is an outer approximation (the image of each cell lands in the interior
of the image cells' union), and sequences of approximations on finer and
finer grids converge when both the grid diameter and the inflation tend to
zero.  This module builds such maps and sequences (optionally as a genuine
cofiltration, monotone across refinements) and verifies the enclosure laws
behind them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .dynamics import CellSet, MultivaluedMap
from .grid import Box, BoxUnion, Grid, to_frac
from .systems import BoxImageOracle, OracleError


def minimal_map(grid: Grid, oracle: BoxImageOracle) -> MultivaluedMap:
    """Cells touched by the image of each cell.  Errors if the oracle sends
    a cell outside the phase space (the map must target it)."""
    return rho_minimal_map(grid, oracle, 0)


def rho_minimal_map(grid: Grid, oracle: BoxImageOracle, rho) -> MultivaluedMap:
    rho = to_frac(rho)
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    forward = []
    for cell in range(grid.n):
        boxes = oracle(grid.cell_box(cell))
        for b in boxes:
            if not grid.domain.contains_box(b):
                raise OracleError(
                    f"image of cell {cell} leaves the domain: {b.to_json()}"
                )
        if rho:
            boxes = tuple(b.inflate(rho) for b in boxes)
        forward.append(grid.cov(BoxUnion(boxes)).indices())
    return MultivaluedMap(grid.n, forward)


def encloses(big: MultivaluedMap, small: MultivaluedMap) -> bool:
    """Pointwise enclosure: every image of ``small`` inside that of ``big``.
    This is the partial order on maps over a fixed grid."""
    if big.n != small.n:
        raise ValueError("maps live on different grids")
    return all(s & ~b == 0 for s, b in zip(small._fwd_masks, big._fwd_masks))


def is_outer_approximation(F: MultivaluedMap, grid: Grid, oracle: BoxImageOracle) -> bool:
    """Whether each cell's image lands in the interior of its image cells:
    equivalent to enclosing the minimal map."""
    if not oracle.guaranteed:
        raise ValueError("outer approximation check requires a certified oracle")
    return encloses(F, minimal_map(grid, oracle))


def is_weak_outer_approximation(F: MultivaluedMap, grid: Grid, oracle: BoxImageOracle) -> bool:
    """Weak variant: the cell image must land in the interior of the
    forward-reachable closure (paths of length >= 0) instead of the one-step
    image."""
    if not oracle.guaranteed:
        raise ValueError("weak outer approximation check requires a certified oracle")
    for cell in range(grid.n):
        needed = grid.cov(BoxUnion(oracle(grid.cell_box(cell))))
        reach = F.forward_closure(CellSet.from_indices(grid.n, [cell]))
        if not needed.issubset(reach):
            return False
    return True


# ---------------------------------------------------------------------------
# iterate enclosure


@dataclass
class EnclosureReport:
    passed: bool
    certified: bool
    k: int
    eps: float
    direction: str
    failures: list[int] = field(default_factory=list)
    max_excess: float = 0.0


def _union_1d(intervals: list[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    ivs = sorted(intervals)
    out: list[list[Fraction]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def _excess_1d(cell: Box, targets: list[tuple[Fraction, Fraction]]) -> Fraction:
    """How far the interval ``cell`` sticks out of the target union: the
    smallest inflation of the union that would contain it."""
    a, b = cell.lo[0], cell.hi[0]
    worst = Fraction(0)
    for x in (a, b, *[(t1 + s0) / 2 for (_, t1), (s0, _) in zip(targets, targets[1:]) if a < (t1 + s0) / 2 < b]):
        d = min(max(Fraction(0), lo - x, x - hi) for lo, hi in targets)
        worst = max(worst, d)
    return worst


def iterate_enclosure_check(
    F: MultivaluedMap,
    grid: Grid,
    oracle: BoxImageOracle,
    k: int,
    eps,
    direction: str = "forward",
    samples: int = 256,
) -> EnclosureReport:
    """Check that k-step combinatorial images stay within eps of the true
    k-step images.

    Forward: the true image of each cell is tracked by iterating the range
    oracle (exact for the certified built-ins), and every cell of the k-step
    combinatorial image must lie within eps of it.  Backward: the preimage is
    estimated by dense forward sampling, so the result is heuristic and the
    report is flagged not certified."""
    if k < 1:
        raise ValueError("k must be >= 1")
    eps = to_frac(eps)
    n = grid.n
    report = EnclosureReport(
        passed=True,
        certified=oracle.guaranteed and direction == "forward",
        k=k,
        eps=float(eps),
        direction=direction,
    )

    if direction == "forward":
        for cell in range(n):
            ranges = [grid.cell_box(cell)]
            for _ in range(k):
                ranges = [img for b in ranges for img in oracle(b)]
                if grid.domain.dim == 1:
                    ranges = [Box((a,), (b,)) for a, b in _union_1d([(x.lo[0], x.hi[0]) for x in ranges])]
            comb = CellSet.from_indices(n, [cell])
            for _ in range(k):
                comb = F.image(comb)
            if grid.domain.dim == 1:
                targets = _union_1d([(b.lo[0], b.hi[0]) for b in ranges])
                worst = Fraction(0)
                for c in comb:
                    worst = max(worst, _excess_1d(grid.cell_box(c), targets))
                report.max_excess = max(report.max_excess, float(worst))
                if worst > eps:
                    report.passed = False
                    report.failures.append(cell)
            else:
                union = BoxUnion(ranges)
                for c in comb:
                    cb = grid.cell_box(c)
                    d2 = min(cb.sup_dist2(t) for t in union.boxes)
                    report.max_excess = max(report.max_excess, math.sqrt(float(d2)))
                    if d2 > eps * eps:
                        report.passed = False
                        report.failures.append(cell)
                        break
        return report

    if direction != "backward":
        raise ValueError("direction must be 'forward' or 'backward'")
    report.certified = False
    # dense forward sampling: points whose k-step float orbit enters a cell
    # estimate its k-step preimage
    per_axis = max(2, round(samples ** (1 / grid.domain.dim)))
    from itertools import product as _product

    axes = []
    for a, b, cnt in zip(grid.domain.lo, grid.domain.hi, [per_axis] * grid.domain.dim):
        fa, fb = float(a), float(b)
        axes.append([fa + (fb - fa) * i / (cnt - 1) for i in range(cnt)])
    pts = [p for p in _product(*axes)]
    orbit_cell: dict[int, set[int]] = {}
    for p in pts:
        x = p if grid.domain.dim > 1 else p[0]
        ok = True
        for _ in range(k):
            try:
                x = oracle.point(x)
            except (OracleError, ValueError):
                ok = False
                break
        if not ok:
            continue
        end = tuple(x) if isinstance(x, (tuple, list)) else (x,)
        start_cells = grid.cov(Box.point(p))
        end_cells = grid.cov(Box.point([float(v) for v in end]))
        for ec in end_cells:
            orbit_cell.setdefault(ec, set()).update(start_cells)
    pad = to_frac(2 * grid.diam())
    for cell in range(n):
        comb = CellSet.from_indices(n, [cell])
        for _ in range(k):
            comb = F.preimage(comb)
        if not comb:
            continue
        pre_cells = orbit_cell.get(cell, set())
        if not pre_cells:
            report.failures.append(cell)
            report.passed = False
            continue
        pre_union = BoxUnion([grid.cell_box(c) for c in pre_cells]).inflate(pad)
        for c in comb:
            cb = grid.cell_box(c)
            d2 = min(cb.sup_dist2(t) for t in pre_union.boxes)
            report.max_excess = max(report.max_excess, math.sqrt(float(d2)))
            if d2 > eps * eps:
                report.passed = False
                report.failures.append(cell)
                break
    return report


# ---------------------------------------------------------------------------
# common refinement of maps


def common_refinement_map(
    FA: MultivaluedMap, gridA: Grid, FB: MultivaluedMap, gridB: Grid
) -> tuple[MultivaluedMap, Grid]:
    """Meet of two maps on the common refinement grid: a fine cell maps to
    the fine cells allowed by both coarse images."""
    if gridA.domain != gridB.domain:
        raise ValueError("common refinement needs a common domain")
    fine = gridA.common_refinement(gridB)
    expandA = [fine.children_mask(gridA, c) for c in range(gridA.n)]
    expandB = [fine.children_mask(gridB, c) for c in range(gridB.n)]
    maskA = [0] * gridA.n
    for c in range(gridA.n):
        m = 0
        for w in FA.forward[c]:
            m |= expandA[w]
        maskA[c] = m
    maskB = [0] * gridB.n
    for c in range(gridB.n):
        m = 0
        for w in FB.forward[c]:
            m |= expandB[w]
        maskB[c] = m
    forward = []
    for cell in range(fine.n):
        a = fine.parent_cell(gridA, cell)
        b = fine.parent_cell(gridB, cell)
        bits = maskA[a] & maskB[b]
        forward.append([i for i in CellSet(fine.n, bits)])
    return MultivaluedMap(fine.n, forward), fine


def map_order_leq(
    Ffine: MultivaluedMap, gridfine: Grid, Fcoarse: MultivaluedMap, gridcoarse: Grid
) -> bool:
    """The refinement order on maps: every fine image sits inside the coarse
    image of the containing cell (checked atom by atom, which generates the
    general condition)."""
    if not gridfine.is_refinement_of(gridcoarse):
        return False
    for coarse_cell in range(gridcoarse.n):
        allowed = 0
        for w in Fcoarse.forward[coarse_cell]:
            allowed |= gridfine.children_mask(gridcoarse, w)
        children = gridfine.children_mask(gridcoarse, coarse_cell)
        img = Ffine.image(CellSet(gridfine.n, children))
        if img.bits & ~allowed:
            return False
    return True


# ---------------------------------------------------------------------------
# convergent sequences


@dataclass
class Level:
    grid: Grid
    F: MultivaluedMap
    rho: Fraction
    squeeze_ok: bool
    cofilt_ok: bool | None = None


@dataclass
class ApproxSequence:
    """Outer approximations of one system on increasingly fine grids, with
    per-level squeeze certificates; optionally a cofiltration of maps."""

    oracle: BoxImageOracle
    levels: list[Level]
    cofiltered: bool

    @property
    def domain(self) -> Box:
        return self.levels[0].grid.domain

    def level(self, i: int) -> Level:
        return self.levels[i]

    def __len__(self):
        return len(self.levels)

    def is_convergent(self) -> bool:
        diams = [lv.grid.diam2() for lv in self.levels]
        rhos = [lv.rho for lv in self.levels]
        return all(b < a for a, b in zip(diams, diams[1:])) and all(
            b < a for a, b in zip(rhos, rhos[1:])
        )


def default_rho(depth: int) -> Fraction:
    return Fraction(1, 1 << (depth + 1))


def build_sequence(
    oracle: BoxImageOracle,
    depths: list[int],
    rhos=None,
    cofiltered: bool = False,
    check_squeeze: bool = True,
) -> ApproxSequence:
    """Per-level rho-minimal maps; with ``cofiltered`` each level is met with
    the previous level's map carried to the finer grid, which makes the maps
    monotone across refinements (this does not come for free from refining
    the grids)."""
    if sorted(depths) != list(depths) or len(set(depths)) != len(depths):
        raise ValueError("depths must be strictly increasing")
    if rhos is None:
        rhos = [default_rho(d) for d in depths]
    rhos = [to_frac(r) for r in rhos]
    if len(rhos) != len(depths):
        raise ValueError("one rho per depth required")
    levels: list[Level] = []
    for depth, rho in zip(depths, rhos):
        grid = Grid(oracle.domain, depth)
        F_rho = rho_minimal_map(grid, oracle, rho)
        F = F_rho
        cofilt_ok = None
        if cofiltered and levels:
            prev = levels[-1]
            coarse_img = [0] * prev.grid.n
            for c in range(prev.grid.n):
                m = 0
                for w in prev.F.forward[c]:
                    m |= grid.children_mask(prev.grid, w)
                coarse_img[c] = m
            forward = []
            for cell in range(grid.n):
                allowed = coarse_img[grid.parent_cell(prev.grid, cell)]
                forward.append(list(CellSet(grid.n, F_rho._fwd_masks[cell] & allowed)))
            F = MultivaluedMap(grid.n, forward)
            cofilt_ok = map_order_leq(F, grid, prev.F, prev.grid)
        squeeze_ok = True
        if check_squeeze:
            F_o = minimal_map(grid, oracle)
            squeeze_ok = encloses(F, F_o) and encloses(F_rho, F)
        levels.append(Level(grid, F, rho, squeeze_ok, cofilt_ok))
    return ApproxSequence(oracle=oracle, levels=levels, cofiltered=cofiltered)
