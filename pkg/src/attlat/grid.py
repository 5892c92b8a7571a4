"""Dyadic box grids over a compact rectangle, with exact rational geometry.

A grid of per-axis depth k subdivides each axis of the domain into 2^k equal
closed cells.  Cell coordinates are exact rationals, so the predicates that
the regular-closed set algebra depends on (touching, interior overlap,
regular disjointness) are decided exactly; floats entering from outside are
converted to the rationals they already are.

Box unions double as the geometric currency: evaluation of a cell set, cover
of a set, inflation, distance, and a conservative closed difference used by
the separation searches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .dynamics import CellSet


def to_frac(x) -> Fraction:
    """Exact conversion: ints, floats (which are dyadic), strings, Fractions."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float)):
        return Fraction(x)
    return Fraction(str(x))


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Boxes


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box with exact rational corners; degenerate
    (point or lower-dimensional) boxes are allowed as geometric data, but
    grid domains must have positive extent on every axis."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self):
        lo = tuple(to_frac(x) for x in self.lo)
        hi = tuple(to_frac(x) for x in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("dimension mismatch")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box with lo > hi")

    @classmethod
    def make(cls, lo, hi) -> "Box":
        lo = (lo,) if not isinstance(lo, (tuple, list)) else tuple(lo)
        hi = (hi,) if not isinstance(hi, (tuple, list)) else tuple(hi)
        return cls(tuple(to_frac(x) for x in lo), tuple(to_frac(x) for x in hi))

    @classmethod
    def point(cls, coords) -> "Box":
        return cls.make(coords, coords)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def intersects(self, other: "Box") -> bool:
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersection(self, other: "Box") -> "Box | None":
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, d) for b, d in zip(self.hi, other.hi))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains_point(self, pt) -> bool:
        pt = [to_frac(x) for x in (pt if isinstance(pt, (tuple, list)) else (pt,))]
        return all(a <= x <= b for a, x, b in zip(self.lo, pt, self.hi))

    def inflate(self, eps) -> "Box":
        """Per-axis inflation (the box neighborhood used throughout; in one
        dimension it is exactly the metric ball around the box)."""
        e = to_frac(eps)
        if e < 0:
            raise ValueError("negative inflation")
        return Box(tuple(a - e for a in self.lo), tuple(b + e for b in self.hi))

    def hull(self, other: "Box") -> "Box":
        return Box(
            tuple(min(a, c) for a, c in zip(self.lo, other.lo)),
            tuple(max(b, d) for b, d in zip(self.hi, other.hi)),
        )

    def dist2(self, other: "Box") -> Fraction:
        """Squared Euclidean distance between the closed boxes (0 if they
        touch)."""
        total = Fraction(0)
        for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi):
            gap = max(Fraction(0), c - b, a - d)
            total += gap * gap
        return total

    def sup_dist2(self, other: "Box") -> Fraction:
        """Squared sup over points x of self of the distance from x to
        ``other``.  The farthest point of a box from a convex set is a
        corner, so this is exact."""
        worst = Fraction(0)
        for corner in product(*zip(self.lo, self.hi)):
            d2 = Fraction(0)
            for x, c, d in zip(corner, other.lo, other.hi):
                gap = max(Fraction(0), c - x, x - d)
                d2 += gap * gap
            if d2 > worst:
                worst = d2
        return worst

    def volume(self) -> Fraction:
        v = Fraction(1)
        for a, b in zip(self.lo, self.hi):
            v *= b - a
        return v

    def split_off(self, other: "Box") -> "list[Box]":
        """Pieces of self whose interiors avoid ``other``; together with
        self & other they cover self.  Degenerate pieces are kept, so the
        union of the pieces contains the closure of self minus other."""
        inter = self.intersection(other)
        if inter is None:
            return [self]
        pieces = []
        lo, hi = list(self.lo), list(self.hi)
        for ax in range(self.dim):
            if lo[ax] < inter.lo[ax]:
                plo, phi = lo.copy(), hi.copy()
                phi[ax] = inter.lo[ax]
                pieces.append(Box(tuple(plo), tuple(phi)))
                lo[ax] = inter.lo[ax]
            if inter.hi[ax] < hi[ax]:
                plo, phi = lo.copy(), hi.copy()
                plo[ax] = inter.hi[ax]
                pieces.append(Box(tuple(plo), tuple(phi)))
                hi[ax] = inter.hi[ax]
        return pieces

    def to_json(self) -> dict:
        return {"lo": [_frac_str(a) for a in self.lo], "hi": [_frac_str(b) for b in self.hi]}

    @classmethod
    def from_json(cls, data: dict) -> "Box":
        return cls.make(data["lo"], data["hi"])


class BoxUnion:
    """Finite union of closed boxes.  Set-level predicates are exact for the
    unions this package builds (cells, inflations of cells and points);
    ``difference`` is conservative: it returns closed pieces whose union
    contains the closure of the true difference."""

    def __init__(self, boxes):
        self.boxes = tuple(b for b in boxes if b is not None)
        if self.boxes:
            d = self.boxes[0].dim
            if any(b.dim != d for b in self.boxes):
                raise ValueError("mixed dimensions")

    @classmethod
    def single(cls, lo, hi) -> "BoxUnion":
        return cls([Box.make(lo, hi)])

    @classmethod
    def points(cls, pts) -> "BoxUnion":
        return cls([Box.point(p) for p in pts])

    @property
    def dim(self) -> int:
        return self.boxes[0].dim if self.boxes else 0

    def __bool__(self):
        return bool(self.boxes)

    def __len__(self):
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    def union(self, other: "BoxUnion") -> "BoxUnion":
        return BoxUnion(self.boxes + other.boxes)

    def intersection(self, other: "BoxUnion") -> "BoxUnion":
        out = []
        for a in self.boxes:
            for b in other.boxes:
                c = a.intersection(b)
                if c is not None:
                    out.append(c)
        return BoxUnion(out)

    def intersects(self, other: "BoxUnion") -> bool:
        return any(a.intersects(b) for a in self.boxes for b in other.boxes)

    def inflate(self, eps) -> "BoxUnion":
        return BoxUnion([b.inflate(eps) for b in self.boxes])

    def contains_point(self, pt) -> bool:
        return any(b.contains_point(pt) for b in self.boxes)

    def contains_box(self, box: Box) -> bool:
        """Exact for one-dimensional unions; in higher dimensions a
        conservative cover test via difference."""
        if self.dim == 1 or not self.boxes:
            ivs = _merged_intervals(self)
            return any(a <= box.lo[0] and box.hi[0] <= b for a, b in ivs)
        return not box_difference([box], self.boxes)

    def difference(self, other: "BoxUnion") -> "BoxUnion":
        return BoxUnion(box_difference(list(self.boxes), list(other.boxes)))

    def dist2(self, other: "BoxUnion") -> Fraction:
        if not self.boxes or not other.boxes:
            raise ValueError("distance from an empty union")
        return min(a.dist2(b) for a in self.boxes for b in other.boxes)

    def bounding_box(self) -> Box:
        out = self.boxes[0]
        for b in self.boxes[1:]:
            out = out.hull(b)
        return out

    def volume(self) -> Fraction:
        """Exact for unions of boxes with pairwise disjoint interiors (cells,
        difference pieces); otherwise an upper bound."""
        return sum((b.volume() for b in self.boxes), Fraction(0))

    def to_json(self) -> list:
        return [b.to_json() for b in self.boxes]

    @classmethod
    def from_json(cls, data) -> "BoxUnion":
        return cls([Box.from_json(b) for b in data])

    def __repr__(self):
        return f"BoxUnion({len(self.boxes)} boxes)"


def box_difference(minuend: list[Box], subtrahend: list[Box]) -> list[Box]:
    """Closed pieces covering cl(minuend minus subtrahend); exact (equal to
    the regular-closed difference) when the boxes meet face-to-face, slightly
    conservative otherwise."""
    pieces = list(minuend)
    for w in subtrahend:
        nxt = []
        for p in pieces:
            nxt.extend(p.split_off(w))
        pieces = nxt
    return pieces


def _merged_intervals(u: BoxUnion) -> list[tuple[Fraction, Fraction]]:
    ivs = sorted((b.lo[0], b.hi[0]) for b in u.boxes)
    out: list[list[Fraction]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def hausdorff_dist2_1d(A: BoxUnion, B: BoxUnion) -> Fraction:
    """Exact squared Hausdorff distance between one-dimensional box unions.
    The sup of dist(x, B) over an interval of A is attained at an interval
    endpoint or at the midpoint of a gap of B, all rational points."""
    if A.dim != 1 or B.dim != 1:
        raise ValueError("one-dimensional unions required")

    def directed(u: BoxUnion, v: BoxUnion) -> Fraction:
        vs = _merged_intervals(v)
        gaps = [(vs[i][1], vs[i + 1][0]) for i in range(len(vs) - 1)]

        def dist_to_v(x: Fraction) -> Fraction:
            best = None
            for a, b in vs:
                d = max(Fraction(0), a - x, x - b)
                if best is None or d < best:
                    best = d
            return best

        worst = Fraction(0)
        for a, b in _merged_intervals(u):
            candidates = [a, b]
            for g0, g1 in gaps:
                mid = (g0 + g1) / 2
                if a < mid < b:
                    candidates.append(mid)
            for x in candidates:
                d = dist_to_v(x)
                if d > worst:
                    worst = d
        return worst

    if not A.boxes and not B.boxes:
        return Fraction(0)
    if not A.boxes or not B.boxes:
        raise ValueError("Hausdorff distance with one side empty")
    d = max(directed(A, B), directed(B, A))
    return d * d


# ---------------------------------------------------------------------------
# Grid


class Grid:
    """Uniform dyadic grid on a rectangle: axis a is split into 2^depth[a]
    closed cells.  Cells are indexed in C order (last axis fastest)."""

    def __init__(self, domain: Box, depth):
        if isinstance(depth, int):
            depth = [depth] * domain.dim
        self.domain = domain
        self.depth = tuple(int(k) for k in depth)
        if len(self.depth) != domain.dim:
            raise ValueError("depth arity must match dimension")
        if any(k < 0 for k in self.depth):
            raise ValueError("negative depth")
        if any(a >= b for a, b in zip(domain.lo, domain.hi)):
            raise ValueError("grid domain must have positive extent")
        self.counts = tuple(1 << k for k in self.depth)
        self.widths = tuple(
            (b - a) / c for a, b, c in zip(domain.lo, domain.hi, self.counts)
        )
        self.n = math.prod(self.counts)
        self._strides = []
        s = 1
        for c in reversed(self.counts):
            self._strides.append(s)
            s *= c
        self._strides.reverse()

    # indexing -------------------------------------------------------------

    def coords_of(self, cell: int) -> tuple[int, ...]:
        out = []
        for s, c in zip(self._strides, self.counts):
            out.append((cell // s) % c)
        return tuple(out)

    def cell_of(self, coords) -> int:
        return sum(int(x) * s for x, s in zip(coords, self._strides))

    def cell_box(self, cell: int) -> Box:
        cs = self.coords_of(cell)
        lo = tuple(a + i * w for a, i, w in zip(self.domain.lo, cs, self.widths))
        hi = tuple(a + (i + 1) * w for a, i, w in zip(self.domain.lo, cs, self.widths))
        return Box(lo, hi)

    # geometry <-> combinatorics --------------------------------------------

    def cov(self, geom) -> CellSet:
        """Cells whose closed cell intersects the given box/union; a box
        touching a cell face pulls in both neighbors."""
        boxes = geom.boxes if isinstance(geom, BoxUnion) else (geom,)
        bits = 0
        for box in boxes:
            if box.dim != self.domain.dim:
                raise ValueError("dimension mismatch")
            ranges = []
            empty = False
            for a, wa, cnt, blo, bhi in zip(
                self.domain.lo, self.widths, self.counts, box.lo, box.hi
            ):
                # closed cell [a+j*w, a+(j+1)*w] meets [blo, bhi] iff
                # j >= (blo-a)/w - 1 and j <= (bhi-a)/w
                jlo = max(0, math.ceil((blo - a) / wa - 1))
                jhi = min(cnt - 1, math.floor((bhi - a) / wa))
                if jlo > jhi:
                    empty = True
                    break
                ranges.append(range(jlo, jhi + 1))
            if empty:
                continue
            for coords in product(*ranges):
                bits |= 1 << self.cell_of(coords)
        return CellSet(self.n, bits)

    def evaluate(self, u: CellSet) -> BoxUnion:
        """Union of the closed cells of u, with runs along the last axis
        merged into single boxes."""
        if u.universe != self.n:
            raise ValueError("cell set universe does not match grid")
        boxes = []
        run_start = None
        prev = None
        for cell in u:
            if run_start is not None and cell == prev + 1 and cell % self.counts[-1] != 0:
                prev = cell
                continue
            if run_start is not None:
                boxes.append(self.cell_box(run_start).hull(self.cell_box(prev)))
            run_start = cell
            prev = cell
        if run_start is not None:
            boxes.append(self.cell_box(run_start).hull(self.cell_box(prev)))
        return BoxUnion(boxes)

    def diam2(self) -> Fraction:
        return sum((w * w for w in self.widths), Fraction(0))

    def diam(self) -> float:
        return math.sqrt(float(self.diam2()))

    # refinement -------------------------------------------------------------

    def refine(self, axes=None) -> "Grid":
        if axes is None:
            axes = range(self.domain.dim)
        depth = list(self.depth)
        for a in axes:
            depth[a] += 1
        return Grid(self.domain, depth)

    def is_refinement_of(self, other: "Grid") -> bool:
        return (
            self.domain == other.domain
            and all(a >= b for a, b in zip(self.depth, other.depth))
        )

    def parent_cell(self, coarse: "Grid", cell: int) -> int:
        """The unique cell of the coarser grid containing this cell."""
        if not self.is_refinement_of(coarse):
            raise ValueError("grids are not nested")
        cs = self.coords_of(cell)
        shift = [a - b for a, b in zip(self.depth, coarse.depth)]
        return coarse.cell_of([c >> s for c, s in zip(cs, shift)])

    def children_mask(self, coarse: "Grid", coarse_cell: int) -> int:
        """Mask of this grid's cells inside a coarse cell."""
        if not self.is_refinement_of(coarse):
            raise ValueError("grids are not nested")
        ccs = coarse.coords_of(coarse_cell)
        shift = [a - b for a, b in zip(self.depth, coarse.depth)]
        ranges = [range(c << s, (c + 1) << s) for c, s in zip(ccs, shift)]
        bits = 0
        for coords in product(*ranges):
            bits |= 1 << self.cell_of(coords)
        return bits

    def expand_from(self, coarse: "Grid", u: CellSet) -> CellSet:
        """Re-express a coarse cell set on this grid (same evaluation)."""
        bits = 0
        for cell in u:
            bits |= self.children_mask(coarse, cell)
        return CellSet(self.n, bits)

    def restrict_to(self, coarse: "Grid", u: CellSet) -> CellSet:
        """Coarse cells whose children meet u."""
        bits = 0
        for cell in u:
            bits |= 1 << self.parent_cell(coarse, cell)
        return CellSet(coarse.n, bits)

    def common_refinement(self, other: "Grid") -> "Grid":
        if self.domain != other.domain:
            raise ValueError("common refinement needs a common domain")
        depth = [max(a, b) for a, b in zip(self.depth, other.depth)]
        return Grid(self.domain, depth)

    # cell adjacency ---------------------------------------------------------

    def cells_touch(self, u: CellSet, v: CellSet) -> bool:
        """Whether the closed evaluations |u| and |v| intersect: true iff
        some pair of cells differs by at most one step per axis."""
        if not u or not v:
            return False
        small, big = (u, v) if len(u) <= len(v) else (v, u)
        big_coords = {self.coords_of(c) for c in big}
        deltas = list(product((-1, 0, 1), repeat=self.domain.dim))
        for c in small:
            cs = self.coords_of(c)
            for d in deltas:
                nb = tuple(a + b for a, b in zip(cs, d))
                if nb in big_coords:
                    return True
        return False

    def intersection_is_meet(self, u: CellSet, v: CellSet) -> bool:
        """Whether |u| and |v| intersect exactly in |u & v|, i.e. the point
        set intersection is already regular closed.  Fails exactly when two
        cells outside the common part share a face not covered by it."""
        inter = u & v
        uu, vv = u - inter, v - inter
        if not uu or not vv:
            return True
        eval_inter = self.evaluate(inter)
        vcoords = {self.coords_of(c) for c in vv}
        deltas = [d for d in product((-1, 0, 1), repeat=self.domain.dim) if any(d)]
        for a in uu:
            cs = self.coords_of(a)
            abox = self.cell_box(a)
            for d in deltas:
                nb = tuple(x + y for x, y in zip(cs, d))
                if nb not in vcoords:
                    continue
                face = abox.intersection(self.cell_box(self.cell_of(nb)))
                if face is not None and not eval_inter.contains_box(face):
                    return False
        return True

    @staticmethod
    def dim_nondegenerate(box: Box) -> bool:
        return all(a < b for a, b in zip(box.lo, box.hi))

    # misc -------------------------------------------------------------------

    def regularly_disjoint(self, A: BoxUnion, B: BoxUnion) -> bool:
        """Whether A and B have disjoint interiors (closed sets may share
        faces): the meet of A and B in the regular-closed algebra is empty.
        Interiors relative to the grid domain."""
        return regularly_disjoint(A, B, self.domain)

    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(), "depth": list(self.depth)}

    @classmethod
    def from_json(cls, data: dict) -> "Grid":
        return cls(Box.from_json(data["domain"]), data["depth"])

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.domain == other.domain
            and self.depth == other.depth
        )

    def __repr__(self):
        return f"Grid(domain={self.domain.to_json()}, depth={list(self.depth)})"


def regularly_disjoint(A: BoxUnion, B: BoxUnion, domain: Box | None = None) -> bool:
    """A and int(B) disjoint (equivalently int(A) and B): no box pair
    overlaps with positive volume, and no degenerate box of one lies interior
    to the other.  Interiors are taken relative to ``domain`` when given, so
    boundary faces of the phase space count as interior.  Exact for
    face-aligned unions."""
    for a in A.boxes:
        for b in B.boxes:
            c = a.intersection(b)
            if c is None:
                continue
            if all(x < y for x, y in zip(c.lo, c.hi)):
                return False
    # full-dimension overlaps ruled out; check degenerate boxes sitting
    # inside the other union's interior (e.g. on shared internal faces)
    for a in A.boxes:
        if not Grid.dim_nondegenerate(a) and _degenerate_in_interior(a, B, domain):
            return False
    for b in B.boxes:
        if not Grid.dim_nondegenerate(b) and _degenerate_in_interior(b, A, domain):
            return False
    return True


def _degenerate_in_interior(box: Box, union: BoxUnion, domain: Box | None = None) -> bool:
    """Whether a degenerate box meets the interior of a box union: inflate by
    less than the smallest coordinate gap of the arrangement; the point set
    is interior exactly when the probe (clipped to the domain) is fully
    covered, i.e. the closed difference has zero volume."""
    if not union.boxes:
        return False
    coords: set[Fraction] = set()
    for b in list(union.boxes) + [box] + ([domain] if domain else []):
        coords.update(b.lo)
        coords.update(b.hi)
    vals = sorted(coords)
    gaps = [b - a for a, b in zip(vals, vals[1:]) if b > a]
    theta = min(gaps) / 4 if gaps else Fraction(1, 4)
    probe = box.inflate(theta)
    if domain is not None:
        clipped = probe.intersection(domain)
        if clipped is None:
            return False
        probe = clipped
    leftovers = box_difference([probe], list(union.boxes))
    return sum((p.volume() for p in leftovers), Fraction(0)) == 0


# ---------------------------------------------------------------------------
# Cofiltrations


class Cofiltration:
    """A nested sequence of grids, each refining the previous one."""

    def __init__(self, grids: list[Grid]):
        for coarse, fine in zip(grids, grids[1:]):
            if not fine.is_refinement_of(coarse):
                raise ValueError("grids do not form a refinement chain")
        self.grids = list(grids)

    def __len__(self):
        return len(self.grids)

    def __getitem__(self, i) -> Grid:
        return self.grids[i]

    def is_contracting(self) -> bool:
        return all(
            fine.diam2() < coarse.diam2()
            for coarse, fine in zip(self.grids, self.grids[1:])
        )

    def parent_map(self, fine_level: int, coarse_level: int):
        fine, coarse = self.grids[fine_level], self.grids[coarse_level]
        return lambda cell: fine.parent_cell(coarse, cell)


def grid_from_file(path) -> Grid:
    with open(path) as fh:
        return Grid.from_json(json.load(fh))
