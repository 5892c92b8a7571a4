"""Realization of prescribed attractor/repeller lattices in combinatorial data.

Given a finite repeller lattice presented by its poset of join-irreducibles
with geometric representatives, the general construction picks one
neighborhood radius per irreducible by a halving search over exact box
geometry (each radius must keep the new neighborhood clear of the dual
object, of the blocks already placed, and of the representatives that must
not meet it), covers the half-radius neighborhoods on the first grid level
where all of them are combinatorially repelling, and assembles the lattice
map from the resulting blocks.  The cofiltration variant re-realizes each
irreducible as an eventual backward image at a finer level and carries the
previously built sets across refinements, which upgrades every image from a
repelling set to a backward invariant set.  Attractor-side targets are
always handled by complement duality.

Every lift carries certificates: pairwise disjoint blocks (C1), blocks clear
of foreign representatives (C2), geometric separation of incomparable blocks
(C3), homomorphism and injectivity, and the membership class of every image.
``verify_lift`` re-checks these and adds the containment and limit-agreement
items against a finer reference level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ._core_py import iter_bits
from .approx import ApproxSequence
from .dynamics import CellSet, MultivaluedMap
from .grid import Box, BoxUnion, Grid, hausdorff_dist2_1d, to_frac
from .lattice import Poset, is_well_separated, linear_extension


class LiftError(Exception):
    """Construction failed; carries the violated condition."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}


class TargetError(Exception):
    """Invalid target lattice data."""


KIND_DUAL = {"RSet": "ASet", "ASet": "RSet", "Invset-": "Invset+", "Invset+": "Invset-"}
KIND_FLAG = {
    "RSet": "repelling",
    "ASet": "attracting",
    "Invset-": "backward_invariant",
    "Invset+": "forward_invariant",
}


# ---------------------------------------------------------------------------
# targets


@dataclass
class TargetLattice:
    """A finite attractor or repeller lattice to realize.

    ``poset`` holds the join-irreducibles; ``representatives[p]`` is the
    geometric value at the down-set of p (joins extend it to the whole
    lattice since joins are unions on both sides of the duality);
    ``duals[p]`` is the dual repeller/attractor paired with that value,
    needed by the radius searches.  ``overrides`` may pin values at non
    join-irreducible down-sets and is validated against the join extension.
    The lattice bottom is the empty set.
    """

    poset: Poset
    kind: str
    domain: Box
    representatives: dict
    duals: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("repeller", "attractor"):
            raise TargetError(f"unknown target kind {self.kind!r}")
        missing = [p for p in self.poset.elements if p not in self.representatives]
        if missing:
            raise TargetError(f"missing representatives for {missing}")

    def rep(self, mask: int) -> BoxUnion:
        if mask in self.overrides:
            return self.overrides[mask]
        out = BoxUnion([])
        for i in iter_bits(mask):
            out = out.union(self.representatives[self.poset.elements[i]])
        return out

    def dual_of(self, p) -> BoxUnion:
        if p not in self.duals:
            raise TargetError(f"missing dual representative for {p!r}")
        return self.duals[p]

    def full_mask(self) -> int:
        return (1 << len(self.poset)) - 1

    def validate(self) -> None:
        """Monotonicity and meet-compatibility of the representative table
        over all pairs of lattice elements (exact box geometry)."""
        masks = self.poset.downset_masks()
        reps = {m: self.rep(m) for m in masks}
        for a in masks:
            for b in masks:
                if a & ~b == 0 and reps[a] and not _union_subset(reps[a], reps[b]):
                    raise TargetError(
                        f"representative not monotone: element {a:#x} not inside {b:#x}"
                    )
        for a in masks:
            for b in masks:
                inter = reps[a].intersection(reps[b])
                expect = reps[a & b]
                if not _union_eq(inter, expect):
                    raise TargetError(
                        f"representatives not meet-compatible at ({a:#x}, {b:#x})"
                    )

    def to_json(self) -> dict:
        data = {
            "poset": self.poset.to_json(),
            "kind": self.kind,
            "domain": self.domain.to_json(),
            "representatives": {str(p): bu.to_json() for p, bu in self.representatives.items()},
        }
        if self.duals:
            data["duals"] = {str(p): bu.to_json() for p, bu in self.duals.items()}
        if self.overrides:
            data["overrides"] = {
                _mask_key(self.poset, m): bu.to_json() for m, bu in self.overrides.items()
            }
        return data

    @classmethod
    def from_json(cls, data: dict) -> "TargetLattice":
        poset = Poset.from_json(data["poset"])
        reps = {_match_id(poset, p): BoxUnion.from_json(v) for p, v in data["representatives"].items()}
        duals = {_match_id(poset, p): BoxUnion.from_json(v) for p, v in data.get("duals", {}).items()}
        overrides = {
            _key_mask(poset, k): BoxUnion.from_json(v)
            for k, v in data.get("overrides", {}).items()
        }
        return cls(
            poset=poset,
            kind=data["kind"],
            domain=Box.from_json(data["domain"]),
            representatives=reps,
            duals=duals,
            overrides=overrides,
        )


def _match_id(poset: Poset, key: str):
    for e in poset.elements:
        if str(e) == key:
            return e
    raise TargetError(f"unknown poset element {key!r}")


def _mask_key(poset: Poset, mask: int) -> str:
    if mask == 0:
        return "{}"
    return "|".join(sorted(str(e) for e in poset.mask_elements(mask)))


def _key_mask(poset: Poset, key: str) -> int:
    if key == "{}":
        return 0
    mask = 0
    for part in key.split("|"):
        mask |= 1 << poset.index(_match_id(poset, part))
    return mask


def _union_subset(a: BoxUnion, b: BoxUnion) -> bool:
    if not a:
        return True
    if not b:
        return False
    return not a.difference(b)


def _union_eq(a: BoxUnion, b: BoxUnion) -> bool:
    return _union_subset(a, b) and _union_subset(b, a)


def dualize_target(target: TargetLattice) -> TargetLattice:
    """The complementary-kind target: the poset is reversed and the value at
    a new join-irreducible is the meet (intersection) of the duals of the
    original irreducibles outside the up-set, the dual pairing reversing
    joins into meets."""
    P = target.poset
    full = target.full_mask()
    Pop = P.opposite()
    reps, duals = {}, {}
    for p in P.elements:
        rest = full & ~P.up_mask(p)
        if rest == 0:
            reps[p] = BoxUnion([target.domain])
        else:
            ids = P.mask_elements(rest)
            out = target.dual_of(ids[0])
            for q in ids[1:]:
                out = out.intersection(target.dual_of(q))
            reps[p] = out
        duals[p] = target.rep(rest)
    return TargetLattice(
        poset=Pop,
        kind="attractor" if target.kind == "repeller" else "repeller",
        domain=target.domain,
        representatives=reps,
        duals=duals,
    )


def duals_from_reference(target: TargetLattice, seq: ApproxSequence, level: int) -> dict:
    """Compute dual representatives from a combinatorial run at a reference
    level, for targets that do not supply them."""
    from .dynamics import dual_attractor, dual_repeller

    lv = seq.level(level)
    out = {}
    for p in target.poset.elements:
        cells = lv.grid.cov(target.representatives[p])
        if target.kind == "attractor":
            att = lv.F.omega(cells)
            out[p] = lv.grid.evaluate(dual_repeller(lv.F, att))
        else:
            repl = lv.F.alpha(cells)
            out[p] = lv.grid.evaluate(dual_attractor(lv.F, repl))
    return out


# ---------------------------------------------------------------------------
# lift results


@dataclass
class LiftResult:
    """A constructed lattice map into combinatorial sets, with certificates."""

    level: int
    kind: str
    poset: Poset
    assignment: dict  # down-set mask -> CellSet
    blocks: dict  # poset element -> CellSet
    certificates: dict
    provenance: dict

    def element(self, mask: int) -> CellSet:
        return self.assignment[mask]

    def to_json(self, grid: Grid | None = None) -> dict:
        data = {
            "level": self.level,
            "kind": self.kind,
            "poset": self.poset.to_json(),
            "assignment": {
                _mask_key(self.poset, m): cs.to_json() for m, cs in sorted(self.assignment.items())
            },
            "blocks": {str(p): cs.to_json() for p, cs in self.blocks.items()},
            "certificates": _jsonable(self.certificates),
            "provenance": _jsonable(self.provenance),
        }
        if grid is not None:
            data["grid"] = grid.to_json()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "LiftResult":
        poset = Poset.from_json(data["poset"])
        n = data["provenance"]["cells"]
        assignment = {
            _key_mask(poset, k): CellSet.from_json(n, v) for k, v in data["assignment"].items()
        }
        blocks = {_match_id(poset, k): CellSet.from_json(n, v) for k, v in data["blocks"].items()}
        return cls(
            level=data["level"],
            kind=data["kind"],
            poset=poset,
            assignment=assignment,
            blocks=blocks,
            certificates=data["certificates"],
            provenance=data["provenance"],
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    if isinstance(obj, CellSet):
        return obj.to_json()
    return obj


# ---------------------------------------------------------------------------
# realization of single neighborhoods


def cov_is_attracting(seq: ApproxSequence, U: BoxUnion, level: int, kind: str = "attracting"):
    """Cover U on the given level and report whether the cover is an
    attracting (or repelling) set for that level's map."""
    lv = seq.level(level)
    cells = lv.grid.cov(U)
    flags = lv.F.classify(cells)
    return flags[kind], cells


def first_passing_level(seq: ApproxSequence, U: BoxUnion, kind: str = "attracting") -> int | None:
    for i in range(len(seq)):
        ok, _ = cov_is_attracting(seq, U, i, kind)
        if ok:
            return i
    return None


def realize_attractor(seq: ApproxSequence, A: BoxUnion, A_star: BoxUnion, d) -> list[dict]:
    """Per level: the eventual image of the covered d/2-neighborhood of A
    and the eventual preimage of that of its dual repeller.  The attractor
    side is certified: the set is a combinatorial attractor, its evaluation
    sits inside the d-neighborhood of A, and A sits inside the evaluation.
    The repeller side is reported but only certified against the provided
    dual description."""
    d = to_frac(d)
    if d <= 0:
        raise ValueError("d must be positive")
    dist2 = A.dist2(A_star)
    if 4 * d * d >= dist2:
        raise ValueError(
            f"d too large: need d < dist(A, A*)/2 = sqrt({float(dist2):.6g})/2"
        )
    half = d / 2
    out = []
    for i, lv in enumerate(seq.levels):
        acells = lv.F.omega(lv.grid.cov(A.inflate(half)))
        rcells = lv.F.alpha(lv.grid.cov(A_star.inflate(half)))
        a_eval = lv.grid.evaluate(acells)
        entry = {
            "level": i,
            "attractor_cells": acells,
            "repeller_cells": rcells,
            "is_attractor": lv.F.image(acells).bits == acells.bits,
            "is_repeller": lv.F.preimage(rcells).bits == rcells.bits,
            "attractor_in_ball": all(
                A.inflate(d).contains_box(b) for b in a_eval
            ),
            "ball_contains_A": all(a_eval.contains_box(b) for b in A.boxes),
            "repeller_in_ball": all(
                A_star.inflate(d).contains_box(b) for b in lv.grid.evaluate(rcells)
            ),
        }
        entry["certified"] = bool(
            entry["is_attractor"] and entry["attractor_in_ball"] and entry["ball_contains_A"]
        )
        failed = [
            k
            for k in ("is_attractor", "attractor_in_ball", "ball_contains_A")
            if not entry[k]
        ]
        entry["failed"] = failed
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# the general lift


def _dyadic_below(limit2: Fraction) -> Fraction:
    """Largest power of two e with e^2 < limit2 (deterministic start radius)."""
    if limit2 <= 0:
        raise LiftError("representative touches its dual; no starting radius")
    e = Fraction(1)
    while e * e >= limit2:
        e /= 2
    while 4 * e * e < limit2:
        e *= 2
    return e


def _epsilon_search(target: TargetLattice, order: list, floor: Fraction) -> dict:
    """One radius per join-irreducible, by halving over exact box geometry.

    Processing order is a linear extension.  The radius of step i starts
    below half the distance to the dual object and halves until (i) the
    blocks already placed stay clear of the inflated representative and
    (ii) the closed difference of the inflated representative by the union
    so far avoids every representative whose down-set misses the new
    element.  Abstract neighborhoods use the half radius, mirroring the
    covers built later."""
    P = target.poset
    masks = P.downset_masks()
    eps: dict = {}
    placed: list = []
    blocks_abs: dict = {}
    union_abs = BoxUnion([])
    for p in order:
        mu = P.down_mask(p)
        rep = target.rep(mu)
        dual = target.dual_of(p)
        if dual:
            e = _dyadic_below(rep.dist2(dual))
        else:
            e = _dyadic_below(to_frac(max(b - a for a, b in zip(target.domain.lo, target.domain.hi))) ** 2)
        while True:
            ok = not (dual and rep.inflate(e).intersects(dual))
            if ok:
                for q in placed:
                    if (mu >> P.index(q)) & 1:
                        continue
                    if blocks_abs[q].intersects(rep.inflate(e)):
                        ok = False
                        break
            if ok:
                pieces = rep.inflate(e).difference(union_abs)
                for alpha in masks:
                    if (alpha >> P.index(p)) & 1:
                        continue
                    r_alpha = target.rep(alpha)
                    if r_alpha and pieces.intersects(r_alpha):
                        ok = False
                        break
            if ok:
                break
            e /= 2
            if e < floor:
                raise LiftError(
                    f"radius search for {p!r} hit the floor {float(floor):.3g} "
                    "without satisfying the separation conditions",
                    {"element": str(p)},
                )
        eps[p] = e
        nbhd = rep.inflate(e / 2)
        blocks_abs[p] = nbhd.difference(union_abs)
        union_abs = union_abs.union(nbhd)
        placed.append(p)
    return eps


def _assignment_from_neighborhoods(P: Poset, nbhd_cells: dict) -> dict:
    """Assignment over all down-sets as unions of per-irreducible covers."""
    assignment = {}
    for m in P.downset_masks():
        cells = None
        for i in iter_bits(m):
            c = nbhd_cells[P.elements[i]]
            cells = c if cells is None else (cells | c)
        assignment[m] = cells
    return assignment


def _certify(
    lift_kind: str,
    P: Poset,
    assignment: dict,
    blocks: dict,
    F: MultivaluedMap,
    grid: Grid,
    target: TargetLattice | None,
) -> dict:
    certs: dict = {}
    masks = sorted(assignment)
    # homomorphism: unions exact by construction, meets bitwise
    hom = True
    for a in masks:
        for b in masks:
            if assignment[a | b].bits != (assignment[a] | assignment[b]).bits:
                hom = False
            if assignment[a & b].bits != (assignment[a] & assignment[b]).bits:
                hom = False
    certs["homomorphism"] = hom
    certs["monomorphism"] = hom and len({assignment[m].bits for m in masks}) == len(masks)
    flag = KIND_FLAG[lift_kind]
    kind_ok = all(F.classify(assignment[m])[flag] for m in masks)
    certs["kind"] = lift_kind
    certs["kind_ok"] = kind_ok
    items = list(blocks.items())
    c1 = all(
        not (items[i][1] & items[j][1])
        for i in range(len(items))
        for j in range(i + 1, len(items))
    )
    certs["C1"] = c1
    if target is not None:
        c2 = True
        for p, v in blocks.items():
            ev = grid.evaluate(v)
            if not ev:
                continue
            for alpha in masks:
                if (alpha >> P.index(p)) & 1:
                    continue
                r_alpha = target.rep(alpha)
                if r_alpha and ev.intersects(r_alpha):
                    c2 = False
        certs["C2"] = c2
        containment = True
        for m in masks:
            for box in target.rep(m).boxes:
                if not grid.cov(box).issubset(assignment[m]):
                    containment = False
        certs["containment"] = containment
    c3 = True
    for a, b in P.incomparable_pairs():
        if grid.cells_touch(blocks[a], blocks[b]):
            c3 = False
    certs["C3"] = c3
    certs["well_separated"] = c3
    if c3:
        meets_ok = all(
            grid.intersection_is_meet(assignment[a], assignment[b])
            for a in masks
            for b in masks
        )
        certs["separation_meet_equality"] = meets_ok
    certs["ok"] = all(
        certs.get(k, True)
        for k in ("homomorphism", "monomorphism", "kind_ok", "C1", "C2", "C3", "containment")
    )
    return certs


def build_lift_general(
    seq: ApproxSequence, target: TargetLattice, min_level: int = 0
) -> LiftResult:
    """Realize a target lattice in the repelling (dually: attracting) sets
    of one level of the sequence: radius search, covered half-radius
    neighborhoods at the first level where every one is repelling, union
    assembly along a linear extension.  ``min_level`` restricts the sweep to
    finer levels."""
    if target.kind == "attractor":
        rep_lift = build_lift_general(seq, dualize_target(target), min_level=min_level)
        out = dualize_lift(rep_lift, seq, target=target)
        out.provenance["route"] = "dualized attractor target"
        return out

    target.validate()
    P = target.poset
    order = linear_extension(P)
    floor = 4 * _diam_frac_upper(seq.levels[-1].grid)
    eps = _epsilon_search(target, order, floor)
    min_eps = min(eps.values())
    sweep_log = []
    for i, lv in enumerate(seq.levels):
        if i < min_level:
            continue
        if 16 * lv.grid.diam2() > min_eps * min_eps:
            sweep_log.append({"level": i, "skipped": "grid too coarse for min radius"})
            continue
        nbhd_cells = {}
        repelling_ok = True
        for p in order:
            mu = P.down_mask(p)
            cells = lv.grid.cov(target.rep(mu).inflate(eps[p] / 2))
            nbhd_cells[p] = cells
            if not lv.F.classify(cells)["repelling"]:
                repelling_ok = False
        if not repelling_ok:
            sweep_log.append({"level": i, "skipped": "a neighborhood cover is not repelling"})
            continue
        assignment = _assignment_from_neighborhoods(P, nbhd_cells)
        empty = CellSet.empty(lv.grid.n)
        assignment = {m: (c if c is not None else empty) for m, c in assignment.items()}
        blocks = {}
        placed = empty
        for p in order:
            mu = P.down_mask(p)
            blocks[p] = nbhd_cells[p] - placed
            placed = placed | nbhd_cells[p]
        certs = _certify("RSet", P, assignment, blocks, lv.F, lv.grid, target)
        if certs["ok"]:
            return LiftResult(
                level=i,
                kind="RSet",
                poset=P,
                assignment=assignment,
                blocks=blocks,
                certificates=certs,
                provenance={
                    "cells": lv.grid.n,
                    "epsilons": {str(p): eps[p] for p in order},
                    "order": [str(p) for p in order],
                    "sweep": sweep_log,
                    "route": "direct repeller target",
                },
            )
        sweep_log.append({"level": i, "skipped": "certificates failed", "certs": _jsonable(certs)})
    raise LiftError("no level of the sequence admits the lift", {"sweep": sweep_log})


def _diam_frac_upper(grid: Grid) -> Fraction:
    """A rational upper bound on the cell diameter."""
    d2 = grid.diam2()
    x = Fraction(math.isqrt(d2.numerator * d2.denominator) + 1, d2.denominator)
    return x


# ---------------------------------------------------------------------------
# the cofiltration lift


def build_lift_cofiltration(seq: ApproxSequence, target: TargetLattice) -> LiftResult:
    """Inductive lift along the cofiltration: each join-irreducible is
    realized as the eventual backward image of a covered neighborhood at a
    fine enough level, prior blocks are carried across the refinement
    (staying backward invariant, which is spot-checked each step), and the
    new block is the set difference against everything placed.  Images land
    in the backward invariant sets, strictly stronger than repelling sets."""
    if not seq.cofiltered:
        raise LiftError("sequence was not built as a cofiltration")
    bad = [i for i, lv in enumerate(seq.levels) if lv.cofilt_ok is False]
    if bad:
        raise LiftError(
            f"map monotonicity across refinements fails at levels {bad}; "
            "not a cofiltration of maps"
        )
    if target.kind == "attractor":
        rep_lift = build_lift_cofiltration(seq, dualize_target(target))
        out = dualize_lift(rep_lift, seq, target=target)
        out.provenance["route"] = "dualized attractor target"
        return out

    target.validate()
    P = target.poset
    order = linear_extension(P)
    floor = 4 * _diam_frac_upper(seq.levels[-1].grid)
    cur = 0
    blocks: dict = {}
    carry_checks = []
    step_log = []
    for p in order:
        mu = P.down_mask(p)
        rep = target.rep(mu)
        dual = target.dual_of(p)
        grid_cur = seq.level(cur).grid
        union_cells = _union_blocks(blocks, grid_cur.n)
        union_geom = grid_cur.evaluate(union_cells) if union_cells else BoxUnion([])
        d = _dyadic_below(rep.dist2(dual)) if dual else _dyadic_below(
            to_frac(max(b - a for a, b in zip(target.domain.lo, target.domain.hi))) ** 2
        )
        masksO = P.downset_masks()
        while True:
            ok = not (dual and rep.inflate(d).intersects(dual))
            if ok:
                for q in blocks:
                    if (mu >> P.index(q)) & 1:
                        continue
                    ev = grid_cur.evaluate(blocks[q])
                    if ev and ev.intersects(rep.inflate(d)):
                        ok = False
                        break
            if ok:
                pieces = rep.inflate(d).difference(union_geom)
                for alpha in masksO:
                    if (alpha >> P.index(p)) & 1:
                        continue
                    r_alpha = target.rep(alpha)
                    if r_alpha and pieces.intersects(r_alpha):
                        ok = False
                        break
            if ok:
                break
            d /= 2
            if d < floor:
                raise LiftError(
                    f"radius search for {p!r} hit the floor during the cofiltration lift",
                    {"element": str(p)},
                )
        # find a level where the eventual backward image of the cover is
        # pinched between the representative and its d-neighborhood
        chosen = None
        cand = None
        for m in range(cur, len(seq)):
            lv = seq.level(m)
            cand = lv.F.alpha(lv.grid.cov(rep.inflate(d / 2)))
            ev = lv.grid.evaluate(cand)
            rep_inside = all(ev.contains_box(b) for b in rep.boxes)
            inside_ball = all(rep.inflate(d).contains_box(b) for b in ev.boxes)
            if rep_inside and inside_ball:
                chosen = m
                break
            step_log.append(
                {
                    "element": str(p),
                    "level": m,
                    "skipped": "containment failed",
                    "rep_inside": rep_inside,
                    "inside_ball": inside_ball,
                }
            )
        if chosen is None:
            raise LiftError(
                f"refinement budget exhausted while realizing {p!r}",
                {"log": step_log},
            )
        # carry prior blocks to the chosen level; the carried sets must stay
        # backward invariant under the finer map (cofiltration property)
        if chosen != cur:
            fine, coarse = seq.level(chosen).grid, seq.level(cur).grid
            new_blocks = {}
            for q, cells in blocks.items():
                new_blocks[q] = fine.expand_from(coarse, cells)
            blocks = new_blocks
            for q in blocks:
                down_q = P.down_mask(q)
                carried = _union_mask_blocks(blocks, down_q, P, seq.level(chosen).grid.n)
                flags = seq.level(chosen).F.classify(carried)
                carry_checks.append(
                    {
                        "element": str(q),
                        "to_level": chosen,
                        "backward_invariant": flags["backward_invariant"],
                    }
                )
                if not flags["backward_invariant"]:
                    raise LiftError(
                        "carried set lost backward invariance across refinement; "
                        "cofiltration property violated",
                        {"element": str(q), "level": chosen},
                    )
            cur = chosen
        lvl = seq.level(cur)
        union_cells = _union_blocks(blocks, lvl.grid.n)
        blocks[p] = cand - union_cells if union_cells else cand
        step_log.append({"element": str(p), "level": cur, "radius": str(d)})

    lv = seq.level(cur)
    masks = P.downset_masks()
    empty = CellSet.empty(lv.grid.n)
    assignment = {}
    for m in masks:
        cells = empty
        for i in iter_bits(m):
            cells = cells | blocks[P.elements[i]]
        assignment[m] = cells
    certs = _certify("Invset-", P, assignment, blocks, lv.F, lv.grid, target)
    certs["cofiltration_carry"] = all(c["backward_invariant"] for c in carry_checks)
    if not certs["ok"]:
        raise LiftError("cofiltration lift certificates failed", {"certs": _jsonable(certs)})
    return LiftResult(
        level=cur,
        kind="Invset-",
        poset=P,
        assignment=assignment,
        blocks=blocks,
        certificates=certs,
        provenance={
            "cells": lv.grid.n,
            "order": [str(p) for p in order],
            "steps": step_log,
            "carry_checks": carry_checks,
            "route": "direct repeller target",
        },
    )


def _union_blocks(blocks: dict, n: int) -> CellSet:
    out = CellSet.empty(n)
    for cells in blocks.values():
        out = out | cells
    return out


def _union_mask_blocks(blocks: dict, mask: int, P: Poset, n: int) -> CellSet:
    out = CellSet.empty(n)
    for i in iter_bits(mask):
        e = P.elements[i]
        if e in blocks:
            out = out | blocks[e]
    return out


# ---------------------------------------------------------------------------
# duality


def dualize_lift(lift: LiftResult, seq: ApproxSequence, target: TargetLattice | None = None) -> LiftResult:
    """Complement every image: backward invariant sets become forward
    invariant, repelling sets attracting, and the poset is reversed.  An
    involution: dualizing twice returns the original assignment bitwise."""
    P = lift.poset
    full = (1 << len(P)) - 1
    Pop = P.opposite()
    assignment = {full ^ m: cs.complement() for m, cs in lift.assignment.items()}
    # blocks of the dual assignment coincide with the original blocks
    base = assignment[0]
    blocks = {}
    for p in Pop.elements:
        i = Pop.index(p)
        down_op = Pop.down_mask(p)
        gamma, beta = down_op, down_op & ~(1 << i)
        blocks[p] = assignment[gamma] - assignment[beta]
    lv = seq.level(lift.level)
    kind = KIND_DUAL[lift.kind]
    certs = dict(lift.certificates)
    certs["kind"] = kind
    flag = KIND_FLAG[kind]
    certs["kind_ok"] = all(lv.F.classify(cs)[flag] for cs in assignment.values())
    if target is not None:
        masks = sorted(assignment)
        c2 = True
        containment = True
        for p, v in blocks.items():
            ev = lv.grid.evaluate(v)
            if not ev:
                continue
            for alpha in masks:
                if (alpha >> Pop.index(p)) & 1:
                    continue
                r_alpha = target.rep(alpha)
                if r_alpha and ev.intersects(r_alpha):
                    c2 = False
        for m in masks:
            for box in target.rep(m).boxes:
                if not lv.grid.cov(box).issubset(assignment[m]):
                    containment = False
        certs["C2"] = c2
        certs["containment"] = containment
    c3 = True
    for a, b in Pop.incomparable_pairs():
        if lv.grid.cells_touch(blocks[a], blocks[b]):
            c3 = False
    certs["C3"] = c3
    certs["well_separated"] = c3
    certs["base_image"] = base.to_json() if len(base) < 64 else len(base)
    certs["ok"] = all(
        certs.get(k, True)
        for k in ("homomorphism", "monomorphism", "kind_ok", "C1", "C2", "C3", "containment")
    )
    return LiftResult(
        level=lift.level,
        kind=kind,
        poset=Pop,
        assignment=assignment,
        blocks=blocks,
        certificates=certs,
        provenance=dict(lift.provenance),
    )


# ---------------------------------------------------------------------------
# verification


def verify_lift(
    lift: LiftResult,
    seq: ApproxSequence,
    target: TargetLattice,
    reference_level: int,
    tol=None,
) -> dict:
    """Full verification report.

    (a) homomorphism/monomorphism table over the whole down-set lattice;
    (b) membership class of every image under the lift level's map;
    (c) block certificates C1-C3 and the separation meet equality;
    (d) limit agreement: the eventual (backward for repeller kinds, forward
        for attractor kinds) image at the reference level of the covered
        evaluation of each image is within Hausdorff tolerance of the
        covered representative (surrogate for exact limit equality, which is
        not computable);
    (e) exact containment of each representative in the interior of its
        image's evaluation.
    """
    lv = seq.level(lift.level)
    ref = seq.level(reference_level)
    if reference_level <= lift.level:
        raise ValueError("reference level must be finer than the lift level")
    tol2 = 4 * ref.grid.diam2() if tol is None else to_frac(tol) ** 2
    P = lift.poset
    masks = sorted(lift.assignment)
    report: dict = {"tol2": float(tol2)}

    hom = True
    for a in masks:
        for b in masks:
            if lift.assignment[a | b].bits != (lift.assignment[a] | lift.assignment[b]).bits:
                hom = False
            if lift.assignment[a & b].bits != (lift.assignment[a] & lift.assignment[b]).bits:
                hom = False
    mono = hom and len({lift.assignment[m].bits for m in masks}) == len(masks)
    report["homomorphism"] = hom
    report["monomorphism"] = mono

    flag = KIND_FLAG[lift.kind]
    kinds = {m: lv.F.classify(lift.assignment[m])[flag] for m in masks}
    report["kind_ok"] = all(kinds.values())
    report["kind_detail"] = {(_mask_key(P, m)): v for m, v in kinds.items()}

    items = list(lift.blocks.items())
    report["C1"] = all(
        not (items[i][1] & items[j][1])
        for i in range(len(items))
        for j in range(i + 1, len(items))
    )
    c2 = True
    for p, v in lift.blocks.items():
        ev = lv.grid.evaluate(v)
        if not ev:
            continue
        for alpha in masks:
            if (alpha >> P.index(p)) & 1:
                continue
            r_alpha = target.rep(alpha)
            if r_alpha and ev.intersects(r_alpha):
                c2 = False
    report["C2"] = c2
    c3 = is_well_separated(P, lift.blocks, lv.grid.cells_touch)
    report["C3"] = report["well_separated"] = c3
    if c3:
        report["separation_meet_equality"] = all(
            lv.grid.intersection_is_meet(lift.assignment[a], lift.assignment[b])
            for a in masks
            for b in masks
        )

    # (d) limit agreement at the reference level
    backward = lift.kind in ("RSet", "Invset-")
    agree = {}
    worst = 0.0
    for m in masks:
        rep_cells = ref.grid.cov(target.rep(m)) if target.rep(m) else CellSet.empty(ref.grid.n)
        ev = lv.grid.evaluate(lift.assignment[m])
        covered = ref.grid.cov(ev) if ev else CellSet.empty(ref.grid.n)
        limit = ref.F.alpha(covered) if backward else ref.F.omega(covered)
        if not limit and not rep_cells:
            agree[_mask_key(P, m)] = True
            continue
        if not limit or not rep_cells:
            agree[_mask_key(P, m)] = False
            worst = math.inf
            continue
        A = ref.grid.evaluate(limit)
        B = ref.grid.evaluate(rep_cells)
        if ref.grid.domain.dim == 1:
            d2 = hausdorff_dist2_1d(A, B)
        else:
            d2 = max(
                max(min(a.sup_dist2(b) for b in B.boxes) for a in A.boxes),
                max(min(b.sup_dist2(a) for a in A.boxes) for b in B.boxes),
            )
        agree[_mask_key(P, m)] = d2 <= tol2
        worst = max(worst, math.sqrt(float(d2)))
    report["limit_agreement"] = all(agree.values())
    report["limit_agreement_detail"] = agree
    report["limit_agreement_worst"] = worst

    containment = {}
    for m in masks:
        ok = True
        for box in target.rep(m).boxes:
            if not lv.grid.cov(box).issubset(lift.assignment[m]):
                ok = False
        containment[_mask_key(P, m)] = ok
    report["containment"] = all(containment.values())
    report["containment_detail"] = containment

    report["ok"] = all(
        report[k]
        for k in (
            "homomorphism",
            "monomorphism",
            "kind_ok",
            "C1",
            "C2",
            "C3",
            "limit_agreement",
            "containment",
        )
    )
    return report


def lift_from_file(path) -> LiftResult:
    with open(path) as fh:
        return LiftResult.from_json(json.load(fh))


def lift_poset_dot(lift: LiftResult) -> str:
    """Hasse diagram of the target poset with each element annotated by its
    block (cell count, or the cells themselves when few)."""
    lines = ["digraph lift {", "  rankdir=BT;"]
    for p in lift.poset.elements:
        block = lift.blocks[p]
        label = f"{p}\\n|V|={len(block)}"
        if len(block) <= 8:
            label = f"{p}\\nV={{{','.join(map(str, block))}}}"
        lines.append(f'  "{p}" [label="{label}"];')
    for a, b in lift.poset.covers():
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# example target: the double-well map's five-element attractor lattice


def double_well_target(h="0.4") -> TargetLattice:
    """The attractor lattice of x -> x + h*x*(1 - x^2) on [-2, 2]: the fixed
    points -1 and +1, their pair, and the global attractor [-1, 1], with
    join-irreducibles neg, pos < glob.  Dual repellers are the basin
    complements, described with a rational stand-in for the basin boundary
    sqrt((1+h)/h) so the box geometry stays exact."""
    from .systems import sqrt_bracket

    h = to_frac(h)
    mlo, _ = sqrt_bracket((1 + h) / h, 48)
    z = Fraction(mlo.numerator | 1, mlo.denominator)  # odd numerator: off all grid lines
    poset = Poset.from_pairs(["neg", "pos", "glob"], [("neg", "glob"), ("pos", "glob")])
    reps = {
        "neg": BoxUnion.points([[-1]]),
        "pos": BoxUnion.points([[1]]),
        "glob": BoxUnion.single([-1], [1]),
    }
    duals = {
        "neg": BoxUnion([Box.make([-2], [-z]), Box.make([0], [z])]),
        "pos": BoxUnion([Box.make([-z], [0]), Box.make([z], [2])]),
        "glob": BoxUnion([]),
    }
    return TargetLattice(
        poset=poset,
        kind="attractor",
        domain=Box.make([-2], [2]),
        representatives=reps,
        duals=duals,
    )
