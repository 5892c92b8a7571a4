"""Finite dynamics of combinatorial multivalued maps (directed graphs).

A multivalued map on a finite vertex set is a digraph; its asymptotic
dynamics are captured by eventual forward/backward images (``omega`` /
``alpha``).  This module computes those fixpoints, classifies sets
(invariant, attracting, repelling, attractor, repeller), enumerates the
attractor and repeller lattices through the condensation of the digraph, and
provides brute-force oracles plus a full duality-diagram checker for
verification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce

from . import _core_py, kernels
from .lattice import Poset


class CapExceeded(Exception):
    """An enumeration would exceed its configured size cap."""


# ---------------------------------------------------------------------------
# CellSet


@dataclass(frozen=True)
class CellSet:
    """Subset of a universe {0..n-1}, stored as an int bit mask."""

    universe: int
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.universe:
            raise ValueError("bits outside universe")

    @classmethod
    def empty(cls, n: int) -> "CellSet":
        return cls(n, 0)

    @classmethod
    def full(cls, n: int) -> "CellSet":
        return cls(n, (1 << n) - 1)

    @classmethod
    def from_indices(cls, n: int, indices) -> "CellSet":
        bits = 0
        for i in indices:
            if not 0 <= i < n:
                raise ValueError(f"index {i} outside universe of size {n}")
            bits |= 1 << i
        return cls(n, bits)

    def _check(self, other: "CellSet"):
        if self.universe != other.universe:
            raise ValueError("universe mismatch")

    def __or__(self, other):
        self._check(other)
        return CellSet(self.universe, self.bits | other.bits)

    def __and__(self, other):
        self._check(other)
        return CellSet(self.universe, self.bits & other.bits)

    def __sub__(self, other):
        self._check(other)
        return CellSet(self.universe, self.bits & ~other.bits)

    def complement(self) -> "CellSet":
        return CellSet(self.universe, ~self.bits & ((1 << self.universe) - 1))

    def issubset(self, other) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def __le__(self, other):
        return self.issubset(other)

    def __contains__(self, i: int) -> bool:
        return bool((self.bits >> i) & 1)

    def __iter__(self):
        return _core_py.iter_bits(self.bits)

    def __len__(self):
        return self.bits.bit_count()

    def __bool__(self):
        return self.bits != 0

    def indices(self) -> list[int]:
        return list(self)

    def to_json(self):
        return self.indices()

    @classmethod
    def from_json(cls, n: int, data) -> "CellSet":
        if isinstance(data, dict) and "hex" in data:
            return cls(n, int(data["hex"], 16))
        return cls.from_indices(n, data)

    def __repr__(self):
        if self.universe <= 24:
            return f"CellSet({self.universe}, {{{','.join(map(str, self))}}})"
        return f"CellSet({self.universe}, |{len(self)}| cells)"


# ---------------------------------------------------------------------------
# MultivaluedMap


class MultivaluedMap:
    """Combinatorial multivalued map: digraph with forward and reverse
    adjacency, the reverse being the exact transpose of the forward."""

    def __init__(self, n: int, forward: list[list[int]], reverse: list[list[int]] | None = None):
        if len(forward) != n:
            raise ValueError("adjacency length must equal n")
        self.n = n
        self.forward = [sorted(set(a)) for a in forward]
        for a in self.forward:
            if a and (a[0] < 0 or a[-1] >= n):
                raise ValueError("edge target outside vertex set")
        self.reverse = self._transpose(self.forward)
        if reverse is not None and [sorted(set(a)) for a in reverse] != self.reverse:
            raise ValueError("reverse adjacency is not the transpose of forward")
        self._fwd_masks = [reduce(lambda m, w: m | (1 << w), a, 0) for a in self.forward]
        self._rev_masks = [reduce(lambda m, w: m | (1 << w), a, 0) for a in self.reverse]
        self._fwd_kernel = None
        self._rev_kernel = None
        self._cond = None

    @staticmethod
    def _transpose(adj: list[list[int]]) -> list[list[int]]:
        rev: list[list[int]] = [[] for _ in adj]
        for u, nbrs in enumerate(adj):
            for w in nbrs:
                rev[w].append(u)
        return [sorted(a) for a in rev]

    # kernel access -------------------------------------------------------

    def _kernel(self, direction: str):
        if direction == "forward":
            if self._fwd_kernel is None:
                self._fwd_kernel = kernels.make_kernel(self.forward, self._fwd_masks)
            return self._fwd_kernel
        if self._rev_kernel is None:
            self._rev_kernel = kernels.make_kernel(self.reverse, self._rev_masks)
        return self._rev_kernel

    def _wrap(self, bits: int) -> CellSet:
        return CellSet(self.n, bits)

    # basic operations ----------------------------------------------------

    def inverse(self) -> "MultivaluedMap":
        inv = MultivaluedMap.__new__(MultivaluedMap)
        inv.n = self.n
        inv.forward = self.reverse
        inv.reverse = self.forward
        inv._fwd_masks = self._rev_masks
        inv._rev_masks = self._fwd_masks
        inv._fwd_kernel = self._rev_kernel
        inv._rev_kernel = self._fwd_kernel
        inv._cond = None
        return inv

    def totality(self) -> dict:
        return {
            "left_total": all(self.forward),
            "right_total": all(self.reverse),
        }

    def image(self, u: CellSet) -> CellSet:
        return self._wrap(self._kernel("forward").image(u.bits))

    def preimage(self, u: CellSet) -> CellSet:
        return self._wrap(self._kernel("reverse").image(u.bits))

    def forward_closure(self, u: CellSet) -> CellSet:
        return self._wrap(self._kernel("forward").closure(u.bits))

    def backward_closure(self, u: CellSet) -> CellSet:
        return self._wrap(self._kernel("reverse").closure(u.bits))

    def omega(self, u: CellSet) -> CellSet:
        """Eventual forward image: intersection of the tail unions of forward
        iterates.  Computed as the fixed point of the map iterated on the
        forward closure; the iteration is decreasing, stabilizes in at most
        n steps, and its fixed point satisfies image(omega) == omega."""
        bits, steps = self._kernel("forward").omega(u.bits)
        assert steps <= self.n + 1, "eventual-image iteration exceeded vertex count"
        return self._wrap(bits)

    def alpha(self, u: CellSet) -> CellSet:
        """Eventual backward image (omega of the inverse map)."""
        bits, steps = self._kernel("reverse").omega(u.bits)
        assert steps <= self.n + 1, "eventual-image iteration exceeded vertex count"
        return self._wrap(bits)

    # classification ------------------------------------------------------

    def classify(self, u: CellSet, window_check: bool = False) -> dict:
        """Flags per definition: forward/backward invariant, attracting /
        repelling (eventual image inside the set), attractor / repeller
        (exactly invariant).  ``window_check`` additionally locates a k with
        image^j(U) inside U for all k <= j <= 2k, the finite characterization
        of attracting sets, and asserts it agrees with the direct flag."""
        img = self.image(u)
        pre = self.preimage(u)
        om = self.omega(u)
        al = self.alpha(u)
        flags = {
            "forward_invariant": img <= u,
            "backward_invariant": pre <= u,
            "attracting": om <= u,
            "repelling": al <= u,
            "attractor": img.bits == u.bits,
            "repeller": pre.bits == u.bits,
        }
        if flags["forward_invariant"]:
            assert flags["attracting"]
        if flags["attractor"]:
            assert flags["attracting"]
        if window_check:
            k = self.attracting_window(u)
            assert (k is not None) == flags["attracting"]
            flags["attracting_window_k"] = k
        return flags

    def attracting_window(self, u: CellSet) -> int | None:
        """Smallest k > 0 with image^j(U) <= U for all k <= j <= 2k, or None."""
        limit = 2 * (self.n + 1)
        cur = u.bits
        last_bad = 0
        kern = self._kernel("forward")
        for j in range(1, limit + 1):
            cur = kern.image(cur)
            if cur & ~u.bits:
                last_bad = j
            k = (j + 1) // 2
            if k >= 1 and last_bad < k and j >= 2 * k:
                return k
        return None

    # condensation and lattices -------------------------------------------

    def condensation(self) -> "CondensationDag":
        if self._cond is None:
            self._cond = CondensationDag.from_map(self)
        return self._cond


@dataclass
class CondensationDag:
    """Strongly connected components with recurrence flags and the acyclic
    component graph.  Components are in reverse topological order: edges go
    from higher labels to lower."""

    scc_of: list[int]
    components: list[CellSet]
    recurrent: list[bool]
    dag_edges: list[list[int]]

    @classmethod
    def from_map(cls, F: MultivaluedMap) -> "CondensationDag":
        labels, comps = _core_py.tarjan_scc(F.forward)
        ncomp = len(comps)
        comp_sets = [CellSet.from_indices(F.n, c) for c in comps]
        recurrent = []
        dag_edges: list[set[int]] = [set() for _ in range(ncomp)]
        for cid, comp in enumerate(comps):
            rec = len(comp) > 1
            for v in comp:
                for w in F.forward[v]:
                    if labels[w] == cid:
                        rec = True
                    else:
                        dag_edges[cid].add(labels[w])
            recurrent.append(rec)
        return cls(labels, comp_sets, recurrent, [sorted(e) for e in dag_edges])

    def reach_masks(self) -> list[int]:
        """Per-component mask (over component ids) of reachable components,
        including itself.  Valid because labels are reverse-topological."""
        ncomp = len(self.components)
        reach = [0] * ncomp
        for c in range(ncomp):
            m = 1 << c
            for d in self.dag_edges[c]:
                m |= reach[d]
            reach[c] = m
        return reach

    def downsets(self, cap: int = 1 << 20) -> list[int]:
        """All component sets closed under successors, as component masks.
        These are exactly the forward invariant vertex sets."""
        ncomp = len(self.components)
        reach = self.reach_masks()
        closed = [0]
        for c in range(ncomp):
            # every down-set either omits c, or contains reach(c)
            extra = [m | reach[c] for m in closed]
            merged = sorted(set(closed) | set(extra))
            if len(merged) > cap:
                raise CapExceeded(f"more than {cap} forward invariant sets")
            closed = merged
        return closed

    def comp_mask_to_cells(self, mask: int, n: int) -> CellSet:
        out = 0
        for c in _core_py.iter_bits(mask):
            out |= self.components[c].bits
        return CellSet(n, out)


# ---------------------------------------------------------------------------
# module-level operations (spec surface)


def inverse(F: MultivaluedMap) -> MultivaluedMap:
    return F.inverse()


def totality(F: MultivaluedMap) -> dict:
    return F.totality()


def omega(F: MultivaluedMap, u: CellSet) -> CellSet:
    return F.omega(u)


def alpha(F: MultivaluedMap, u: CellSet) -> CellSet:
    return F.alpha(u)


def classify(F: MultivaluedMap, u: CellSet, window_check: bool = False) -> dict:
    return F.classify(u, window_check=window_check)


def att_lattice(F: MultivaluedMap) -> tuple[Poset, dict[str, CellSet]]:
    """Attractor lattice, represented by the poset of its join-irreducible
    attractors.  Join-irreducibles are the eventual images of the recurrent
    components' forward closures; the full lattice is the set of unions over
    down-sets of the poset (materialize with :func:`materialize_attractors`).
    """
    cond = F.condensation()
    reach = cond.reach_masks()
    rec_ids = [c for c in range(len(cond.components)) if cond.recurrent[c]]
    cells = {c: cond.comp_mask_to_cells(reach[c], F.n) for c in rec_ids}
    # canonical element order: by size, then by cell indices
    order = sorted(rec_ids, key=lambda c: (len(cells[c]), cells[c].bits))
    names = [f"a{i}" for i in range(len(order))]
    elem_map = {names[i]: cells[order[i]] for i in range(len(order))}
    leq_pairs = []
    for i, ci in enumerate(order):
        for j, cj in enumerate(order):
            if (reach[cj] >> ci) & 1:  # ci reachable from cj => A_ci <= A_cj
                leq_pairs.append((names[i], names[j]))
    poset = Poset.from_pairs(names, leq_pairs)
    return poset, elem_map


def rep_lattice(F: MultivaluedMap) -> tuple[Poset, dict[str, CellSet]]:
    poset, elem_map = att_lattice(F.inverse())
    return poset, {k.replace("a", "r", 1): v for k, v in elem_map.items()}


def materialize_attractors(F: MultivaluedMap, cap: int = 1 << 20) -> list[CellSet]:
    """All attractors, as unions of down-sets of join-irreducibles."""
    poset, elem_map = att_lattice(F)
    down_masks = poset.downset_masks(cap=cap)
    names = poset.elements
    out = set()
    for m in down_masks:
        bits = 0
        for i in _core_py.iter_bits(m):
            bits |= elem_map[names[i]].bits
        out.add(bits)
    return [CellSet(F.n, b) for b in sorted(out)]


def materialize_repellers(F: MultivaluedMap, cap: int = 1 << 20) -> list[CellSet]:
    return materialize_attractors(F.inverse(), cap=cap)


def _require_attractor(F: MultivaluedMap, a: CellSet, what: str = "attractor"):
    ok = F.image(a).bits == a.bits if what == "attractor" else F.preimage(a).bits == a.bits
    if not ok:
        raise ValueError(f"input set is not an {what}")


def att_meet(F: MultivaluedMap, a: CellSet, b: CellSet) -> CellSet:
    _require_attractor(F, a)
    _require_attractor(F, b)
    out = F.omega(a & b)
    assert F.image(out).bits == out.bits
    return out


def att_join(F: MultivaluedMap, a: CellSet, b: CellSet) -> CellSet:
    _require_attractor(F, a)
    _require_attractor(F, b)
    return a | b


def rep_meet(F: MultivaluedMap, a: CellSet, b: CellSet) -> CellSet:
    _require_attractor(F, a, "repeller")
    _require_attractor(F, b, "repeller")
    out = F.alpha(a & b)
    assert F.preimage(out).bits == out.bits
    return out


def rep_join(F: MultivaluedMap, a: CellSet, b: CellSet) -> CellSet:
    _require_attractor(F, a, "repeller")
    _require_attractor(F, b, "repeller")
    return a | b


def dual_repeller(F: MultivaluedMap, a: CellSet) -> CellSet:
    """Dual repeller of an attractor: eventual backward image of the
    complement.  Asserts the duality involution."""
    _require_attractor(F, a)
    r = F.alpha(a.complement())
    assert F.preimage(r).bits == r.bits, "dual is not a repeller"
    back = F.omega(r.complement())
    assert back.bits == a.bits, "duality involution failed"
    return r


def dual_attractor(F: MultivaluedMap, r: CellSet) -> CellSet:
    _require_attractor(F, r, "repeller")
    a = F.omega(r.complement())
    assert F.image(a).bits == a.bits, "dual is not an attractor"
    back = F.alpha(a.complement())
    assert back.bits == r.bits, "duality involution failed"
    return a


def brute_force_attractors(F: MultivaluedMap, cap: int = 16) -> list[CellSet]:
    """Oracle: exhaustive scan for subsets with image(A) == A."""
    if F.n > cap:
        raise CapExceeded(f"brute force limited to {cap} vertices, got {F.n}")
    masks = F._fwd_masks
    out = []
    for m in range(1 << F.n):
        img = 0
        mm = m
        while mm:
            low = mm & -mm
            img |= masks[low.bit_length() - 1]
            mm ^= low
        if img == m:
            out.append(CellSet(F.n, m))
    return out


def brute_force_repellers(F: MultivaluedMap, cap: int = 16) -> list[CellSet]:
    return brute_force_attractors(F.inverse(), cap=cap)


# ---------------------------------------------------------------------------
# duality diagram verification


def check_diagram_six(F: MultivaluedMap, cap: int = 1 << 14) -> dict:
    """Verify every face of the forward/backward duality diagram: complement
    anti-isomorphisms between the invariant-set and attracting/repelling-set
    lattices, omega/alpha epimorphisms onto attractors/repellers, and the
    compatibility of dualization with complementation.  Returns a report with
    one entry per face; ``counterexample`` is None when the face holds.

    All eventual images are tabulated once over the full power set, so the
    face checks are table lookups."""
    n = F.n
    if 1 << n > cap:
        raise CapExceeded(f"diagram check limited to 2^n <= {cap} subsets")
    report = {}

    def face(name, ok, ce=None):
        report[name] = {"ok": bool(ok), "counterexample": ce}

    fwd = F._kernel("forward")
    rev = F._kernel("reverse")
    full = (1 << n) - 1
    om = [0] * (1 << n)
    al = [0] * (1 << n)
    img = [0] * (1 << n)
    pre = [0] * (1 << n)
    for m in range(1 << n):
        om[m] = fwd.omega(m)[0]
        al[m] = rev.omega(m)[0]
        img[m] = fwd.image(m)
        pre[m] = rev.image(m)
    inv_plus_direct = {m for m in range(1 << n) if img[m] & ~m == 0}
    inv_minus_direct = {m for m in range(1 << n) if pre[m] & ~m == 0}
    aset = {m for m in range(1 << n) if om[m] & ~m == 0}
    rset = {m for m in range(1 << n) if al[m] & ~m == 0}
    att = {m for m in range(1 << n) if img[m] == m}
    rep = {m for m in range(1 << n) if pre[m] == m}

    # sanity: the condensation enumeration of forward invariant sets matches
    # the definition
    cond = F.condensation()
    inv_plus = {cond.comp_mask_to_cells(m, n).bits for m in cond.downsets()}
    face("invset_plus_enumeration", inv_plus == inv_plus_direct)

    ce = next((m for m in inv_plus if (full ^ m) not in inv_minus_direct), None)
    ce2 = next((m for m in inv_minus_direct if (full ^ m) not in inv_plus), None)
    face("complement_invset", ce is None and ce2 is None, ce if ce is not None else ce2)

    ce = next((m for m in aset if (full ^ m) not in rset), None)
    ce2 = next((m for m in rset if (full ^ m) not in aset), None)
    face("complement_aset_rset", ce is None and ce2 is None, ce if ce is not None else ce2)

    def hom_face(name, domain, table, lat):
        """the eventual-image map restricted to ``domain`` is a lattice
        epimorphism (join preserved; meet sent to the limit of the meet)."""
        dom = sorted(domain)
        if {table[m] for m in dom} != lat:
            face(name, False, "image mismatch")
            return
        for a in dom:
            for b in dom:
                if table[a | b] != table[a] | table[b]:
                    face(name, False, (a, b, "join"))
                    return
                if table[a & b] != table[table[a] & table[b]]:
                    face(name, False, (a, b, "meet"))
                    return
        face(name, True)

    hom_face("omega_epi_invset_plus", inv_plus, om, att)
    hom_face("alpha_epi_invset_minus", inv_minus_direct, al, rep)
    hom_face("omega_epi_aset", aset, om, att)
    hom_face("alpha_epi_rset", rset, al, rep)

    # dualization commutes with complementation on attracting sets
    ce = next((m for m in aset if al[full ^ om[m]] != al[full ^ m]), None)
    face("star_omega_vs_alpha_complement", ce is None, ce)

    # dual pairing is an involutive anti-isomorphism
    ce = None
    for m in att:
        star = al[full ^ m]
        if star not in rep or om[full ^ star] != m:
            ce = m
            break
    face("attractor_repeller_pairing", ce is None, ce)

    report["ok"] = all(v["ok"] for v in report.values() if isinstance(v, dict))
    return report


# ---------------------------------------------------------------------------
# serialization


def digraph_to_json(F: MultivaluedMap, provenance: dict | None = None) -> dict:
    edges = [[u, w] for u in range(F.n) for w in F.forward[u]]
    data = {"n": F.n, "edges": edges}
    if provenance:
        data["provenance"] = provenance
    return data


def digraph_from_json(data: dict) -> MultivaluedMap:
    n = int(data["n"])
    forward: list[list[int]] = [[] for _ in range(n)]
    for u, w in data["edges"]:
        forward[u].append(w)
    return MultivaluedMap(n, forward)


def digraph_to_dot(F: MultivaluedMap) -> str:
    lines = ["digraph F {"]
    for u in range(F.n):
        lines.append(f"  {u};")
    for u in range(F.n):
        for w in F.forward[u]:
            lines.append(f"  {u} -> {w};")
    lines.append("}")
    return "\n".join(lines)


def condensation_to_dot(F: MultivaluedMap) -> str:
    cond = F.condensation()
    lines = ["digraph condensation {"]
    for c, comp in enumerate(cond.components):
        label = "{" + ",".join(map(str, comp)) + "}"
        shape = " peripheries=2" if cond.recurrent[c] else ""
        lines.append(f'  c{c} [label="{label}"{shape}];')
    for c, targets in enumerate(cond.dag_edges):
        for d in targets:
            lines.append(f"  c{c} -> c{d};")
    lines.append("}")
    return "\n".join(lines)


def load_digraph(path) -> MultivaluedMap:
    with open(path) as fh:
        return digraph_from_json(json.load(fh))
