"""Finite posets and finite bounded distributive lattices.

Posets carry the order as per-element bit masks; lattices are extensional
(element list plus join/meet operations) and all structural checks are
exhaustive scans, which is the right trade-off at the sizes this package
works with.  Down-set lattices, join-irreducibles, the representation
isomorphism L = downsets(irreducibles(L)), atom decompositions of set-valued
monomorphisms, linear extensions, and the top-extension of a down-set are
all here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ._core_py import iter_bits


class NotDistributive(Exception):
    """Raised with the first failing lattice axiom instance."""


class CapExceeded(Exception):
    pass


def _sort_key(x):
    return (type(x).__name__, str(x), repr(x))


# ---------------------------------------------------------------------------
# Poset


class Poset:
    """Finite poset: element ids plus a reflexive-transitive order relation.

    ``down[i]`` is the bit mask of indices j with element_j <= element_i.
    """

    def __init__(self, elements: list, down: list[int]):
        self.elements = list(elements)
        self.down = list(down)
        self._index = {e: i for i, e in enumerate(self.elements)}
        if len(self._index) != len(self.elements):
            raise ValueError("duplicate element ids")
        self._validate()

    def _validate(self):
        n = len(self.elements)
        for i in range(n):
            if not (self.down[i] >> i) & 1:
                raise ValueError("order not reflexive")
        for i in range(n):
            for j in iter_bits(self.down[i]):
                if j != i and (self.down[j] >> i) & 1:
                    raise ValueError("order not antisymmetric")
                if self.down[j] & ~self.down[i]:
                    raise ValueError("order not transitive")

    @classmethod
    def from_pairs(cls, elements: list, pairs) -> "Poset":
        """Build from (a, b) pairs meaning a <= b; cover pairs are enough,
        the reflexive-transitive closure is computed."""
        index = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        down = [1 << i for i in range(n)]
        for a, b in pairs:
            down[index[b]] |= 1 << index[a]
        changed = True
        while changed:
            changed = False
            for i in range(n):
                m = down[i]
                for j in iter_bits(m):
                    m |= down[j]
                if m != down[i]:
                    down[i] = m
                    changed = True
        return cls(elements, down)

    def __len__(self):
        return len(self.elements)

    def index(self, e) -> int:
        return self._index[e]

    def leq(self, a, b) -> bool:
        return bool((self.down[self._index[b]] >> self._index[a]) & 1)

    def down_mask(self, e) -> int:
        return self.down[self._index[e]]

    def up_mask(self, e) -> int:
        i = self._index[e]
        return sum(1 << j for j in range(len(self.elements)) if (self.down[j] >> i) & 1)

    def is_down_mask(self, mask: int) -> bool:
        return all(self.down[i] & ~mask == 0 for i in iter_bits(mask))

    def mask_elements(self, mask: int) -> list:
        return [self.elements[i] for i in iter_bits(mask)]

    def covers(self) -> list[tuple]:
        """Hasse diagram cover pairs (a, b) with a < b and nothing between."""
        out = []
        n = len(self.elements)
        for j in range(n):
            below = self.down[j] & ~(1 << j)
            for i in iter_bits(below):
                if not any(
                    (self.down[k] >> i) & 1
                    for k in iter_bits(below & ~(1 << i))
                ):
                    out.append((self.elements[i], self.elements[j]))
        return out

    def incomparable_pairs(self) -> list[tuple]:
        out = []
        n = len(self.elements)
        for i in range(n):
            for j in range(i + 1, n):
                if not ((self.down[j] >> i) & 1 or (self.down[i] >> j) & 1):
                    out.append((self.elements[i], self.elements[j]))
        return out

    def opposite(self) -> "Poset":
        n = len(self.elements)
        up = [0] * n
        for j in range(n):
            for i in iter_bits(self.down[j]):
                up[i] |= 1 << j
        return Poset(self.elements, up)

    def downset_masks(self, cap: int = 1 << 20) -> list[int]:
        """All down-closed subsets as masks, in ascending mask order."""
        order = linear_extension(self)
        downs = [0]
        for e in order:
            i = self._index[e]
            need = self.down[i] & ~(1 << i)
            add = [m | (1 << i) for m in downs if m & need == need]
            downs += add
            if len(downs) > cap:
                raise CapExceeded(
                    f"down-set lattice exceeds cap {cap} (exponential blow-up)"
                )
        return sorted(downs)

    def to_json(self) -> dict:
        pairs = []
        for a, b in self.covers():
            pairs.append([a, b])
        return {"elements": list(self.elements), "leq": pairs}

    @classmethod
    def from_json(cls, data: dict) -> "Poset":
        return cls.from_pairs(data["elements"], [tuple(p) for p in data["leq"]])

    def to_dot(self) -> str:
        lines = ["digraph hasse {", "  rankdir=BT;"]
        for e in self.elements:
            lines.append(f'  "{e}";')
        for a, b in self.covers():
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines)

    def __repr__(self):
        return f"Poset({self.elements})"


def linear_extension(P: Poset) -> list:
    """Order-preserving enumeration of the elements, minimal first; ties are
    broken by ascending element id so runs are reproducible."""
    n = len(P.elements)
    remaining = set(range(n))
    placed = 0
    out = []
    while remaining:
        ready = [i for i in remaining if P.down[i] & ~placed == (1 << i)]
        i = min(ready, key=lambda k: _sort_key(P.elements[k]))
        out.append(P.elements[i])
        placed |= 1 << i
        remaining.remove(i)
    return out


def lambda_top(P: Poset, lam_mask: int, top_id="top") -> Poset:
    """The down-set ``lam_mask`` extended with a new maximum element."""
    if not P.is_down_mask(lam_mask):
        raise ValueError("lambda must be a down-set")
    elems = P.mask_elements(lam_mask)
    while top_id in elems:
        top_id = top_id + "'"
    pairs = [(a, b) for a in elems for b in elems if P.leq(a, b)]
    pairs += [(e, top_id) for e in elems]
    return Poset.from_pairs(elems + [top_id], pairs)


# ---------------------------------------------------------------------------
# Finite distributive lattices


class FiniteDistributiveLattice:
    """Extensional finite lattice: elements with join/meet callables."""

    def __init__(self, elements: list, join, meet, bottom, top):
        self.elements = list(elements)
        self.join = join
        self.meet = meet
        self.bottom = bottom
        self.top = top
        self._set = set(self.elements)
        if bottom not in self._set or top not in self._set:
            raise ValueError("bottom/top must be elements")

    def __len__(self):
        return len(self.elements)

    def le(self, a, b) -> bool:
        return self.join(a, b) == b

    def validate(self, cap: int = 512) -> None:
        """Exhaustive axiom scan: closure, idempotence, commutativity,
        absorption, associativity, distributivity, neutral bounds.  Raises
        NotDistributive (or ValueError) naming the first failing instance."""
        els = self.elements
        if len(els) > cap:
            raise CapExceeded(f"lattice too large for exhaustive validation ({len(els)} > {cap})")
        for a in els:
            if self.join(a, a) != a or self.meet(a, a) != a:
                raise ValueError(f"idempotence fails at {a!r}")
            if self.join(a, self.bottom) != a or self.meet(a, self.top) != a:
                raise ValueError(f"neutral bound fails at {a!r}")
        for a in els:
            for b in els:
                j, m = self.join(a, b), self.meet(a, b)
                if j not in self._set or m not in self._set:
                    raise ValueError(f"not closed at ({a!r}, {b!r})")
                if j != self.join(b, a) or m != self.meet(b, a):
                    raise ValueError(f"commutativity fails at ({a!r}, {b!r})")
                if self.meet(a, j) != a or self.join(a, m) != a:
                    raise ValueError(f"absorption fails at ({a!r}, {b!r})")
        for a in els:
            for b in els:
                for c in els:
                    if self.join(a, self.join(b, c)) != self.join(self.join(a, b), c):
                        raise ValueError(f"join associativity fails at ({a!r},{b!r},{c!r})")
                    if self.meet(a, self.meet(b, c)) != self.meet(self.meet(a, b), c):
                        raise ValueError(f"meet associativity fails at ({a!r},{b!r},{c!r})")
                    lhs = self.meet(a, self.join(b, c))
                    rhs = self.join(self.meet(a, b), self.meet(a, c))
                    if lhs != rhs:
                        raise NotDistributive(
                            f"distributivity fails: {a!r} meet ({b!r} join {c!r}) = {lhs!r} "
                            f"!= {rhs!r}"
                        )

    def lower_covers(self, c) -> list:
        below = [a for a in self.elements if a != c and self.le(a, c)]
        return [a for a in below if not any(b != a and self.le(a, b) for b in below)]


def down_set_lattice(P: Poset, cap: int = 1 << 20) -> FiniteDistributiveLattice:
    """Lattice of down-closed subsets of P (as index masks), ordered by
    inclusion; join is union, meet intersection."""
    masks = P.downset_masks(cap=cap)
    full = masks[-1]
    return FiniteDistributiveLattice(
        masks,
        join=lambda a, b: a | b,
        meet=lambda a, b: a & b,
        bottom=0,
        top=full,
    )


def join_irreducibles(L: FiniteDistributiveLattice) -> tuple[Poset, list]:
    """Poset of join-irreducible elements (nonzero, exactly one lower cover),
    with the order inherited from L.  Returns (poset, elements); the poset's
    ids are the lattice elements themselves."""
    ji = []
    for c in L.elements:
        if c == L.bottom:
            continue
        if len(L.lower_covers(c)) == 1:
            ji.append(c)
    ji.sort(key=_sort_key)
    pairs = [(a, b) for a in ji for b in ji if L.le(a, b)]
    return Poset.from_pairs(ji, pairs), ji


def immediate_predecessor(L: FiniteDistributiveLattice, c):
    """The unique element directly below a join-irreducible c."""
    covers = L.lower_covers(c)
    if c == L.bottom or len(covers) != 1:
        raise ValueError(f"{c!r} is not join-irreducible (lower covers: {covers!r})")
    return covers[0]


@dataclass
class LatticeHom:
    """Map between finite lattices, held as an element table."""

    source: FiniteDistributiveLattice
    target: FiniteDistributiveLattice
    mapping: dict = field(default_factory=dict)

    def __call__(self, a):
        return self.mapping[a]

    def verify(self, bounded: bool = True) -> None:
        f = self.mapping
        for a in self.source.elements:
            for b in self.source.elements:
                if f[self.source.join(a, b)] != self.target.join(f[a], f[b]):
                    raise ValueError(f"join not preserved at ({a!r}, {b!r})")
                if f[self.source.meet(a, b)] != self.target.meet(f[a], f[b]):
                    raise ValueError(f"meet not preserved at ({a!r}, {b!r})")
        if bounded:
            if f[self.source.bottom] != self.target.bottom:
                raise ValueError("bottom not preserved")
            if f[self.source.top] != self.target.top:
                raise ValueError("top not preserved")

    def is_injective(self) -> bool:
        vals = list(self.mapping.values())
        return len(vals) == len(set(vals))


def birkhoff_iso(L: FiniteDistributiveLattice) -> LatticeHom:
    """The representation isomorphism a -> {join-irreducible c <= a} onto the
    down-set lattice of the join-irreducible poset.  Verifies bijectivity and
    the homomorphism laws; on a non-distributive input the failing axiom
    instance is reported instead."""
    L.validate()
    P, ji = join_irreducibles(L)
    O = down_set_lattice(P)
    mapping = {}
    for a in L.elements:
        mask = 0
        for i, c in enumerate(P.elements):
            if L.le(c, a):
                mask |= 1 << i
        mapping[a] = mask
    hom = LatticeHom(L, O, mapping)
    if len(set(mapping.values())) != len(L.elements) or len(L.elements) != len(O.elements):
        raise NotDistributive(
            f"|L| = {len(L.elements)} but |downsets(irreducibles)| = {len(O.elements)}"
        )
    hom.verify()
    return hom


# ---------------------------------------------------------------------------
# atom decomposition and separation of set-valued monomorphisms


def atom_decomposition(P: Poset, assignment: dict) -> dict:
    """Blocks of a monomorphism from the down-set lattice of P into a set
    algebra.  ``assignment`` maps every down-set mask to a set-like value
    supporting ``|``, ``&``, ``-`` and equality.

    The block of p is assignment(gamma) - assignment(beta) for any down-sets
    with gamma - beta = {p}; independence of the choice is checked, the
    blocks must be pairwise disjoint, and every assignment value must be
    exactly the union of its blocks."""
    masks = sorted(assignment)
    blocks = {}
    for i, p in enumerate(P.elements):
        bit = 1 << i
        candidates = []
        for gamma in masks:
            beta = gamma & ~bit
            if gamma & bit and beta in assignment:
                candidates.append(assignment[gamma] - assignment[beta])
        if not candidates:
            raise ValueError(f"no (beta, gamma) pair isolates {p!r}")
        first = candidates[0]
        for other in candidates[1:]:
            if other != first:
                raise ValueError(
                    f"block of {p!r} depends on the choice of down-set pair; "
                    "the assignment is not a monomorphism or the input is malformed"
                )
        blocks[p] = first
    items = list(blocks.items())
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            inter = items[i][1] & items[j][1]
            if inter:
                raise ValueError(f"blocks of {items[i][0]!r} and {items[j][0]!r} overlap")
    for mask, value in assignment.items():
        union = None
        for i in iter_bits(mask):
            b = blocks[P.elements[i]]
            union = b if union is None else (union | b)
        if union is None:
            if value:
                raise ValueError("bottom maps to a nonempty set")
        elif union != value:
            raise ValueError(f"reconstruction failed for down-set mask {mask:#x}")
    return blocks


def is_well_separated(P: Poset, blocks: dict, geom_touch, assignment: dict | None = None,
                      meet_equal=None) -> bool:
    """True when the evaluations of blocks of incomparable elements are
    geometrically disjoint.  ``geom_touch(A, B)`` must report whether the
    closed evaluations of two cell sets intersect.

    Separation makes intersections of images behave like lattice meets; when
    it holds and ``assignment``/``meet_equal`` are supplied, that consequence
    is asserted on every pair of assignment values as a cross-check."""
    for a, b in P.incomparable_pairs():
        if geom_touch(blocks[a], blocks[b]):
            return False
    if assignment is not None and meet_equal is not None:
        for x in assignment.values():
            for y in assignment.values():
                assert meet_equal(x, y), "separation holds but a meet equality failed"
    return True


def poset_from_file(path) -> Poset:
    with open(path) as fh:
        return Poset.from_json(json.load(fh))
