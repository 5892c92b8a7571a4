import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attlat.lattice import (
    CapExceeded,
    FiniteDistributiveLattice,
    NotDistributive,
    Poset,
    atom_decomposition,
    birkhoff_iso,
    down_set_lattice,
    immediate_predecessor,
    is_well_separated,
    join_irreducibles,
    lambda_top,
    linear_extension,
)

ANTICHAIN = Poset.from_pairs(["a", "b"], [])
CHAIN3 = Poset.from_pairs(["a", "b", "c"], [("a", "b"), ("b", "c")])
VPOSET = Poset.from_pairs(["a", "b", "c"], [("a", "c"), ("b", "c")])


def brute_downsets(P: Poset) -> set[int]:
    """Independent oracle: filter all subsets for down-closedness."""
    n = len(P)
    out = set()
    for mask in range(1 << n):
        if all(P.down[i] & ~mask == 0 for i in range(n) if (mask >> i) & 1):
            out.add(mask)
    return out


def test_poset_from_cover_pairs_closure():
    assert CHAIN3.leq("a", "c")
    assert not CHAIN3.leq("c", "a")
    assert CHAIN3.leq("a", "a")


def test_poset_rejects_cycles():
    with pytest.raises(ValueError):
        Poset.from_pairs(["a", "b"], [("a", "b"), ("b", "a")])


def test_downset_lattice_antichain():
    L = down_set_lattice(ANTICHAIN)
    assert len(L) == 4
    assert set(L.elements) == brute_downsets(ANTICHAIN)


def test_downset_lattice_chain():
    L = down_set_lattice(CHAIN3)
    assert len(L) == 4
    # prefixes only
    assert set(L.elements) == {0b000, 0b001, 0b011, 0b111}


def test_downset_lattice_vposet_oracle():
    L = down_set_lattice(VPOSET)
    assert set(L.elements) == brute_downsets(VPOSET)
    assert len(L) == 5


def test_downset_cap():
    big = Poset.from_pairs(list(range(25)), [])
    with pytest.raises(CapExceeded):
        down_set_lattice(big, cap=1 << 10)


def test_join_irreducibles_boolean_and_chain():
    P, ji = join_irreducibles(down_set_lattice(ANTICHAIN))
    assert len(ji) == 2 and not P.covers()  # two incomparable atoms
    P2, ji2 = join_irreducibles(down_set_lattice(CHAIN3))
    assert len(ji2) == 3 and len(P2.covers()) == 2  # a chain


def test_join_irreducibles_vposet_recovers_poset():
    L = down_set_lattice(VPOSET)
    P, ji = join_irreducibles(L)
    assert len(ji) == 3
    # order isomorphic to the V: two minimal elements below one top
    covers = P.covers()
    assert len(covers) == 2
    tops = {b for _, b in covers}
    assert len(tops) == 1


def test_immediate_predecessor():
    L = down_set_lattice(CHAIN3)
    assert immediate_predecessor(L, 0b011) == 0b001
    assert immediate_predecessor(L, 0b001) == 0  # atom -> bottom
    LV = down_set_lattice(VPOSET)
    # the full down-set covers exactly {a,b}
    assert immediate_predecessor(LV, 0b111) == 0b011
    with pytest.raises(ValueError):
        immediate_predecessor(LV, 0b011)  # {a,b} has two lower covers


def test_birkhoff_iso_chain():
    L = down_set_lattice(CHAIN3)
    hom = birkhoff_iso(L)
    hom.verify()
    assert hom.is_injective()
    assert len(hom.target.elements) == len(L.elements)


def m3() -> FiniteDistributiveLattice:
    els = ["0", "a", "b", "c", "1"]

    def join(x, y):
        if x == y:
            return x
        if "0" in (x, y):
            return x if y == "0" else y
        return "1"

    def meet(x, y):
        if x == y:
            return x
        if "1" in (x, y):
            return x if y == "1" else y
        return "0"

    return FiniteDistributiveLattice(els, join, meet, "0", "1")


def test_birkhoff_rejects_m3():
    with pytest.raises(NotDistributive):
        birkhoff_iso(m3())


def test_atom_decomposition_identity_embedding():
    blocks = atom_decomposition(
        ANTICHAIN,
        {m: frozenset(ANTICHAIN.mask_elements(m)) for m in ANTICHAIN.downset_masks()},
    )
    assert blocks == {"a": frozenset({"a"}), "b": frozenset({"b"})}


def test_atom_decomposition_chain_difference():
    chain2 = Poset.from_pairs(["a", "b"], [("a", "b")])
    assignment = {0: frozenset(), 0b01: frozenset({1, 2}), 0b11: frozenset({1, 2, 3})}
    blocks = atom_decomposition(chain2, assignment)
    assert blocks == {"a": frozenset({1, 2}), "b": frozenset({3})}


def test_atom_decomposition_detects_non_mono():
    # two down-set pairs isolating "a" disagree
    square = Poset.from_pairs(["a", "b"], [])
    assignment = {0: frozenset(), 0b01: frozenset({1}), 0b10: frozenset({2}), 0b11: frozenset({1, 2, 3})}
    with pytest.raises(ValueError):
        atom_decomposition(square, assignment)


def test_is_well_separated_vacuous_cases():
    single = Poset.from_pairs(["a"], [])
    assert is_well_separated(single, {"a": frozenset({1})}, lambda x, y: True)
    chain2 = Poset.from_pairs(["a", "b"], [("a", "b")])
    assert is_well_separated(chain2, {"a": frozenset(), "b": frozenset()}, lambda x, y: True)
    # incomparable pair with touching blocks
    assert not is_well_separated(ANTICHAIN, {"a": 1, "b": 2}, lambda x, y: True)


def test_linear_extension_examples():
    assert linear_extension(ANTICHAIN) == ["a", "b"]
    assert linear_extension(CHAIN3) == ["a", "b", "c"]
    ext = linear_extension(VPOSET)
    assert ext[-1] == "c" and sorted(ext[:2]) == ["a", "b"]


def test_lambda_top():
    # empty down-set: two-element lattice
    t0 = lambda_top(VPOSET, 0)
    assert len(down_set_lattice(t0)) == 2
    # full poset plus a new top
    tp = lambda_top(VPOSET, 0b111)
    assert len(tp) == 4
    # down-set {a}: chain of length 2, three down-sets
    ta = lambda_top(VPOSET, 1 << VPOSET.index("a"))
    assert len(down_set_lattice(ta)) == 3


def test_lambda_top_sublattice_shape():
    # downsets of lambda^top match {alpha <= lambda} plus the full set
    lam = 1 << VPOSET.index("a")
    t = lambda_top(VPOSET, lam)
    expected = sum(1 for m in VPOSET.downset_masks() if m & ~lam == 0) + 1
    assert len(down_set_lattice(t)) == expected


@st.composite
def posets(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                pairs.append((i, j))
    return Poset.from_pairs(list(range(n)), pairs)


@settings(max_examples=60, deadline=None)
@given(posets())
def test_downset_lattice_is_distributive_and_birkhoff_roundtrip(P):
    L = down_set_lattice(P)
    L.validate()  # raises on any axiom failure, including distributivity
    assert set(L.elements) == brute_downsets(P)
    # join-irreducibles recover the poset
    J, ji = join_irreducibles(L)
    assert len(ji) == len(P)
    hom = birkhoff_iso(L)
    assert hom.is_injective() and len(hom.target.elements) == len(L.elements)
    # counts for special shapes
    if not P.covers():
        assert len(L) == 1 << len(P)


@settings(max_examples=30, deadline=None)
@given(posets(max_n=5))
def test_linear_extension_is_order_preserving(P):
    ext = linear_extension(P)
    pos = {e: i for i, e in enumerate(ext)}
    for a in P.elements:
        for b in P.elements:
            if P.leq(a, b):
                assert pos[a] <= pos[b]


def test_poset_json_dot_roundtrip():
    data = VPOSET.to_json()
    back = Poset.from_json(data)
    assert back.elements == VPOSET.elements
    assert back.down == VPOSET.down
    dot = VPOSET.to_dot()
    assert '"a" -> "c"' in dot and "hasse" in dot
