import math
from fractions import Fraction

import pytest

from attlat.approx import (
    build_sequence,
    common_refinement_map,
    default_rho,
    encloses,
    is_outer_approximation,
    is_weak_outer_approximation,
    iterate_enclosure_check,
    map_order_leq,
    minimal_map,
    rho_minimal_map,
)
from attlat.dynamics import CellSet, MultivaluedMap
from attlat.grid import Box, BoxUnion, Grid
from attlat.systems import (
    BoxImageOracle,
    FlowConfig,
    OracleError,
    cubicwell_system,
    henon_system,
    integrate_flow,
    logistic_system,
    make_system,
    quadratic_system,
)

QUAD = quadratic_system()


def identity_oracle(domain: Box) -> BoxImageOracle:
    return BoxImageOracle(
        fn=lambda b: (b,),
        guaranteed=True,
        name="identity",
        domain=domain,
        point_fn=lambda x: x,
    )


def constant_oracle(domain: Box, c) -> BoxImageOracle:
    pt = Box.point([c])
    return BoxImageOracle(
        fn=lambda b: (pt,),
        guaranteed=True,
        name="const",
        domain=domain,
        point_fn=lambda x: c,
    )


# --- minimal / rho-minimal ----------------------------------------------------


def test_minimal_map_quadratic_depth1():
    F = minimal_map(Grid(QUAD.domain, 1), QUAD)
    assert F.forward == [[0], [0, 1]]


def test_minimal_map_identity_includes_face_neighbors():
    g = Grid(Box.make([0], [1]), 2)
    F = minimal_map(g, identity_oracle(g.domain))
    assert F.forward == [[0, 1], [0, 1, 2], [1, 2, 3], [2, 3]]


def test_minimal_map_constant():
    g = Grid(Box.make([0], [1]), 2)
    F = minimal_map(g, constant_oracle(g.domain, Fraction(1, 8)))
    assert all(f == [0] for f in F.forward)
    F2 = minimal_map(g, constant_oracle(g.domain, Fraction(1, 4)))
    assert all(f == [0, 1] for f in F2.forward)  # point on a shared face


def test_minimal_map_rejects_escaping_oracle():
    g = Grid(Box.make([0], [1]), 1)
    bad = BoxImageOracle(
        fn=lambda b: (Box.make([0], [2]),), guaranteed=True, name="bad", domain=g.domain
    )
    with pytest.raises(OracleError):
        minimal_map(g, bad)


def test_rho_zero_equals_minimal_and_monotone_in_rho():
    g = Grid(QUAD.domain, 3)
    F0 = minimal_map(g, QUAD)
    assert rho_minimal_map(g, QUAD, 0).forward == F0.forward
    Fa = rho_minimal_map(g, QUAD, "0.01")
    Fb = rho_minimal_map(g, QUAD, "0.1")
    assert encloses(Fa, F0) and encloses(Fb, Fa)


def test_rho_of_domain_size_is_full():
    g = Grid(QUAD.domain, 2)
    F = rho_minimal_map(g, QUAD, 1)
    assert all(f == [0, 1, 2, 3] for f in F.forward)


def test_rho_example_depth2():
    # image of the first cell inflated by 0.05 still touches only that cell
    g = Grid(QUAD.domain, 2)
    F = rho_minimal_map(g, QUAD, "0.05")
    assert F.forward[0] == [0]


# --- enclosure order ------------------------------------------------------------


def test_encloses_partial_order():
    g = Grid(QUAD.domain, 3)
    F0 = minimal_map(g, QUAD)
    F1 = rho_minimal_map(g, QUAD, "0.05")
    assert encloses(F0, F0)
    assert encloses(F1, F0) and not encloses(F0, F1)
    with pytest.raises(ValueError):
        encloses(F0, minimal_map(Grid(QUAD.domain, 2), QUAD))


def test_outer_approximation_iff_encloses_minimal():
    g = Grid(QUAD.domain, 2)
    F0 = minimal_map(g, QUAD)
    assert is_outer_approximation(F0, g, QUAD)
    # drop one required edge
    fwd = [list(a) for a in F0.forward]
    fwd[1] = fwd[1][:-1]
    assert not is_outer_approximation(MultivaluedMap(g.n, fwd), g, QUAD)
    # extra edges stay outer
    fwd2 = [sorted(set(a) | {3}) for a in F0.forward]
    assert is_outer_approximation(MultivaluedMap(g.n, fwd2), g, QUAD)


def test_weak_outer_approximation():
    g = Grid(QUAD.domain, 1)
    F0 = minimal_map(g, QUAD)
    assert is_weak_outer_approximation(F0, g, QUAD)
    # the invariant first cell maps into itself; the single-step image of the
    # second cell is covered only through the reachable closure
    F = MultivaluedMap(2, [[0], [1]])
    assert not is_weak_outer_approximation(F, g, QUAD)  # f([1/2,1]) needs cell 0
    F2 = MultivaluedMap(2, [[0], [0, 1]])
    assert is_weak_outer_approximation(F2, g, QUAD)


def test_weak_outer_counterexample_never_covers():
    g = Grid(Box.make([0], [1]), 1)
    const = constant_oracle(g.domain, Fraction(3, 4))
    F = MultivaluedMap(2, [[0], [0]])  # reachable closure of either cell misses cell 1
    assert not is_weak_outer_approximation(F, g, const)


# --- iterate enclosure ------------------------------------------------------------


def test_iterate_enclosure_trivial_bound():
    g = Grid(QUAD.domain, 3)
    F = rho_minimal_map(g, QUAD, "0.01")
    eps = g.diam() + 0.01 + 1e-9
    rep = iterate_enclosure_check(F, g, QUAD, k=1, eps=eps)
    assert rep.passed and rep.certified


def test_iterate_enclosure_depth8_passes():
    g = Grid(QUAD.domain, 8)
    F = rho_minimal_map(g, QUAD, Fraction(1, 512))
    rep = iterate_enclosure_check(F, g, QUAD, k=3, eps="0.05")
    assert rep.passed and rep.max_excess <= 0.05


def test_iterate_enclosure_coarse_fails_with_cells():
    g = Grid(QUAD.domain, 2)
    F = rho_minimal_map(g, QUAD, Fraction(1, 8))
    rep = iterate_enclosure_check(F, g, QUAD, k=3, eps="0.01")
    assert not rep.passed and rep.failures


def test_iterate_enclosure_backward_heuristic():
    g = Grid(QUAD.domain, 4)
    F = rho_minimal_map(g, QUAD, Fraction(1, 32))
    rep = iterate_enclosure_check(F, g, QUAD, k=1, eps="0.5", direction="backward")
    assert not rep.certified
    assert rep.passed


# --- common refinement of maps -------------------------------------------------------


def test_common_refinement_same_grid_is_meet():
    g = Grid(QUAD.domain, 2)
    F = rho_minimal_map(g, QUAD, "0.02")
    FF, fine = common_refinement_map(F, g, F, g)
    assert fine == g and FF.forward == F.forward


def test_common_refinement_below_both():
    g1, g2 = Grid(QUAD.domain, 1), Grid(QUAD.domain, 2)
    F1, F2 = minimal_map(g1, QUAD), minimal_map(g2, QUAD)
    FF, fine = common_refinement_map(F1, g1, F2, g2)
    assert fine.depth == (2,)
    assert map_order_leq(FF, fine, F1, g1)
    assert encloses(F2, FF)


def test_common_refinement_identity_maps():
    g1, g2 = Grid(Box.make([0], [1]), 1), Grid(Box.make([0], [1]), 2)
    ident = identity_oracle(g1.domain)
    FF, fine = common_refinement_map(
        minimal_map(g1, ident), g1, minimal_map(g2, ident), g2
    )
    assert fine.depth == (2,)
    # still an outer approximation of the identity on the fine grid
    assert is_outer_approximation(FF, fine, ident)


# --- sequences -------------------------------------------------------------------------


def test_build_sequence_squeeze_and_convergence():
    seq = build_sequence(QUAD, [3, 4, 5])
    assert seq.is_convergent()
    assert all(lv.squeeze_ok for lv in seq.levels)
    assert [lv.rho for lv in seq.levels] == [default_rho(d) for d in (3, 4, 5)]


def test_build_sequence_single_level():
    seq = build_sequence(QUAD, [4])
    assert len(seq) == 1 and seq.levels[0].squeeze_ok


def test_build_sequence_rejects_bad_depths():
    with pytest.raises(ValueError):
        build_sequence(QUAD, [4, 4])
    with pytest.raises(ValueError):
        build_sequence(QUAD, [5, 4])


def test_cofiltered_sequence_is_monotone():
    lg = logistic_system("3.2")
    seq = build_sequence(lg, [4, 6, 8], cofiltered=True)
    assert all(lv.cofilt_ok for lv in seq.levels[1:])
    assert all(lv.squeeze_ok for lv in seq.levels)
    for coarse, fine in zip(seq.levels, seq.levels[1:]):
        assert map_order_leq(fine.F, fine.grid, coarse.F, coarse.grid)


def test_plain_sequence_levels_left_total():
    seq = build_sequence(cubicwell_system("0.4"), [4, 5], check_squeeze=False)
    for lv in seq.levels:
        assert lv.F.totality()["left_total"]


# --- flows ------------------------------------------------------------------------------


def test_linear_flow_contains_exact_image():
    lin = make_system("flow:linear:1.0,0.01")
    out = lin(Box.make(["0.5"], ["0.6"]))
    lo, hi = float(out[0].lo[0]), float(out[0].hi[0])
    assert lo <= 0.5 * math.exp(-1) and 0.6 * math.exp(-1) <= hi
    assert not lin.guaranteed


def test_zero_flow_is_identity_with_padding():
    z = make_system("flow:zero:1.0,0.01")
    box = Box.make(["0.25"], ["0.5"])
    out = z(box)[0]
    assert out.contains_box(box)
    # padding plus the sampling-gap inflation (width/4) bounds the slack
    assert float(out.hi[0]) - 0.5 <= 0.01 + 0.25 / 4 + 1e-9


def test_double_well_flow_fixed_points():
    dw = make_system("flow:doublewell:0.5,0.02")
    for fp in (-1.0, 0.0, 1.0):
        out = dw(Box.point([fp]))[0]
        assert out.contains_point([fp])


def test_flow_blowup_reports():
    cfg = FlowConfig(
        field=lambda x: tuple(v * v for v in x),
        tau=5.0,
        step=0.05,
        padding=0.01,
        name="explode",
        domain=Box.make([0], [2]),
    )
    with pytest.raises(OracleError):
        integrate_flow(cfg, (1.9,))


def test_flow_tau_validation():
    with pytest.raises(ValueError):
        FlowConfig(field=lambda x: x, tau=0, step=0.1, padding=0.1, name="x", domain=Box.make([0], [1]))
    with pytest.raises(ValueError):
        FlowConfig(field=lambda x: x, tau=1, step=0.1, padding=0, name="x", domain=Box.make([0], [1]))


# --- 2d system ---------------------------------------------------------------------------


def test_henon_exact_range_and_map():
    hn = henon_system("0.2", "0.3")
    out = hn(Box.make(["-0.5", "-0.1"], ["0.5", "0.1"]))[0]
    # x' = 1 - 0.2 x^2 + y over x in [-.5,.5], y in [-.1,.1] -> [0.85, 1.1]
    assert out.lo[0] == Fraction(85, 100) and out.hi[0] == Fraction(11, 10)
    assert out.lo[1] == Fraction(-15, 100) and out.hi[1] == Fraction(15, 100)
    g = Grid(hn.domain, [3, 3])
    F = minimal_map(g, hn)
    assert F.totality()["left_total"]


def test_registry_unknown():
    with pytest.raises(ValueError):
        make_system("nope")
    with pytest.raises(ValueError):
        make_system("logistic:5")


# --- evaluation squares --------------------------------------------------------------


def test_forward_invariant_cells_give_trapping_region():
    """For a weak outer approximation, the evaluation of a forward invariant
    cell set traps the true dynamics: the oracle image of every member cell
    is covered by the set itself."""
    g = Grid(QUAD.domain, 4)
    F = minimal_map(g, QUAD)
    u = F.omega(CellSet.from_indices(g.n, [5]))
    u = F.forward_closure(u)
    assert F.classify(u)["forward_invariant"]
    for cell in u:
        assert g.cov(BoxUnion(QUAD(g.cell_box(cell)))).issubset(u)


def test_attracting_set_eventually_encloses_iterated_oracle():
    """For an outer approximation and an attracting cell set, the certified
    iterated oracle image of its evaluation ends up inside the set."""
    g = Grid(QUAD.domain, 5)
    F = rho_minimal_map(g, QUAD, Fraction(1, 64))
    u = g.cov(BoxUnion.single([0], ["0.4"]))
    assert F.classify(u)["attracting"]
    boxes = [g.cell_box(c) for c in u]
    for _ in range(8):
        boxes = [img for b in boxes for img in QUAD(b)]
    assert g.cov(BoxUnion(boxes)).issubset(u)


def test_limit_commutes_with_evaluation_shadow():
    """The eventual image of a covered evaluation agrees for a set and for
    its own eventual image (the combinatorial shadow of limit-evaluation
    commutation), bitwise at one level and within a cell across levels."""
    g = Grid(QUAD.domain, 6)
    F = rho_minimal_map(g, QUAD, Fraction(1, 128))
    u = g.cov(BoxUnion.single(["0.1"], ["0.7"]))
    om = F.omega(u)
    lhs = F.omega(g.cov(g.evaluate(u)))
    rhs = F.omega(g.cov(g.evaluate(om)))
    assert lhs.bits == rhs.bits
    # across levels: compare at a finer reference grid
    fine = Grid(QUAD.domain, 8)
    Ff = rho_minimal_map(fine, QUAD, Fraction(1, 512))
    a = Ff.omega(fine.cov(g.evaluate(u)))
    b = Ff.omega(fine.cov(g.evaluate(om)))
    from attlat.grid import hausdorff_dist2_1d

    assert hausdorff_dist2_1d(fine.evaluate(a), fine.evaluate(b)) <= 4 * fine.diam2()
