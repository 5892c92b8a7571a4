"""Built-in dynamical systems and their box-image oracles.

The 1D map families (quadratic, logistic, cubic double-well) get certified
range enclosures from piecewise monotonicity: the image of an interval is
hull of the endpoint values and the extremum values over interior critical
points, all exact rationals or rational brackets of controlled width.  The
Henon family gets exact interval-arithmetic ranges.  Flow systems are
reduced to a time-tau map by non-rigorous sampled integration with declared
padding, and their oracles are flagged as not certified.

Registry ids: ``quadratic``, ``logistic:a``, ``cubicwell:h``,
``henon:a,b``, ``flow:doublewell:tau,pad``, ``flow:linear:tau,pad``,
``flow:zero:tau,pad``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .grid import Box, to_frac


class OracleError(Exception):
    """Oracle output violates its contract (left the phase space, blew up)."""


@dataclass(frozen=True)
class BoxImageOracle:
    """Box -> cover of f(box) by boxes.

    ``guaranteed`` marks certified enclosures (f(B) is contained in the
    returned union for every input); sampled oracles leave it False and
    consumers must propagate the flag.  Oracles are pure functions of the
    box; stateful oracles are rejected by contract.
    """

    fn: Callable[[Box], tuple[Box, ...]]
    guaranteed: bool
    name: str
    domain: Box
    lipschitz_hint: float | None = None
    point_fn: Callable | None = None  # exact/float evaluation at a point

    def __call__(self, box: Box) -> tuple[Box, ...]:
        return self.fn(box)

    def point(self, x):
        if self.point_fn is None:
            raise ValueError(f"system {self.name} has no point evaluator")
        return self.point_fn(x)


def sqrt_bracket(q: Fraction, scale_bits: int = 48) -> tuple[Fraction, Fraction]:
    """Rational bracket [lo, hi] around sqrt(q) of width 2^-scale_bits-ish."""
    if q < 0:
        raise ValueError("negative radicand")
    p, d = q.numerator, q.denominator
    m = math.isqrt(p * d << (2 * scale_bits))
    den = d << scale_bits
    lo = Fraction(m, den)
    hi = Fraction(m + 1, den)
    return lo, hi


# ---------------------------------------------------------------------------
# piecewise monotone 1D maps


@dataclass(frozen=True)
class PiecewiseMonotone1D:
    """A continuous 1D map, monotone between consecutive critical points.

    ``crit`` lists interior critical points as ((xlo, xhi), (flo, fhi))
    rational brackets; ``f`` evaluates exactly on rationals.  Interval images
    are then the hull of endpoint values and bracketing extremum values, a
    certified cover of the true range that is tight up to bracket width.
    """

    f: Callable[[Fraction], Fraction]
    crit: tuple[tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]], ...]

    def range_cover(self, a: Fraction, b: Fraction) -> tuple[Fraction, Fraction]:
        los = [self.f(a), self.f(b)]
        his = list(los)
        for (xlo, xhi), (flo, fhi) in self.crit:
            if xhi < a or xlo > b:
                continue
            los.append(flo)
            his.append(fhi)
        return min(los), max(his)


def _mono_oracle(name: str, pm: PiecewiseMonotone1D, domain: Box, lip: float) -> BoxImageOracle:
    def fn(box: Box) -> tuple[Box, ...]:
        lo, hi = pm.range_cover(box.lo[0], box.hi[0])
        return (Box((lo,), (hi,)),)

    return BoxImageOracle(
        fn=fn,
        guaranteed=True,
        name=name,
        domain=domain,
        lipschitz_hint=lip,
        point_fn=lambda x: pm.f(to_frac(x)),
    )


def quadratic_system() -> BoxImageOracle:
    dom = Box.make([0], [1])
    pm = PiecewiseMonotone1D(f=lambda x: x * x, crit=())
    return _mono_oracle("quadratic", pm, dom, lip=2.0)


def logistic_system(a) -> BoxImageOracle:
    a = to_frac(a)
    if not 0 < a <= 4:
        raise ValueError("logistic parameter must be in (0, 4] to map [0,1] into itself")
    dom = Box.make([0], [1])
    half = Fraction(1, 2)
    peak = a / 4
    pm = PiecewiseMonotone1D(
        f=lambda x: a * x * (1 - x),
        crit=(((half, half), (peak, peak)),),
    )
    return _mono_oracle(f"logistic:{a}", pm, dom, lip=float(a))


def cubicwell_system(h) -> BoxImageOracle:
    """x -> x + h*x*(1 - x^2) on [-2, 2]: two attracting fixed points at
    -1 and +1 and a repelling one at 0."""
    h = to_frac(h)
    if not 0 < h <= Fraction(2, 3):
        raise ValueError("cubicwell parameter must be in (0, 2/3] to map [-2,2] into itself")
    dom = Box.make([-2], [2])
    # critical points at +-sqrt((1+h)/(3h)), extremum value +-xc*(2/3)(1+h)
    q = (1 + h) / (3 * h)
    xlo, xhi = sqrt_bracket(q)
    scale = Fraction(2, 3) * (1 + h)
    crit = (
        ((-xhi, -xlo), (-xhi * scale, -xlo * scale)),
        ((xlo, xhi), (xlo * scale, xhi * scale)),
    )
    pm = PiecewiseMonotone1D(f=lambda x: x + h * x * (1 - x * x), crit=crit)
    return _mono_oracle(f"cubicwell:{h}", pm, dom, lip=float(1 + h + 12 * h))


def henon_system(a, b, domain: Box | None = None) -> BoxImageOracle:
    """(x, y) -> (1 - a x^2 + y, b x), exact interval ranges."""
    a, b = to_frac(a), to_frac(b)
    dom = domain if domain is not None else Box.make([-Fraction(5, 2), -1], [Fraction(5, 2), 1])

    def fx(x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
        return 1 - a * x * x + y, b * x

    def fn(box: Box) -> tuple[Box, ...]:
        x0, y0 = box.lo
        x1, y1 = box.hi
        sq_hi = max(x0 * x0, x1 * x1)
        sq_lo = Fraction(0) if x0 <= 0 <= x1 else min(x0 * x0, x1 * x1)
        if a >= 0:
            u_lo, u_hi = 1 - a * sq_hi + y0, 1 - a * sq_lo + y1
        else:
            u_lo, u_hi = 1 - a * sq_lo + y0, 1 - a * sq_hi + y1
        v_lo, v_hi = (b * x0, b * x1) if b >= 0 else (b * x1, b * x0)
        return (Box((u_lo, v_lo), (u_hi, v_hi)),)

    return BoxImageOracle(
        fn=fn,
        guaranteed=True,
        name=f"henon:{a},{b}",
        domain=dom,
        point_fn=lambda p: fx(to_frac(p[0]), to_frac(p[1])),
    )


# ---------------------------------------------------------------------------
# flows, reduced to a time-tau map by sampled integration


@dataclass(frozen=True)
class FlowConfig:
    field: Callable
    tau: float
    step: float
    padding: float
    name: str
    domain: Box

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.padding <= 0:
            raise ValueError("non-rigorous integration requires positive padding")


VECTOR_FIELDS = {
    "doublewell": (lambda x: tuple(xi - xi**3 for xi in x), Box.make([-2], [2])),
    "linear": (lambda x: tuple(-xi for xi in x), Box.make([-1], [1])),
    "zero": (lambda x: tuple(0.0 for _ in x), Box.make([-1], [1])),
}


def _rk4(field, x, dt):
    k1 = field(x)
    k2 = field(tuple(a + dt / 2 * b for a, b in zip(x, k1)))
    k3 = field(tuple(a + dt / 2 * b for a, b in zip(x, k2)))
    k4 = field(tuple(a + dt * b for a, b in zip(x, k3)))
    return tuple(
        a + dt / 6 * (b + 2 * c + 2 * d + e)
        for a, b, c, d, e in zip(x, k1, k2, k3, k4)
    )


def integrate_flow(flow: FlowConfig, x0) -> tuple[float, ...]:
    x = tuple(float(v) for v in x0)
    nsteps = max(1, math.ceil(flow.tau / flow.step))
    dt = flow.tau / nsteps
    dom_lo = [float(v) for v in flow.domain.lo]
    dom_hi = [float(v) for v in flow.domain.hi]
    slack = 1e-9
    for _ in range(nsteps):
        x = _rk4(flow.field, x, dt)
        if any(not (lo - slack <= v <= hi + slack) for v, lo, hi in zip(x, dom_lo, dom_hi)):
            raise OracleError(f"trajectory from {x0} left the domain during integration")
        if any(not math.isfinite(v) for v in x):
            raise OracleError(f"integration blow-up from {x0}")
    return x


def _box_samples(box: Box):
    axes = []
    for a, b in zip(box.lo, box.hi):
        fa, fb = float(a), float(b)
        axes.append((fa, (fa + fb) / 2, fb))
    from itertools import product as _product

    return [tuple(p) for p in _product(*axes)]


def time_tau_oracle(flow: FlowConfig) -> BoxImageOracle:
    """Sample corner/midpoint points of the box, integrate each for time
    tau, bound the endpoints and inflate by the declared padding plus a
    local-growth estimate.  Not certified."""

    def fn(box: Box) -> tuple[Box, ...]:
        samples = _box_samples(box)
        ends = [integrate_flow(flow, s) for s in samples]
        center = samples[len(samples) // 2]
        ec = integrate_flow(flow, center)
        growth = 1.0
        for s, e in zip(samples, ends):
            ds = math.dist(s, center)
            de = math.dist(e, ec)
            if ds > 0:
                growth = max(growth, de / ds)
        # farthest distance from a box point to the sample set: half the
        # corner-to-midpoint spacing per axis
        spacing = max((float(b) - float(a)) / 4 for a, b in zip(box.lo, box.hi))
        pad = to_frac(flow.padding) + to_frac(growth) * to_frac(spacing)
        lo = tuple(min(e[i] for e in ends) for i in range(box.dim))
        hi = tuple(max(e[i] for e in ends) for i in range(box.dim))
        out = Box(tuple(map(to_frac, lo)), tuple(map(to_frac, hi))).inflate(pad)
        clipped = out.intersection(flow.domain)
        if clipped is None:
            raise OracleError(f"time-tau image of {box.to_json()} misses the domain")
        return (clipped,)

    return BoxImageOracle(
        fn=fn,
        guaranteed=False,
        name=flow.name,
        domain=flow.domain,
        point_fn=lambda x: integrate_flow(flow, x if isinstance(x, (tuple, list)) else (x,)),
    )


# ---------------------------------------------------------------------------
# registry


def make_system(system_id: str, domain: Box | None = None) -> BoxImageOracle:
    """Build a registered system from its id string."""
    parts = system_id.split(":")
    kind = parts[0]
    if kind == "quadratic":
        oracle = quadratic_system()
    elif kind == "logistic":
        oracle = logistic_system(parts[1])
    elif kind == "cubicwell":
        oracle = cubicwell_system(parts[1])
    elif kind == "henon":
        a, b = parts[1].split(",")
        oracle = henon_system(a, b, domain)
    elif kind == "flow":
        field_name = parts[1]
        tau_s, pad_s = parts[2].split(",")
        field, default_dom = VECTOR_FIELDS[field_name]
        flow = FlowConfig(
            field=field,
            tau=float(tau_s),
            step=min(0.05, float(tau_s) / 4),
            padding=float(pad_s),
            name=system_id,
            domain=domain if domain is not None else default_dom,
        )
        return time_tau_oracle(flow)
    else:
        raise ValueError(f"unknown system {system_id!r}")
    if domain is not None and kind != "henon":
        if domain != oracle.domain:
            raise ValueError(
                f"system {system_id!r} is defined on {oracle.domain.to_json()}"
            )
    return oracle
