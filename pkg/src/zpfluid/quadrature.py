"""Numerical integration engines.

Three engines share one result type:

* ``integrate_interval`` / ``integrate_semi_infinite``: globally adaptive
  Gauss-Kronrod (10/21 point) bisection. The semi-infinite version maps
  [a, inf) onto (0, 1) first.
* ``integrate_2d``: the 1D engine iterated (outer adaptive over inner results).
* ``integrate_mc``: importance sampling with an independent exponential
  proposal per coordinate, processed in fixed-size seeded chunks so the
  answer does not depend on how many workers evaluate it.

Integrands are vectorized: they receive a 1D float array (or an ``(n, d)``
array for Monte Carlo) and return an array of the same leading length.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError, ValidationError
from .parallel import map_ordered

ABS_FLOOR = 1e-300
TRANSFORMS = ("algebraic-map", "exponential-map")

# Kronrod abscissae/weights of the 21-point rule (QUADPACK qk21), positive half
# in descending order, followed by the centre node.
_XK_POS = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
])
_WK_POS = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208292099266,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
])
_WK_CENTRE = 0.149445554002916905664936468389821


def _build_rule():
    nodes = np.concatenate([-_XK_POS, [0.0], _XK_POS[::-1]])
    wk = np.concatenate([_WK_POS, [_WK_CENTRE], _WK_POS[::-1]])
    # embedded 10-point Gauss rule lives on every second Kronrod node
    gx, gw = np.polynomial.legendre.leggauss(10)
    wg = np.zeros_like(wk)
    for x, w in zip(gx, gw):
        i = int(np.argmin(np.abs(nodes - x)))
        assert abs(nodes[i] - x) < 1e-14
        wg[i] = w
    return nodes, wk, wg


_NODES, _WK, _WG = _build_rule()


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    transform: str = "algebraic-map"
    # length scale of the [0, inf) -> (0, 1) map; put it near the integrand's bulk
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValidationError(f"rel_tol must be in (0, 1), got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be >= 1")
        if self.transform not in TRANSFORMS:
            raise ValidationError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")
        if not self.scale > 0.0:
            raise ValidationError("scale must be positive")


@dataclass(frozen=True)
class MonteCarloSpec:
    samples: int = 1_000_000
    seed: int = 0
    proposal_scale: float = 1.0

    def __post_init__(self):
        if self.samples < 1000:
            raise ValidationError(f"samples must be >= 1000, got {self.samples}")
        if not self.proposal_scale > 0.0:
            raise ValidationError("proposal_scale must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool
    message: str = ""

    @property
    def rel_error(self) -> float:
        if self.value == 0.0:
            return math.inf if self.abs_error_estimate > 0 else 0.0
        return self.abs_error_estimate / abs(self.value)

    def scaled(self, factor: float) -> "IntegralResult":
        return IntegralResult(self.value * factor, self.abs_error_estimate * abs(factor),
                              self.evaluations, self.converged, self.message)


def _eval_panels(f, lows, highs):
    """Kronrod value and |K - G| for a batch of panels in one integrand call."""
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    centre = 0.5 * (lows + highs)
    half = 0.5 * (highs - lows)
    x = centre[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    finite = np.all(np.isfinite(y), axis=1)
    k = half * (y @ _WK)
    g = half * (y @ _WG)
    return k, np.abs(k - g), finite


def integrate_interval(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       spec: QuadratureSpec = QuadratureSpec(),
                       breakpoints=None) -> IntegralResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over the finite interval [a, b].

    The panel with the largest error estimate is bisected until the summed
    estimate drops below ``rel_tol * |value|`` (or the 1e-300 floor) or the
    panel budget runs out. Panels too narrow to split in floating point are
    retired with their error kept in the total.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValidationError("integrate_interval needs finite limits")
    if a == b:
        return IntegralResult(0.0, 0.0, 0, True)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    bps = () if breakpoints is None else np.asarray(breakpoints, dtype=float).ravel()
    edges = [a] + sorted(float(p) for p in bps if a < p < b) + [b]
    k, e, ok = _eval_panels(f, edges[:-1], edges[1:])
    evaluations = 21 * len(k)
    if not ok.all():
        return IntegralResult(sign * math.nan, math.inf, evaluations, False,
                              "non-finite integrand value")
    heap = []
    for i in range(len(k)):
        heapq.heappush(heap, (-e[i], i, edges[i], edges[i + 1], k[i], e[i]))
    counter = len(k)
    retired_val: list[float] = []
    retired_err: list[float] = []
    npanels = len(k)
    total = math.fsum(k)
    err = math.fsum(e)
    while True:
        if err <= max(spec.rel_tol * abs(total), ABS_FLOOR):
            # running sums drift; confirm with exact sums before stopping
            total = math.fsum([p[4] for p in heap] + retired_val)
            err = math.fsum([p[5] for p in heap] + retired_err)
            if err <= max(spec.rel_tol * abs(total), ABS_FLOOR):
                return IntegralResult(float(sign * total), float(err), evaluations, True)
        if not heap:
            return IntegralResult(float(sign * total), float(err), evaluations, False,
                                  "panels exhausted at floating-point resolution")
        if npanels >= spec.max_subdivisions:
            total = math.fsum([p[4] for p in heap] + retired_val)
            err = math.fsum([p[5] for p in heap] + retired_err)
            return IntegralResult(float(sign * total), float(err), evaluations, False,
                                  f"subdivision budget {spec.max_subdivisions} exhausted")
        _, _, lo, hi, pk, pe = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi) or (hi - lo) <= 64 * np.finfo(float).eps * max(abs(lo), abs(hi)):
            retired_val.append(pk)
            retired_err.append(pe)
            continue
        ck, ce, ok = _eval_panels(f, [lo, mid], [mid, hi])
        evaluations += 42
        if not ok.all():
            bad = lo if not ok[0] else mid
            return IntegralResult(float(sign * total), math.inf, evaluations, False,
                                  f"non-finite integrand value in panel starting at {bad:.6g}")
        total += ck[0] + ck[1] - pk
        err += ce[0] + ce[1] - pe
        npanels += 1
        for j, (plo, phi) in enumerate(((lo, mid), (mid, hi))):
            counter += 1
            heapq.heappush(heap, (-ce[j], counter, plo, phi, ck[j], ce[j]))


def integrate_semi_infinite(f: Callable[[np.ndarray], np.ndarray],
                            spec: QuadratureSpec = QuadratureSpec(),
                            lower: float = 0.0) -> IntegralResult:
    """Integral of ``f`` over [lower, inf) through a map of (0, 1).

    algebraic-map:   u = lower + L t / (1 - t)
    exponential-map: u = lower - L ln(1 - t)

    The exponential map leaves a factor e^{u/L} in the transformed integrand,
    so it only suits tails that decay at least exponentially; the algebraic
    map is the default.
    """
    L = spec.scale

    if spec.transform == "algebraic-map":
        def g(t):
            om = 1.0 - t
            u = lower + L * t / om
            jac = L / (om * om)
            y = np.asarray(f(u), dtype=float)
            return np.where(y == 0.0, 0.0, y * jac)
    else:
        def g(t):
            om = 1.0 - t
            u = lower - L * np.log(om)
            jac = L / om
            y = np.asarray(f(u), dtype=float)
            return np.where(y == 0.0, 0.0, y * jac)

    # nodes that round onto t = 1 give u = inf; the resulting non-finite
    # value is reported as non-convergence rather than masked
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return integrate_interval(g, 0.0, 1.0, spec)


def integrate_2d(f: Callable[[float, np.ndarray], np.ndarray],
                 spec: QuadratureSpec = QuadratureSpec(),
                 inner_upper: Optional[Callable[[float], float]] = None,
                 inner_scale: Optional[float] = None) -> IntegralResult:
    """Iterated integral  int_0^inf dx int_0^{U(x)} dy f(x, y).

    ``U(x) = inner_upper(x)`` when given (finite inner interval), otherwise
    the inner range is [0, inf) too, mapped with ``inner_scale`` (default:
    the outer scale). Inner integrals run at a tenth of the outer tolerance;
    an inner failure raises ``NumericalError`` naming the outer coordinate.
    The reported error adds the inner tolerance budget to the outer estimate.

    Like any sampling-based rule, a feature much narrower than the initial
    panel can be missed entirely; rescale the variables so that features
    have width of order the map scale.
    """
    inner_spec = QuadratureSpec(rel_tol=max(spec.rel_tol * 0.1, 1e-15),
                                max_subdivisions=spec.max_subdivisions,
                                transform=spec.transform,
                                scale=spec.scale if inner_scale is None else inner_scale)
    evaluations = 0

    def inner(x: float) -> float:
        nonlocal evaluations
        fx = lambda y: f(x, y)  # noqa: E731
        if inner_upper is None:
            r = integrate_semi_infinite(fx, inner_spec)
        else:
            r = integrate_interval(fx, 0.0, float(inner_upper(x)), inner_spec)
        evaluations += r.evaluations
        if not r.converged:
            raise NumericalError(f"inner integral failed at outer x={x:.9g}: {r.message}", r)
        return r.value

    def outer(xs: np.ndarray) -> np.ndarray:
        return np.array([inner(float(x)) for x in xs])

    r = integrate_semi_infinite(outer, spec)
    return IntegralResult(r.value, r.abs_error_estimate + inner_spec.rel_tol * abs(r.value),
                          evaluations + r.evaluations, r.converged, r.message)


MC_CHUNK = 1 << 16


def integrate_mc(f: Callable[[np.ndarray], np.ndarray], d: int,
                 spec: MonteCarloSpec = MonteCarloSpec(),
                 support: str = "half") -> IntegralResult:
    """Importance-sampled integral over [0, inf)^d (``support="half"``) or R^d.

    Each coordinate magnitude is drawn from an exponential density of rate
    ``proposal_scale``; on R^d a random sign is attached, i.e. the proposal
    is a product of Laplace densities. Samples are generated in chunks of
    ``MC_CHUNK`` with chunk ``i`` seeded by ``(seed, i)``; chunk statistics are
    merged in chunk order. The error estimate is the sample standard error.
    """
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    if support not in ("half", "full"):
        raise ValidationError("support must be 'half' or 'full'")
    rate = spec.proposal_scale
    nchunks = -(-spec.samples // MC_CHUNK)

    def run_chunk(i: int):
        n = min(MC_CHUNK, spec.samples - i * MC_CHUNK)
        rng = np.random.default_rng([spec.seed, i])
        x = rng.exponential(1.0 / rate, size=(n, d))
        log_p = d * math.log(rate) - rate * x.sum(axis=1)
        if support == "full":
            x = np.where(rng.random((n, d)) < 0.5, -x, x)
            log_p -= d * math.log(2.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            h = np.asarray(f(x), dtype=float)
            w = np.where(h == 0.0, 0.0, h * np.exp(-log_p))
        bad = ~np.isfinite(w)
        if bad.any():
            j = int(np.argmax(bad))
            raise NumericalError(f"non-finite Monte Carlo sample at point {x[j].tolist()}")
        mean = float(w.mean())
        m2 = float(((w - mean) ** 2).sum())
        return n, mean, m2

    n_tot, mean, m2 = 0, 0.0, 0.0
    for n, cm, cm2 in map_ordered(run_chunk, range(nchunks)):
        # Chan et al. pairwise merge, always in chunk order
        delta = cm - mean
        tot = n_tot + n
        mean += delta * n / tot
        m2 += cm2 + delta * delta * n_tot * n / tot
        n_tot = tot
    var = m2 / (n_tot - 1)
    return IntegralResult(mean, math.sqrt(var / n_tot), n_tot, True)
