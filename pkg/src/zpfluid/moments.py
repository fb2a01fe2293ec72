"""Moments of the space-time averaged squared density fluctuation.

delta_rho^2 is the normal-ordered square of the density perturbation,
averaged with a time profile of width tau and a space profile of size ell,
divided by rho0^2. Its mean vanishes; this module computes its variance
mu2 (asymptotically in closed form, exactly by quadrature, and by direct
Monte Carlo over the six-dimensional mode integral) and its third moment
mu3 by Monte Carlo.

Dimensionless variables used throughout::

    x = q * cs * tau      (phonon wave number in units of 1/(cs tau))
    P = p * ell           (total momentum at a vertex in units of 1/ell)
    r = ell / (cs * tau)  (regime ratio)

Exact variance
--------------
Integrating the relative angle of q1 and q2 gives, with
Ghat(k) = int_0^k s ghat(s)^2 ds,

    mu2 = hbar^2 / (16 pi^4 cs^2 rho0^2)
          * int int dq1 dq2 q1^2 q2^2 fhat(cs (q1 + q2))^2 [Ghat(q1 + q2) - Ghat(|q1 - q2|)].

In sum/difference coordinates s = x1 + x2, d = x1 - x2 the d-integral can
be done in closed form in terms of C_m(Y) = int_0^Y y^m G(y)^2 dy:

    mu2 = hbar^2 / (16 pi^4 cs^2 rho0^2) (cs tau)^-6 ell^-2 K(r),
    K(r) = int_0^inf ds F(s)^2 / (16 r)
           * [s^4 C_2(r s) - 2 s^2 C_4(r s) / (3 r^2) + C_6(r s) / (5 r^4)].

As r -> inf, K -> I_f I_g / (16 r) which is the asymptotic formula.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError, RegimeError, ValidationError
from .parallel import map_ordered
from .physmodel import (CODATA, FluidMedium, PhysicalConstants, ProbePulse,
                        pulse_duration, regime_ratio)
from .quadrature import (IntegralResult, MonteCarloSpec, QuadratureSpec,
                         integrate_2d, integrate_mc, integrate_semi_infinite)
from .sampling import SamplingPair, SamplingProfile, combined_I

REGIME_WARN = 100.0
MU3_COMBINATORIAL = 8.0


class RegimeWarning(UserWarning):
    pass


@dataclass
class MomentReport:
    mu2_asymptotic: float
    rms: float
    skew_ratio_scale: float
    I_used: float
    regime_ratio: float
    mu2_exact: Optional[float] = None
    mu2_exact_err: Optional[float] = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        keys = ("mu2_asymptotic", "mu2_exact", "mu2_exact_err", "rms",
                "skew_ratio_scale", "I_used", "regime_ratio", "flags")
        d = asdict(self)
        return {k: d[k] for k in keys}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "MomentReport":
        return cls(**{k: d[k] for k in ("mu2_asymptotic", "rms", "skew_ratio_scale", "I_used",
                                         "regime_ratio", "mu2_exact", "mu2_exact_err", "flags")})


def _check_regime(medium: FluidMedium, ell: float, tau: float) -> float:
    if not (ell > 0 and tau > 0):
        raise ValidationError("ell and tau must be positive")
    r = regime_ratio(medium, ell, tau)
    if r <= 1.0:
        raise RegimeError(f"ell/(cs tau) = {r:.4g} <= 1: the asymptotic variance is meaningless")
    if r < REGIME_WARN:
        warnings.warn(f"ell/(cs tau) = {r:.4g} < {REGIME_WARN:g}; asymptotic variance is approximate",
                      RegimeWarning, stacklevel=3)
    return r


def mu2_asymptotic(medium: FluidMedium, ell: float, tau: float, I: float,
                   constants: PhysicalConstants = CODATA) -> float:
    """Variance for ell >> cs tau:  (hbar I)^2 / (2^8 pi^4 rho0^2 ell^3 tau^5 cs^7)."""
    if not I > 0:
        raise ValidationError(f"I must be positive, got {I!r}")
    _check_regime(medium, ell, tau)
    return ((constants.hbar * I) ** 2
            / (2 ** 8 * math.pi ** 4 * medium.rho0 ** 2 * ell ** 3 * tau ** 5 * medium.cs ** 7))


def rms_fractional_density(medium: FluidMedium, pulse: ProbePulse, I: float,
                           constants: PhysicalConstants = CODATA) -> float:
    """sqrt(mu2) with tau = eta ell / c, written out so the ell^-4 law is explicit."""
    if not I > 0:
        raise ValidationError(f"I must be positive, got {I!r}")
    _check_regime(medium, pulse.ell, pulse_duration(pulse, medium, constants))
    c, cs, eta = constants.c, medium.cs, medium.eta
    return (constants.hbar * I / (2 ** 4 * math.pi ** 2 * medium.rho0 * pulse.ell ** 4)
            * math.sqrt(c ** 5 / (eta ** 5 * cs ** 7)))


def _tail(profile: SamplingProfile, m: int, y):
    """int_y^inf t^m P(t)^2 dt without cancellation for the proxy kind."""
    from scipy.special import gamma, gammaincc
    if profile.kind == "proxy-stretched-exponential":
        p = profile.exponent
        a = (m + 1) / p
        return gamma(a) / (p * 2.0 ** a) * gammaincc(a, 2.0 * np.asarray(y, dtype=float) ** p)
    if profile.kind == "unit":
        return np.full_like(np.asarray(y, dtype=float), np.inf)
    total = profile.cumulative_squared_moment(m, profile.knots[-1])
    return total - profile.cumulative_squared_moment(m, y)


def _prefactor_reduced(medium, ell, tau, constants):
    cst = medium.cs * tau
    return (constants.hbar ** 2 / (16 * math.pi ** 4 * medium.cs ** 2 * medium.rho0 ** 2)
            / (cst ** 6 * ell ** 2))


def _outer_scale(F: SamplingProfile) -> float:
    if F.kind == "proxy-stretched-exponential":
        return max(1.0, (2.0 / F.exponent) ** (1.0 / F.exponent))
    if F.kind == "user-tabulated":
        return max(1e-300, 0.5 * float(F.knots[-1]))
    return 1.0


def _inner_scale(G: SamplingProfile) -> float:
    if G.kind == "proxy-stretched-exponential":
        return max(1.0, (1.0 / G.exponent) ** (1.0 / G.exponent))
    if G.kind == "user-tabulated":
        return max(1e-300, 0.5 * float(G.knots[-1]))
    return 1.0


def reduced_variance_integral(pair: SamplingPair, r: float,
                              spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-10),
                              method: str = "moments") -> IntegralResult:
    """Dimensionless K(r) (see module docstring).

    ``method="moments"`` integrates the closed-form inner integral over s;
    ``method="2d"`` integrates the angular-reduced form over (s, r d) with
    the iterated 2D engine, which is slower and meant as a cross-check.
    """
    F, G = pair.require_profiles()
    if not r > 0:
        raise ValidationError("regime ratio must be positive")
    qspec = QuadratureSpec(spec.rel_tol, spec.max_subdivisions, spec.transform, _outer_scale(F))

    if method == "moments":
        def integrand(s):
            Y = r * s
            inner = (s ** 4 * G.cumulative_squared_moment(2, Y)
                     - 2.0 * s ** 2 * G.cumulative_squared_moment(4, Y) / (3.0 * r ** 2)
                     + G.cumulative_squared_moment(6, Y) / (5.0 * r ** 4))
            return F(s) ** 2 * inner / (16.0 * r)

        with np.errstate(over="ignore", invalid="ignore"):
            return integrate_semi_infinite(integrand, qspec)

    if method == "2d":
        # inner variable y = r d keeps the ridge at d ~ 1/r at unit width
        def integrand2(s, y):
            if G.kind == "unit":
                bracket = (r * r * s * s - y * y) / 2.0
            else:
                bracket = _tail(G, 1, y) - _tail(G, 1, r * s)
            w = F(s) ** 2 * (s * s - (y / r) ** 2) ** 2 / (16.0 * r) * bracket
            return np.where(y < r * s, w, 0.0)

        try:
            with np.errstate(over="ignore", invalid="ignore"):
                return integrate_2d(integrand2, qspec, inner_scale=_inner_scale(G))
        except NumericalError as exc:
            r_in = exc.result
            return IntegralResult(math.nan, math.inf,
                                  r_in.evaluations if r_in is not None else 0,
                                  False, str(exc))

    raise ValidationError(f"unknown method {method!r}; expected 'moments' or '2d'")


def mu2_exact(medium: FluidMedium, ell: float, tau: float, pair: SamplingPair,
              spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-10),
              constants: PhysicalConstants = CODATA, method: str = "moments") -> IntegralResult:
    """Variance from the full mode integral, no ell >> cs tau approximation.

    Returns the quadrature result scaled to mu2. A divergent configuration
    (e.g. a constant time profile) comes back with ``converged=False``.
    """
    r = regime_ratio(medium, ell, tau)
    K = reduced_variance_integral(pair, r, spec, method)
    return K.scaled(_prefactor_reduced(medium, ell, tau, constants))


def _norm(v):
    return np.sqrt(np.einsum("ij,ij->i", v, v))


def mu2_direct_mc(medium: FluidMedium, ell: float, tau: float, pair: SamplingPair,
                  spec: MonteCarloSpec = MonteCarloSpec(),
                  constants: PhysicalConstants = CODATA) -> IntegralResult:
    """Monte Carlo of the six-dimensional variance integral with no angular reduction.

    Integration variables are x = q1 cs tau and P = (q1 + q2) ell, both over R^3:

        mu2 = hbar^2 / (128 pi^6 cs^4 rho0^2) (cs tau)^-3 ell^-3 tau^-2
              * int d3x d3P |x| |P/r - x| F(|x| + |P/r - x|)^2 G(|P|)^2
    """
    F, G = pair.require_profiles()
    r = regime_ratio(medium, ell, tau)

    def integrand(z):
        x, P = z[:, 0:3], z[:, 3:6]
        a = _norm(x)
        b = _norm(P / r - x)
        return a * b * F(a + b) ** 2 * G(_norm(P)) ** 2

    res = integrate_mc(integrand, 6, spec, support="full")
    cs = medium.cs
    pref = (constants.hbar ** 2 / (128 * math.pi ** 6 * cs ** 4 * medium.rho0 ** 2)
            / ((cs * tau) ** 3 * ell ** 3 * tau ** 2))
    return res.scaled(pref)


def mu3_integral(medium: FluidMedium, ell: float, tau: float, pair: SamplingPair,
                 spec: MonteCarloSpec = MonteCarloSpec(),
                 constants: PhysicalConstants = CODATA) -> IntegralResult:
    """Third moment by nine-dimensional Monte Carlo.

    Contracting the three vertices pairwise with phonon momenta k1 (x-y),
    k2 (x-z), k3 (y-z) gives

        mu3 = 8 [hbar / (2 (2 pi)^3 rho0 cs^2)]^3 int d3k1 d3k2 d3k3 w1 w2 w3
              fhat(w1 + w2) fhat(w3 - w1) fhat(w2 + w3)
              ghat(k1 + k2) ghat(k3 - k1) ghat(k2 + k3).

    The middle vertex carries a frequency *difference*; that is what makes
    mu3^(1/3) / mu2^(1/2) scale as (cs tau / ell)^(1/2). Sampled in
    x = k1 cs tau, P = (k1 + k2) ell, S = (k2 + k3) ell.
    """
    F, G = pair.require_profiles()
    r = regime_ratio(medium, ell, tau)

    def integrand(z):
        x, P, S = z[:, 0:3], z[:, 3:6], z[:, 6:9]
        x2 = P / r - x
        x3 = (S - P) / r + x
        a, b, c = _norm(x), _norm(x2), _norm(x3)
        return (a * b * c * F(a + b) * F(np.abs(c - a)) * F(b + c)
                * G(_norm(P)) * G(_norm(S)) * G(_norm(S - P)))

    res = integrate_mc(integrand, 9, spec, support="full")
    cs = medium.cs
    pref = (MU3_COMBINATORIAL * (constants.hbar / (16 * math.pi ** 3 * medium.rho0 * cs ** 2)) ** 3
            / ((cs * tau) ** 3 * ell ** 6 * tau ** 3))
    return res.scaled(pref)


@dataclass(frozen=True)
class Mu3Point:
    ell: float
    mu3: float
    mu3_err: float
    mu2: float
    skew_ratio: float  # mu3^(1/3) / mu2^(1/2)
    scale: float  # cs tau / ell


def mu3_scaling_probe(medium: FluidMedium, ell_list: Sequence[float], tau: float,
                      pair: SamplingPair, spec: MonteCarloSpec = MonteCarloSpec(),
                      constants: PhysicalConstants = CODATA,
                      quad: QuadratureSpec = QuadratureSpec(rel_tol=1e-10)) -> list[Mu3Point]:
    """mu3 and the skewness ratio over a sweep of ell at fixed tau.

    Point i uses Monte Carlo seed ``spec.seed + i``.
    """
    if not ell_list:
        raise ValidationError("ell_list must not be empty")

    def one(item):
        i, ell = item
        _check_regime(medium, ell, tau)
        sub = MonteCarloSpec(spec.samples, spec.seed + i, spec.proposal_scale)
        m3 = mu3_integral(medium, ell, tau, pair, sub, constants)
        m2 = mu2_exact(medium, ell, tau, pair, quad, constants)
        if not m2.converged:
            raise NumericalError(f"mu2 quadrature failed at ell={ell:.6g}: {m2.message}", m2)
        ratio = math.copysign(abs(m3.value) ** (1 / 3), m3.value) / math.sqrt(m2.value)
        return Mu3Point(ell, m3.value, m3.abs_error_estimate, m2.value, ratio,
                        medium.cs * tau / ell)

    return map_ordered(one, list(enumerate(ell_list)))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])


def moment_report(medium: FluidMedium, pulse: ProbePulse, pair: SamplingPair,
                  constants: PhysicalConstants = CODATA,
                  spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-10),
                  exact: bool = True) -> MomentReport:
    tau = pulse_duration(pulse, medium, constants)
    I = combined_I(pair, tol=min(spec.rel_tol, 1e-10))
    r = regime_ratio(medium, pulse.ell, tau)
    flags = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        mu2 = mu2_asymptotic(medium, pulse.ell, tau, I, constants)
    if r < REGIME_WARN:
        flags.append("regime_ratio_below_100")
    if not pulse.narrowband_ok():
        flags.append("narrowband_violated")
    if medium.cs * tau < medium.atomic_scale:
        flags.append("continuum_violated")
    report = MomentReport(mu2_asymptotic=mu2, rms=math.sqrt(mu2),
                          skew_ratio_scale=math.sqrt(1.0 / r), I_used=I, regime_ratio=r,
                          flags=flags)
    if exact and pair.mode == "profile":
        res = mu2_exact(medium, pulse.ell, tau, pair, spec, constants)
        if not res.converged:
            raise NumericalError(f"exact mu2 did not converge: {res.message}", res)
        report.mu2_exact = res.value
        report.mu2_exact_err = res.abs_error_estimate
    return report

