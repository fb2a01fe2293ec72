import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zpfluid.errors import NumericalError, RegimeError, UnsupportedModeError, ValidationError
from zpfluid.moments import (MomentReport, RegimeWarning, loglog_slope, moment_report,
                             mu2_asymptotic, mu2_direct_mc, mu2_exact, mu3_integral,
                             mu3_scaling_probe, reduced_variance_integral,
                             rms_fractional_density)
from zpfluid.physmodel import FluidMedium, PhysicalConstants, ProbePulse, pulse_duration
from zpfluid.quadrature import MonteCarloSpec, QuadratureSpec
from zpfluid.sampling import SamplingPair, SamplingProfile, gamma_moment

HBAR = 1.054571817e-34
C = 299792458.0


def test_he3_variance_value(he3, he3_tau):
    medium, pulse = he3
    mu2 = mu2_asymptotic(medium, pulse.ell, he3_tau, 113.0)
    # written out from the formula independently of the module
    ref = (HBAR * 113) ** 2 / (256 * math.pi ** 4 * 83 ** 2 * 4e-4 ** 3 * he3_tau ** 5 * 200 ** 7)
    assert mu2 == pytest.approx(ref, rel=1e-13)
    assert mu2 == pytest.approx(2.099e-19, rel=1e-3)
    assert rms_fractional_density(medium, pulse, 113.0) == pytest.approx(4.581e-10, rel=1e-3)


@settings(max_examples=50, deadline=None)
@given(cs=st.floats(20, 3000), rho0=st.floats(1, 5000), eta=st.floats(1.0, 2.0),
       ell=st.floats(1e-5, 1e-2), I=st.floats(1, 1000))
def test_rms_is_sqrt_mu2(cs, rho0, eta, ell, I):
    medium = FluidMedium(cs=cs, rho0=rho0, eta=eta)
    pulse = ProbePulse(1e-6, 1e-7, ell)
    tau = pulse_duration(pulse, medium)
    assert rms_fractional_density(medium, pulse, I) == pytest.approx(
        math.sqrt(mu2_asymptotic(medium, ell, tau, I)), rel=1e-12)


def test_scaling_laws(he3, he3_tau):
    medium, pulse = he3
    base = mu2_asymptotic(medium, pulse.ell, he3_tau, 113)
    # tau halved: tau^-5 -> x32, ell fixed
    assert mu2_asymptotic(medium, pulse.ell, he3_tau / 2, 113) / base == pytest.approx(32, rel=1e-12)
    # I doubled -> x4
    assert mu2_asymptotic(medium, pulse.ell, he3_tau, 226) / base == pytest.approx(4, rel=1e-12)
    # ell and tau halved together (tau = eta ell / c): x256
    assert mu2_asymptotic(medium, pulse.ell / 2, he3_tau / 2, 113) / base == pytest.approx(
        256, rel=1e-12)
    # rms ~ ell^-4
    r1 = rms_fractional_density(medium, pulse, 113)
    r2 = rms_fractional_density(medium, pulse.replace(ell=2 * pulse.ell), 113)
    assert r2 / r1 == pytest.approx(2 ** -4, rel=1e-12)


def test_regime_guards(he3):
    medium, _ = he3
    with pytest.raises(RegimeError):
        mu2_asymptotic(medium, 1e-9, 1e-11, 1.0)  # r = 0.5
    with pytest.warns(RegimeWarning):
        mu2_asymptotic(medium, 50 * 200 * 1e-12, 1e-12, 1.0)
    with pytest.raises(ValidationError):
        mu2_asymptotic(medium, 1e-3, 1e-12, 0.0)


def test_unit_rescaling_invariance(he3, he3_tau, quiet_regime):
    # mu2 is dimensionless: expressing every input in other units leaves it unchanged
    medium, pulse = he3
    L, T, M = 1e6, 1e6, 1e-3  # um, us, g
    k = PhysicalConstants(hbar=HBAR * M * L ** 2 / T, c=C * L / T, kB=1.380649e-23 * M * L ** 2 / T ** 2)
    m2 = FluidMedium(cs=medium.cs * L / T, rho0=medium.rho0 * M / L ** 3, eta=medium.eta,
                     light_speed=k.c)
    a = mu2_asymptotic(medium, pulse.ell, he3_tau, 113)
    b = mu2_asymptotic(m2, pulse.ell * L, he3_tau * T, 113, k)
    assert b == pytest.approx(a, rel=1e-12)
    pair = SamplingPair.proxy(1.0, 1.0)
    e1 = mu2_exact(medium, 300 * medium.cs * he3_tau, he3_tau, pair)
    e2 = mu2_exact(m2, 300 * m2.cs * he3_tau * T, he3_tau * T, pair, constants=k)
    assert e2.value == pytest.approx(e1.value, rel=1e-10)


@pytest.mark.parametrize("alpha,lam", [(0.5, 0.5), (1.0, 1.0), (0.7, 0.4)])
def test_exact_tends_to_asymptotic(he3, he3_tau, alpha, lam):
    medium, _ = he3
    pair = SamplingPair.proxy(alpha, lam)
    I = math.sqrt(gamma_moment(4, alpha) * gamma_moment(2, lam))
    devs = []
    for r in (1e2, 1e3, 1e4):
        ell = r * medium.cs * he3_tau
        ex = mu2_exact(medium, ell, he3_tau, pair, QuadratureSpec(rel_tol=1e-12))
        assert ex.converged
        devs.append(abs(ex.value / mu2_asymptotic(medium, ell, he3_tau, I) - 1))
    assert devs[0] < 0.1
    assert devs[0] > devs[1] > devs[2]


def test_reduced_integral_leading_correction():
    # K(r) 16 r / (I_f I_g) - 1 falls off as 1/r^2
    pair = SamplingPair.proxy(1.0, 1.0)
    A = gamma_moment(4, 1.0) * gamma_moment(2, 1.0)
    d = [16 * r * reduced_variance_integral(pair, r).value / A - 1 for r in (1e2, 1e3)]
    assert d[0] / d[1] == pytest.approx(100, rel=1e-3)


@pytest.mark.parametrize("r", [1.0, 30.0, 1e4])
def test_two_routes_agree(r):
    pair = SamplingPair.proxy(0.6, 0.8)
    a = reduced_variance_integral(pair, r, QuadratureSpec(rel_tol=1e-9))
    b = reduced_variance_integral(pair, r, QuadratureSpec(rel_tol=1e-9), method="2d")
    assert a.converged and b.converged
    assert b.value == pytest.approx(a.value, rel=1e-7)


def test_tabulated_profiles_match_proxy():
    u = np.linspace(0, 40, 4001)
    tab = SamplingProfile.tabulated(u, np.exp(-u))
    a = reduced_variance_integral(SamplingPair(tab, tab), 50.0).value
    b = reduced_variance_integral(SamplingPair.proxy(1.0, 1.0), 50.0).value
    assert a == pytest.approx(b, rel=1e-6)


def test_direct_mc_matches_reduction(he3, he3_tau):
    medium, _ = he3
    pair = SamplingPair.proxy(1.0, 1.0)
    ell = 5 * medium.cs * he3_tau
    quad = mu2_exact(medium, ell, he3_tau, pair)
    mc = mu2_direct_mc(medium, ell, he3_tau, pair, MonteCarloSpec(300_000, seed=3))
    assert abs(mc.value - quad.value) < 4 * mc.abs_error_estimate


def test_constant_time_profile_diverges(he3, he3_tau):
    medium, pulse = he3
    pair = SamplingPair(SamplingProfile.unit(), SamplingProfile.proxy(0.5))
    spec = QuadratureSpec(rel_tol=1e-8, max_subdivisions=200)
    for method in ("moments", "2d"):
        res = mu2_exact(medium, pulse.ell, he3_tau, pair, spec, method=method)
        assert not res.converged
    with pytest.raises(NumericalError):
        moment_report(medium, pulse, pair, spec=spec)


def test_constant_space_profile_is_finite():
    # with no spatial averaging the time profile alone still regularizes mu2
    pair = SamplingPair(SamplingProfile.proxy(1.0), SamplingProfile.unit())
    a = reduced_variance_integral(pair, 20.0)
    b = reduced_variance_integral(pair, 20.0, method="2d")
    assert a.converged and b.converged
    assert b.value == pytest.approx(a.value, rel=1e-6)


def test_literature_pair_rejected_for_exact(he3, he3_tau):
    medium, pulse = he3
    with pytest.raises(UnsupportedModeError):
        mu2_exact(medium, pulse.ell, he3_tau, SamplingPair.literature(113))
    with pytest.raises(ValidationError):
        reduced_variance_integral(SamplingPair.proxy(1, 1), 10.0, method="cubature")


def test_mu3_positive_and_deterministic(he3, he3_tau):
    medium, _ = he3
    pair = SamplingPair.proxy(1.0, 1.0)
    ell = 100 * medium.cs * he3_tau
    spec = MonteCarloSpec(100_000, seed=8)
    a = mu3_integral(medium, ell, he3_tau, pair, spec)
    assert a.value > 0 and a.rel_error < 0.05
    assert mu3_integral(medium, ell, he3_tau, pair, spec) == a


def test_mu3_probe_slope(he3, he3_tau, quiet_regime):
    medium, _ = he3
    pair = SamplingPair.proxy(1.0, 1.0)
    ells = [r * medium.cs * he3_tau for r in (1e2, 1e3, 1e4)]
    pts = mu3_scaling_probe(medium, ells, he3_tau, pair, MonteCarloSpec(200_000, seed=1))
    assert [p.ell for p in pts] == ells
    slope = loglog_slope([p.scale for p in pts], [p.skew_ratio for p in pts])
    assert slope == pytest.approx(0.5, abs=0.05)
    with pytest.raises(ValidationError):
        mu3_scaling_probe(medium, [], he3_tau, pair)


def test_loglog_slope():
    assert loglog_slope([1, 2, 4], [5, 20, 80]) == pytest.approx(2.0)


def test_moment_report_fields_and_flags(he3, quiet_regime):
    medium, pulse = he3
    rep = moment_report(medium, pulse, SamplingPair.literature(113))
    d = rep.to_dict()
    assert list(d) == ["mu2_asymptotic", "mu2_exact", "mu2_exact_err", "rms",
                       "skew_ratio_scale", "I_used", "regime_ratio", "flags"]
    assert d["mu2_exact"] is None and d["flags"] == []
    assert MomentReport.from_dict(json.loads(rep.to_json())) == rep
    tau = pulse_duration(pulse, medium)
    assert rep.skew_ratio_scale == pytest.approx(math.sqrt(medium.cs * tau / pulse.ell))

    rep = moment_report(medium, pulse, SamplingPair.proxy(0.5, 0.5))
    assert rep.I_used == pytest.approx(51.554, rel=1e-4)
    assert rep.mu2_exact == pytest.approx(rep.mu2_asymptotic, rel=1e-9)

    small = pulse.replace(ell=2e-6)  # narrowband fails; cs tau ~ 1.4e-12 m is sub-atomic
    flags = moment_report(medium, small, SamplingPair.literature(113)).flags
    assert "narrowband_violated" in flags and "continuum_violated" in flags


def test_regime_flag_below_100(quiet_regime):
    fast = FluidMedium(cs=4e6, rho0=83, eta=1.026)
    pulse = ProbePulse(1e-6, 1e-6, 4e-4)
    rep = moment_report(fast, pulse, SamplingPair.literature(113), exact=False)
    assert rep.regime_ratio < 100
    assert "regime_ratio_below_100" in rep.flags


def test_warning_silenced_in_report(he3):
    medium, pulse = he3
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        moment_report(medium, pulse, SamplingPair.literature(113))
