"""Dimensionless Fourier-space sampling profiles F(u), G(v) and their integrals.

A profile is a real, even, non-negative function normalized to 1 at the
origin. The time profile is F(u) with u = omega * tau, the space profile
G(v) with v = k * ell. Three kinds exist:

``proxy-stretched-exponential``
    exp(-u**p) for all u >= 0 with exponent p in (0, 1]. The large-argument
    behaviour of the real compactly supported sampling functions, adopted
    everywhere so that every integral has a Gamma-function closed form.
``user-tabulated``
    monotone piecewise-cubic (PCHIP) interpolation of (argument, value)
    knots, zero beyond the last knot.
``unit``
    the constant 1, i.e. no averaging at all. Only useful to demonstrate
    that the variance integral diverges without averaging.

A :class:`SamplingPair` either holds two evaluable profiles or just a
literature value of the combined constant I.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma, gammainc

from .errors import NumericalError, UnsupportedModeError, ValidationError
from .quadrature import (_NODES, _WK, IntegralResult, QuadratureSpec,
                         integrate_interval, integrate_semi_infinite)

PROXY = "proxy-stretched-exponential"
TABULATED = "user-tabulated"
UNIT = "unit"
LITERATURE = "literature-constant"
KINDS = (PROXY, TABULATED, UNIT)


@dataclass(frozen=True)
class SamplingProfile:
    kind: str
    exponent: Optional[float] = None
    table: Optional[tuple[tuple[float, float], ...]] = None
    _interp: Optional[PchipInterpolator] = field(default=None, init=False, repr=False, compare=False)
    _cum_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == PROXY:
            if self.exponent is None or not (0.0 < self.exponent <= 1.0):
                raise ValidationError(f"proxy exponent must be in (0, 1], got {self.exponent!r}")
        elif self.kind == TABULATED:
            if not self.table or len(self.table) < 2:
                raise ValidationError("tabulated profile needs at least two knots")
            x = np.array([p[0] for p in self.table], dtype=float)
            y = np.array([p[1] for p in self.table], dtype=float)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise ValidationError("tabulated profile contains non-finite entries")
            if x[0] != 0.0 or y[0] != 1.0:
                raise ValidationError("tabulated profile must start at (0, 1)")
            if np.any(np.diff(x) <= 0):
                raise ValidationError("tabulated profile arguments must be strictly increasing")
            if np.any(y < 0):
                raise ValidationError("tabulated profile values must be non-negative")
            object.__setattr__(self, "_interp", PchipInterpolator(x, y, extrapolate=False))
        elif self.kind != UNIT:
            raise ValidationError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")

    # constructors

    @classmethod
    def proxy(cls, exponent: float) -> "SamplingProfile":
        return cls(PROXY, exponent=float(exponent))

    @classmethod
    def tabulated(cls, args, values) -> "SamplingProfile":
        return cls(TABULATED, table=tuple((float(a), float(v)) for a, v in zip(args, values)))

    @classmethod
    def unit(cls) -> "SamplingProfile":
        return cls(UNIT)

    @classmethod
    def from_csv(cls, path) -> "SamplingProfile":
        return cls.tabulated(*load_table_csv(path))

    # evaluation

    @property
    def knots(self) -> np.ndarray:
        return np.array([p[0] for p in self.table]) if self.table else np.array([])

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValidationError("profile argument must be >= 0")
        if self.kind == PROXY:
            return np.exp(-(u ** self.exponent))
        if self.kind == UNIT:
            return np.ones_like(u)
        y = self._interp(u)
        return np.where(np.isnan(y), 0.0, y)

    def squared_moment(self, n: int, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
        """Quadrature value of  int_0^inf u**n * P(u)**2 du."""
        f = lambda u: u ** n * self(u) ** 2  # noqa: E731
        if self.kind == TABULATED:
            x = self.knots
            return integrate_interval(f, 0.0, float(x[-1]), spec, breakpoints=x[1:-1])
        if self.kind == PROXY:
            peak = (n / (2.0 * self.exponent)) ** (1.0 / self.exponent) if n > 0 else 1.0
            spec = QuadratureSpec(spec.rel_tol, spec.max_subdivisions, spec.transform,
                                  scale=max(1.0, peak))
        return integrate_semi_infinite(f, spec)

    def cumulative_squared_moment(self, m: int, upper) -> np.ndarray:
        """C_m(Y) = int_0^Y y**m * P(y)**2 dy, evaluated exactly.

        Proxy profiles use the regularized lower incomplete gamma function,
        tabulated ones integrate each polynomial piece with the 21-point
        Kronrod rule (exact up to degree 31, so up to m = 25).
        """
        Y = np.asarray(upper, dtype=float)
        if self.kind == UNIT:
            return Y ** (m + 1) / (m + 1)
        if self.kind == PROXY:
            p = self.exponent
            a = (m + 1) / p
            return gamma(a) / (p * 2.0 ** a) * gammainc(a, 2.0 * Y ** p)
        if m > 25:
            raise ValidationError("tabulated cumulative moments are exact only for m <= 25")
        x = self.knots
        at_knots = self._cum_cache.get(m)
        if at_knots is None:
            at_knots = np.concatenate([[0.0], np.cumsum(self._piece_integral(m, x[:-1], x[1:]))])
            self._cum_cache[m] = at_knots
        Yc = np.clip(Y, 0.0, x[-1])
        idx = np.clip(np.searchsorted(x, Yc, side="right") - 1, 0, len(x) - 2)
        flat_idx = idx.ravel()
        partial = self._piece_integral(m, x[flat_idx], Yc.ravel())
        return (at_knots[flat_idx] + partial).reshape(Y.shape)

    def _piece_integral(self, m, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        centre = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = centre[:, None] + half[:, None] * _NODES[None, :]
        vals = pts ** m * self(pts) ** 2
        return half * (vals @ _WK)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == PROXY:
            d["exponent"] = self.exponent
        elif self.kind == TABULATED:
            d["table"] = [list(p) for p in self.table]
        return d


def load_table_csv(path) -> tuple[list[float], list[float]]:
    """Two-column (argument, value) CSV, UTF-8, optional header row."""
    args, vals = [], []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            row = [c.strip() for c in row if c.strip()]
            if not row or row[0].startswith("#"):
                continue
            if len(row) < 2:
                raise ValidationError(f"{path}:{i + 1}: expected two columns")
            try:
                a, v = float(row[0]), float(row[1])
            except ValueError:
                if not args and i == 0:
                    continue  # header
                raise ValidationError(f"{path}:{i + 1}: non-numeric entry {row[:2]}") from None
            args.append(a)
            vals.append(v)
    if not args:
        raise ValidationError(f"{path}: no data rows")
    return args, vals


@dataclass(frozen=True)
class SamplingPair:
    time_profile: Optional[SamplingProfile] = None
    space_profile: Optional[SamplingProfile] = None
    literature_I: Optional[float] = None

    def __post_init__(self):
        if self.literature_I is not None:
            if not (math.isfinite(self.literature_I) and self.literature_I > 0):
                raise ValidationError(f"literature_I must be positive, got {self.literature_I!r}")
        elif self.time_profile is None or self.space_profile is None:
            raise ValidationError("sampling pair needs both profiles or a literature I")

    @classmethod
    def proxy(cls, alpha: float, lam: float) -> "SamplingPair":
        return cls(SamplingProfile.proxy(alpha), SamplingProfile.proxy(lam))

    @classmethod
    def literature(cls, I: float) -> "SamplingPair":
        return cls(literature_I=float(I))

    @property
    def mode(self) -> str:
        return LITERATURE if self.literature_I is not None else "profile"

    def require_profiles(self) -> tuple[SamplingProfile, SamplingProfile]:
        if self.time_profile is None or self.space_profile is None:
            raise UnsupportedModeError(
                "operation needs full sampling profiles; this pair only carries a literature I")
        return self.time_profile, self.space_profile

    def to_dict(self) -> dict:
        d: dict = {"mode": self.mode}
        if self.literature_I is not None:
            d["I"] = self.literature_I
        if self.time_profile is not None:
            d["time_profile"] = self.time_profile.to_dict()
        if self.space_profile is not None:
            d["space_profile"] = self.space_profile.to_dict()
        return d


def eval_time_profile(pair: SamplingPair, u):
    return pair.require_profiles()[0](u)


def eval_space_profile(pair: SamplingPair, v):
    return pair.require_profiles()[1](v)


def _checked(result: IntegralResult, what: str) -> float:
    if not result.converged:
        raise NumericalError(
            f"{what} did not converge: best estimate {result.value:.10g} "
            f"+/- {result.abs_error_estimate:.3g} ({result.message})", result)
    return result.value


def _tol_spec(tol: float) -> QuadratureSpec:
    if not 0.0 < tol < 1.0:
        raise ValidationError(f"tol must be in (0, 1), got {tol}")
    return QuadratureSpec(rel_tol=tol)


def dimensionless_If(pair: SamplingPair, tol: float = 1e-10) -> float:
    """I_f = int_0^inf u^4 F(u)^2 du."""
    F, _ = pair.require_profiles()
    return _checked(F.squared_moment(4, _tol_spec(tol)), "I_f")


def dimensionless_Ig(pair: SamplingPair, tol: float = 1e-10) -> float:
    """I_g = int_0^inf v^2 G(v)^2 dv."""
    _, G = pair.require_profiles()
    return _checked(G.squared_moment(2, _tol_spec(tol)), "I_g")


def combined_I(pair: SamplingPair, tol: float = 1e-10) -> float:
    if pair.literature_I is not None:
        return pair.literature_I
    return math.sqrt(dimensionless_If(pair, tol) * dimensionless_Ig(pair, tol))


def gamma_moment(n: int, exponent: float) -> float:
    """Closed form  int_0^inf u^n exp(-2 u^p) du = Gamma((n+1)/p) / (p 2^((n+1)/p))."""
    a = (n + 1) / exponent
    return math.gamma(a) / (exponent * 2.0 ** a)
