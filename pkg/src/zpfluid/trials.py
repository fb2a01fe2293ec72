"""Monte Carlo simulator of repeated scattering measurements.

Per trial:

1. draw the averaged fluctuation X (mean 0, variance mu2) from a surrogate
   distribution;
2. set the Poisson rate  max(0, n_s + n_T + n_gamma X / 4);
3. draw the photon count.

Only the first two (optionally three) moments of X are known, so the
surrogate is a modelling choice and is named in every output:

``gaussian-clamped``  X ~ Normal(0, mu2)
``shifted-gamma``     X = Gamma(k, theta) - k theta with k = 4 mu2^3 / mu3^2,
                      theta = mu3 / (2 mu2), matching the third moment too.

Trials run in blocks of ``BLOCK`` with block ``b`` drawing from the
generator seeded by ``(seed, b)``, so the result does not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .moments import MomentReport
from .parallel import map_ordered
from .physmodel import CODATA, FluidMedium, PhysicalConstants, ProbePulse, photon_number
from .scattering import mean_scattered, thermal_ratio_mean

SURROGATES = ("gaussian-clamped", "shifted-gamma")
BLOCK = 1 << 16


@dataclass(frozen=True)
class TrialSpec:
    trials: int = 1_000_000
    seed: int = 0
    include_thermal: bool = True
    surrogate: str = "gaussian-clamped"
    bins: int = 64

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.surrogate not in SURROGATES:
            raise ValidationError(f"surrogate must be one of {SURROGATES}, got {self.surrogate!r}")
        if self.bins < 1:
            raise ValidationError("bins must be >= 1")


@dataclass
class TrialSummary:
    trials: int
    seed: int
    surrogate: str
    include_thermal: bool
    n_s: float
    n_T_term: float
    delta_n_s: float
    sample_mean: float
    sample_variance: float
    excess_variance: float
    mean_stderr: float
    variance_stderr: float
    skewness: float
    negative_rate_clamps: int
    histogram: list = field(default_factory=list)  # (bin_lower, bin_upper, count)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, provenance: Optional[dict] = None) -> str:
        d = self.to_dict()
        d["histogram"] = [list(h) for h in self.histogram]
        if provenance is not None:
            d = {"provenance": provenance, **d}
        return json.dumps(d, indent=2)

    def histogram_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("bin_lower", "bin_upper", "count"))
        for lo, hi, n in self.histogram:
            w.writerow((lo, hi, n))
        return buf.getvalue()


def _surrogate_params(spec: TrialSpec, mu2: float, mu3: Optional[float]):
    if spec.surrogate == "shifted-gamma":
        if mu3 is None or not mu3 > 0:
            raise ValidationError("shifted-gamma surrogate needs a positive third moment mu3")
        if not mu2 > 0:
            raise ValidationError("shifted-gamma surrogate needs mu2 > 0")
        return 4.0 * mu2 ** 3 / mu3 ** 2, mu3 / (2.0 * mu2)
    return None


def simulate_trials(medium: FluidMedium, pulse: ProbePulse, I: float,
                    moments: MomentReport, spec: TrialSpec = TrialSpec(),
                    constants: PhysicalConstants = CODATA,
                    mu3: Optional[float] = None) -> TrialSummary:
    """Simulate ``spec.trials`` scattering measurements.

    ``moments.mu2_asymptotic`` is the variance used. For shifted-gamma the
    third moment defaults to (skew_ratio_scale * sqrt(mu2))^3, i.e. the
    skewness scaling with a unit proportionality constant; pass ``mu3`` to
    override. ``I`` only enters through ``moments`` and is recorded for the
    caller's convenience.
    """
    mu2 = float(moments.mu2_asymptotic)
    if mu2 < 0:
        raise ValidationError("mu2 must be >= 0")
    if spec.surrogate == "shifted-gamma" and mu3 is None:
        mu3 = (moments.skew_ratio_scale * math.sqrt(mu2)) ** 3
    gamma_params = _surrogate_params(spec, mu2, mu3)

    n_gamma = photon_number(pulse, constants)
    n_s = mean_scattered(medium, pulse, constants)
    n_T = n_s / thermal_ratio_mean(medium, pulse, constants) if spec.include_thermal else 0.0
    base = n_s + n_T
    gain = n_gamma / 4.0
    sd = math.sqrt(mu2)
    nblocks = -(-spec.trials // BLOCK)

    def block(b: int):
        n = min(BLOCK, spec.trials - b * BLOCK)
        rng = np.random.default_rng([spec.seed, b])
        if sd == 0.0:
            x = np.zeros(n)
        elif gamma_params is None:
            x = rng.normal(0.0, sd, n)
        else:
            k, theta = gamma_params
            x = rng.gamma(k, theta, n) - k * theta
        rate = base + gain * x
        clamps = int(np.count_nonzero(rate < 0))
        return rng.poisson(np.maximum(rate, 0.0)), clamps

    parts = map_ordered(block, range(nblocks))
    counts = np.concatenate([p[0] for p in parts]).astype(float)
    clamps = sum(p[1] for p in parts)

    N = counts.size
    mean = float(counts.mean())
    dev = counts - mean
    m2 = float(np.mean(dev ** 2))
    var = m2 * N / (N - 1) if N > 1 else 0.0
    m3 = float(np.mean(dev ** 3))
    m4 = float(np.mean(dev ** 4))
    mean_se = math.sqrt(var / N) if N > 1 else 0.0
    var_se = math.sqrt(max(m4 - m2 * m2, 0.0) / N) if N > 1 else 0.0
    skew = m3 / m2 ** 1.5 if m2 > 0 else 0.0

    lo, hi = int(counts.min()), int(counts.max()) + 1
    width = max(1, -(-(hi - lo) // spec.bins))
    edges = np.arange(lo, hi + width, width)
    hist, _ = np.histogram(counts, bins=edges)
    histogram = [(int(edges[i]), int(edges[i + 1]), int(hist[i])) for i in range(len(hist))]

    return TrialSummary(
        trials=N, seed=spec.seed, surrogate=spec.surrogate,
        include_thermal=spec.include_thermal, n_s=n_s, n_T_term=n_T,
        delta_n_s=gain * sd, sample_mean=mean, sample_variance=var,
        excess_variance=var - mean, mean_stderr=mean_se,
        # excess = var - mean, both estimated from the same counts
        variance_stderr=math.sqrt(var_se ** 2 + mean_se ** 2),
        skewness=skew, negative_rate_clamps=clamps, histogram=histogram,
    )
