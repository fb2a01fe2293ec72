"""JSON run configuration.

All physical quantities are SI base units::

    {
      "constants": {"hbar": J s, "c": m/s, "kB": J/K},          optional overrides
      "fluid":     {"cs": m/s, "rho0": kg/m^3, "eta": 1, "temperature": K,
                    "atomic_scale": m},
      "pulse":     {"energy": J, "lambda0": m, "ell": m},
      "sampling":  {"mode": "literature" | "proxy" | "table",
                    "I": 1, "alpha": 1, "lambda": 1,
                    "time_table": path, "space_table": path},
      "numerics":  {"rel_tol": 1, "mc_samples": int, "seed": int, "proposal_scale": 1},
      "output":    {"format": "csv" | "json", "path": path or null}
    }

Missing sections fall back to the liquid He-3 preset with I = 113.
Relative table paths resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError, ValidationError
from .physmodel import FluidMedium, PhysicalConstants, ProbePulse, he3_preset
from .quadrature import MonteCarloSpec, QuadratureSpec
from .sampling import SamplingPair, SamplingProfile

DEFAULT_I = 113.0
SAMPLING_MODES = ("literature", "proxy", "table")
FORMATS = ("csv", "json")

_SECTION_KEYS = {
    "constants": {"hbar", "c", "kB"},
    "fluid": {"cs", "rho0", "eta", "temperature", "atomic_scale"},
    "pulse": {"energy", "lambda0", "ell"},
    "sampling": {"mode", "I", "alpha", "lambda", "time_table", "space_table"},
    "numerics": {"rel_tol", "mc_samples", "seed", "proposal_scale"},
    "output": {"format", "path"},
}


@dataclass(frozen=True)
class SamplingConfig:
    mode: str = "literature"
    I: float = DEFAULT_I
    alpha: float = 0.5
    lam: float = 0.5
    time_table: Optional[str] = None
    space_table: Optional[str] = None

    def pair(self) -> SamplingPair:
        if self.mode == "literature":
            return SamplingPair.literature(self.I)
        if self.mode == "proxy":
            return SamplingPair.proxy(self.alpha, self.lam)
        return SamplingPair(SamplingProfile.from_csv(self.time_table),
                            SamplingProfile.from_csv(self.space_table))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "I": self.I, "alpha": self.alpha, "lambda": self.lam,
                "time_table": self.time_table, "space_table": self.space_table}


@dataclass(frozen=True)
class NumericsConfig:
    rel_tol: float = 1e-10
    mc_samples: int = 1_000_000
    seed: int = 0
    proposal_scale: float = 1.0

    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol)

    def mc(self) -> MonteCarloSpec:
        return MonteCarloSpec(self.mc_samples, self.seed, self.proposal_scale)

    def to_dict(self) -> dict:
        return {"rel_tol": self.rel_tol, "mc_samples": self.mc_samples, "seed": self.seed,
                "proposal_scale": self.proposal_scale}


@dataclass(frozen=True)
class RunConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    fluid: FluidMedium = field(default_factory=lambda: he3_preset()[0])
    pulse: ProbePulse = field(default_factory=lambda: he3_preset()[1])
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output_format: str = "json"
    output_path: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "constants": self.constants.to_dict(),
            "fluid": self.fluid.to_dict(),
            "pulse": self.pulse.to_dict(),
            "sampling": self.sampling.to_dict(),
            "numerics": self.numerics.to_dict(),
            "output": {"format": self.output_format, "path": self.output_path},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """sha256 of the inputs that determine results; the output section is left out."""
        doc = {k: v for k, v in self.to_dict().items() if k != "output"}
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be a JSON object")
        unknown = set(doc) - set(_SECTION_KEYS)
        if unknown:
            raise ConfigError(f"config: unknown section(s) {sorted(unknown)}; "
                              f"valid: {sorted(_SECTION_KEYS)}")
        for sec, keys in _SECTION_KEYS.items():
            body = doc.get(sec, {})
            if not isinstance(body, dict):
                raise ConfigError(f"{sec}: must be an object")
            extra = set(body) - keys
            if extra:
                raise ConfigError(f"{sec}: unknown field(s) {sorted(extra)}; valid: {sorted(keys)}")

        def num(sec, key, default, kind=float):
            v = doc.get(sec, {}).get(key, default)
            if v is None:
                return None
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{sec}.{key}: expected a number, got {v!r}")
            return kind(v)

        d_medium, d_pulse = he3_preset()
        try:
            constants = PhysicalConstants(
                hbar=num("constants", "hbar", PhysicalConstants.hbar),
                c=num("constants", "c", PhysicalConstants.c),
                kB=num("constants", "kB", PhysicalConstants.kB))
            fluid = FluidMedium(
                cs=num("fluid", "cs", d_medium.cs),
                rho0=num("fluid", "rho0", d_medium.rho0),
                eta=num("fluid", "eta", d_medium.eta),
                temperature=num("fluid", "temperature", d_medium.temperature),
                atomic_scale=num("fluid", "atomic_scale", d_medium.atomic_scale),
                light_speed=constants.c)
            pulse = ProbePulse(
                energy=num("pulse", "energy", d_pulse.energy),
                lambda0=num("pulse", "lambda0", d_pulse.lambda0),
                ell=num("pulse", "ell", d_pulse.ell))
            s = doc.get("sampling", {})
            mode = s.get("mode", "literature")
            if mode not in SAMPLING_MODES:
                raise ConfigError(f"sampling.mode: expected one of {SAMPLING_MODES}, got {mode!r}")
            tables = {}
            for key in ("time_table", "space_table"):
                p = s.get(key)
                if p is not None:
                    path = Path(p)
                    if base_dir is not None and not path.is_absolute():
                        path = base_dir / path
                    if not path.is_file():
                        raise ConfigError(f"sampling.{key}: file not found: {path}")
                    p = str(path)
                elif mode == "table":
                    raise ConfigError(f"sampling.{key}: required when sampling.mode is 'table'")
                tables[key] = p
            sampling = SamplingConfig(mode=mode, I=num("sampling", "I", DEFAULT_I),
                                      alpha=num("sampling", "alpha", 0.5),
                                      lam=num("sampling", "lambda", 0.5), **tables)
            sampling.pair()  # validate exponents / tables now
            numerics = NumericsConfig(
                rel_tol=num("numerics", "rel_tol", 1e-10),
                mc_samples=num("numerics", "mc_samples", 1_000_000, int),
                seed=num("numerics", "seed", 0, int),
                proposal_scale=num("numerics", "proposal_scale", 1.0))
            numerics.quad()
            numerics.mc()
        except ConfigError:
            raise
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
        out = doc.get("output", {})
        fmt = out.get("format", "json")
        if fmt not in FORMATS:
            raise ConfigError(f"output.format: expected one of {FORMATS}, got {fmt!r}")
        return cls(constants, fluid, pulse, sampling, numerics, fmt, out.get("path"))

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {path}: {exc}") from None
        return cls.from_dict(doc, base_dir=path.parent)
