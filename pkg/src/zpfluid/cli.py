"""Command-line entry point.

Exit codes: 0 success, 1 user or validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, SamplingConfig
from .errors import NumericalError, UnsupportedModeError, ValidationError, ZPFError
from .moments import (RegimeWarning, loglog_slope, moment_report,
                      mu3_scaling_probe, reduced_variance_integral)
from .physmodel import FluidMedium, pulse_duration
from .sampling import (PROXY, combined_I, dimensionless_If, dimensionless_Ig,
                       gamma_moment)
from .scattering import (SCAN_FIELDS, continuum_min_ell, ell_min_window,
                         feasibility_scan, reference_targets, rows_to_csv, rows_to_json,
                         scatter_report)
from .trials import SURROGATES, TrialSpec, simulate_trials

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2


def provenance(cfg: RunConfig, seed=None) -> dict:
    return {"tool": "zpfluid", "version": __version__, "config_hash": cfg.config_hash(),
            "seed": cfg.numerics.seed if seed is None else seed}


def _prov_lines(prov: dict) -> list[str]:
    return [" ".join(f"{k}={v}" for k, v in prov.items())]


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _csv_text(header: list[str], rows: list[list], prov: dict) -> str:
    buf = io.StringIO()
    for line in _prov_lines(prov):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.10e}"
    return "" if v is None else v


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if getattr(args, "temperature", None) is not None:
        f = cfg.fluid
        try:
            fluid = FluidMedium(f.cs, f.rho0, f.eta, args.temperature, f.atomic_scale,
                                light_speed=cfg.constants.c)
        except ValidationError as exc:
            raise ValidationError(f"--temperature: {exc}") from None
        cfg = replace(cfg, fluid=fluid)
    if getattr(args, "I", None) is not None:
        if not args.I > 0:
            raise ValidationError("--I: must be positive")
        cfg = replace(cfg, sampling=SamplingConfig(mode="literature", I=args.I))
    if getattr(args, "alpha", None) is not None or getattr(args, "lam", None) is not None:
        s = cfg.sampling
        cfg = replace(cfg, sampling=SamplingConfig(
            mode="proxy", I=s.I,
            alpha=args.alpha if args.alpha is not None else s.alpha,
            lam=args.lam if args.lam is not None else s.lam))
        cfg.sampling.pair()
    if getattr(args, "format", None):
        cfg = replace(cfg, output_format=args.format)
    if getattr(args, "out", None):
        cfg = replace(cfg, output_path=args.out)
    return cfg


# reproduce

def cmd_reproduce(args) -> int:
    cfg = load_config(args)
    medium, pulse, const = cfg.fluid, cfg.pulse, cfg.constants
    I = combined_I(cfg.sampling.pair())
    rep = scatter_report(medium, pulse, I, const)
    targets = reference_targets(medium, pulse, I)
    ell_min = continuum_min_ell(medium, const)
    lo, hi = ell_min_window(medium)
    results = []
    for name in ("ratio_fluct", "ratio_stat", "ratio_thermal_fluct"):
        value = getattr(rep, name)
        if name in targets:
            target, tol = targets[name]
            ok = value is not None and abs(value - target) <= tol
        else:
            target = tol = None
            ok = False
        results.append({"quantity": name, "value": value, "target": target,
                        "tolerance": tol, "pass": ok})
    results.append({"quantity": "ell_min_m", "value": ell_min, "target": 0.5 * (lo + hi),
                    "tolerance": 0.5 * (hi - lo), "pass": lo <= ell_min <= hi})
    all_ok = all(r["pass"] for r in results)
    prov = provenance(cfg)
    if cfg.output_format == "csv":
        text = _csv_text(["quantity", "value", "target", "tolerance", "pass"],
                         [list(r.values()) for r in results], prov)
    else:
        text = json.dumps({"provenance": prov, "I": I, "temperature_K": medium.temperature,
                           "results": results, "all_pass": all_ok}, indent=2)
    _emit(text, cfg)
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['quantity']} = {r['value']}", file=sys.stderr)
    return EXIT_OK if all_ok else EXIT_USER


# moments

def cmd_moments(args) -> int:
    cfg = load_config(args)
    medium, pulse, const = cfg.fluid, cfg.pulse, cfg.constants
    if args.thermal:
        if not (medium.eta > 1 and medium.temperature > 0):
            raise ValidationError("fluid.eta must be > 1 and fluid.temperature > 0 "
                                  "when thermal output is requested")
    pair = cfg.sampling.pair()
    report = moment_report(medium, pulse, pair, const, cfg.numerics.quad())
    doc = {"provenance": provenance(cfg), **report.to_dict()}
    if args.thermal:
        rep = scatter_report(medium, pulse, report.I_used, const)
        doc["thermal"] = {"ratio_thermal_mean": rep.ratio_thermal_mean,
                          "ratio_thermal_fluct": rep.ratio_thermal_fluct}
    if args.regime_sweep:
        if pair.mode != "profile":
            raise UnsupportedModeError("--regime-sweep needs profile sampling (proxy or table)")
        If, Ig = dimensionless_If(pair), dimensionless_Ig(pair)
        rows = []
        for r in args.regime_values:
            K = reduced_variance_integral(pair, r, cfg.numerics.quad())
            if not K.converged:
                raise NumericalError(f"variance quadrature failed at ratio {r:g}: {K.message}", K)
            ratio = 16 * r * K.value / (If * Ig)
            rows.append({"regime_ratio": r, "exact_over_asymptotic": ratio,
                         "rel_error": K.rel_error})
        doc["regime_sweep"] = rows
    if args.mu3_sweep:
        if pair.mode != "profile":
            raise UnsupportedModeError("--mu3-sweep needs profile sampling (proxy or table)")
        tau = pulse_duration(pulse, medium, const)
        ells = [r * medium.cs * tau for r in args.regime_values]
        mc = cfg.numerics.mc()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            pts = mu3_scaling_probe(medium, ells, tau, pair, mc, const, cfg.numerics.quad())
        doc["mu3_sweep"] = {
            "points": [{"ell": p.ell, "mu3": p.mu3, "mu3_err": p.mu3_err, "mu2": p.mu2,
                        "skew_ratio": p.skew_ratio, "cs_tau_over_ell": p.scale} for p in pts],
            "loglog_slope": loglog_slope([p.scale for p in pts], [p.skew_ratio for p in pts]),
        }
    if cfg.output_format == "csv":
        keys = [k for k in report.to_dict() if k != "flags"]
        text = _csv_text(keys + ["flags"], [[report.to_dict()[k] for k in keys]
                                            + [";".join(report.flags)]], doc["provenance"])
    else:
        text = json.dumps(doc, indent=2)
    _emit(text, cfg)
    return EXIT_OK


# scan

def parse_sweep(spec: str, log: bool) -> tuple[str, list[float]]:
    try:
        name, rng = spec.split("=", 1)
        start, stop, steps = rng.split(":")
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError:
        raise ValidationError(f"--sweep {spec!r}: expected <field>=<start>:<stop>:<steps>") from None
    name = name.strip()
    if name not in SCAN_FIELDS:
        raise ValidationError(f"--sweep: unknown field {name!r}; valid fields: {', '.join(SCAN_FIELDS)}")
    if steps < 1:
        raise ValidationError(f"--sweep {name}: steps must be >= 1")
    if log:
        if not (start > 0 and stop > 0):
            raise ValidationError(f"--sweep {name}: --log needs positive bounds")
        vals = np.geomspace(start, stop, steps)
    else:
        vals = np.linspace(start, stop, steps)
    return name, [float(v) for v in vals]


def cmd_scan(args) -> int:
    cfg = load_config(args)
    if not args.sweep:
        raise ValidationError("scan needs at least one --sweep")
    grid = dict(parse_sweep(s, args.log) for s in args.sweep)
    I = combined_I(cfg.sampling.pair())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        rows = feasibility_scan(cfg.fluid, cfg.pulse, grid, I, constants=cfg.constants)
    prov = provenance(cfg)
    if cfg.output_format == "json":
        text = rows_to_json(rows, prov)
    else:
        text = rows_to_csv(rows, _prov_lines(prov))
    _emit(text, cfg)
    return EXIT_OK


# simulate

def cmd_simulate(args) -> int:
    cfg = load_config(args)
    seed = args.seed if args.seed is not None else cfg.numerics.seed
    spec = TrialSpec(trials=args.trials, seed=seed, include_thermal=not args.no_thermal,
                     surrogate=args.surrogate, bins=args.bins)
    pair = cfg.sampling.pair()
    report = moment_report(cfg.fluid, cfg.pulse, pair, cfg.constants, cfg.numerics.quad(),
                           exact=False)
    if args.mu2 is not None:
        if args.mu2 < 0:
            raise ValidationError("--mu2: must be >= 0")
        report = replace(report, mu2_asymptotic=args.mu2, rms=math.sqrt(args.mu2))
    summary = simulate_trials(cfg.fluid, cfg.pulse, report.I_used, report, spec, cfg.constants,
                              mu3=args.mu3)
    prov = provenance(cfg, seed)
    prov["surrogate"] = spec.surrogate
    if args.hist_out:
        Path(args.hist_out).write_text(summary.histogram_csv(_prov_lines(prov)), encoding="utf-8")
    if cfg.output_format == "csv":
        text = summary.histogram_csv(_prov_lines(prov))
    else:
        text = summary.to_json(prov)
    _emit(text, cfg)
    return EXIT_OK


# sampling-table

def cmd_sampling_table(args) -> int:
    cfg = load_config(args)
    pair = cfg.sampling.pair()
    F, G = pair.require_profiles()
    grid = np.linspace(0.0, args.max_arg, args.points)
    Fv, Gv = F(grid), G(grid)
    If, Ig = dimensionless_If(pair), dimensionless_Ig(pair)
    summary = {"I_f": If, "I_g": Ig, "I": math.sqrt(If * Ig)}
    if F.kind == PROXY and G.kind == PROXY:
        summary["I_f_closed_form"] = gamma_moment(4, F.exponent)
        summary["I_g_closed_form"] = gamma_moment(2, G.exponent)
    prov = provenance(cfg)
    if cfg.output_format == "csv":
        text = _csv_text(["argument", "F", "G"],
                         [[float(a), float(f), float(g)] for a, f, g in zip(grid, Fv, Gv)], prov)
        text += "".join(f"# {k}={v:.10e}\n" for k, v in summary.items())
    else:
        text = json.dumps({"provenance": prov, "sampling": pair.to_dict(), **summary,
                           "table": [[float(a), float(f), float(g)]
                                     for a, f, g in zip(grid, Fv, Gv)]}, indent=2)
    _emit(text, cfg)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems are user errors (1), not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="zpfluid", description=(
        "Zero-point density fluctuations in a fluid probed by light scattering."))
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, temperature=True, I=True, proxy=False):
        p.add_argument("--config", help="JSON run configuration (SI units)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out", help="output path (default: stdout)")
        if temperature:
            p.add_argument("--temperature", type=float, help="fluid temperature override (K)")
        if I:
            p.add_argument("--I", type=float, help="use literature mode with this I")
        if proxy:
            p.add_argument("--alpha", type=float, help="proxy time exponent (switches to proxy mode)")
            p.add_argument("--lambda", dest="lam", type=float,
                           help="proxy space exponent (switches to proxy mode)")

    p = sub.add_parser("reproduce", help="reference He-3 estimates and continuum bound")
    common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("moments", help="variance, rms, optional sweeps")
    common(p, proxy=True)
    p.add_argument("--regime-sweep", action="store_true",
                   help="exact/asymptotic variance ratio over --regime-values")
    p.add_argument("--mu3-sweep", action="store_true",
                   help="third-moment scaling over ell = r cs tau for r in --regime-values")
    p.add_argument("--regime-values", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    p.add_argument("--thermal", action="store_true", help="also report thermal ratios")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("scan", help="feasibility scan over ell, lambda0, energy, T")
    common(p)
    p.add_argument("--sweep", action="append", default=[],
                   help="<field>=<start>:<stop>:<steps>, repeatable; fields: " + ", ".join(SCAN_FIELDS))
    p.add_argument("--log", action="store_true", help="log-spaced sweeps")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="Monte Carlo of repeated measurements")
    common(p)
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--surrogate", choices=SURROGATES, default="gaussian-clamped")
    p.add_argument("--no-thermal", action="store_true")
    p.add_argument("--mu2", type=float, help="override the variance (e.g. 0 for a Poisson control)")
    p.add_argument("--mu3", type=float, help="third moment for the shifted-gamma surrogate")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--hist-out", help="also write the histogram CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sampling-table", help="tabulate F(u), G(v) and the integrals I_f, I_g, I")
    common(p, temperature=False, I=False, proxy=True)
    p.add_argument("--max-arg", type=float, default=50.0)
    p.add_argument("--points", type=int, default=101)
    p.set_defaults(func=cmd_sampling_table)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, UnsupportedModeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.result is not None:
            print(f"  diagnostics: {exc.result}", file=sys.stderr)
        return EXIT_NUMERIC
    except ZPFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
