"""Command-line entry point ``anidecay``.

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 runtime blow-up.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from . import io as aio
from .config import build_run_config, load_settings
from .decay import acceptance, compare_modes, fit_power_law
from .duhamel import DivFreeProfile, GaussianProfile, linear_decay_quadrature
from .errors import AnidecayError, BlowUpError, ConfigError, FitError, ParameterGateError
from .identities import verify_identities
from .solver import MONITOR_COLUMNS, apriori_monitor, energy_budget, run
from .spectral import Grid3, set_threads

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3

SPARK_COLUMNS = ("l2_sq", "vh_l2_sq", "v3_l2_sq", "d3v_l2_sq", "grad_h_l2_sq")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override a configuration key (repeatable)",
    )
    p.add_argument("--threads", type=int, help="FFT worker threads (env ANIDECAY_THREADS)")
    p.add_argument("--format", default="text", choices=("text", "json", "csv", "svg"))


def build_parser():
    parser = _Parser(prog="anidecay", description="Anisotropic Navier-Stokes decay experiments")
    parser.add_argument("--version", action="version", version=f"anidecay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, text in (
        ("gen-data", "generate initial data and its functionals"),
        ("run", "integrate a configuration and write series"),
        ("verify-linear", "check the linear tier against the exact semigroup"),
        ("verify-identities", "run the identity suite"),
        ("compare", "anisotropic vs isotropic runs on identical data"),
    ):
        _common(sub.add_parser(name, help=text))

    p = sub.add_parser("fit", help="power-law fit of columns of a series CSV")
    _common(p)
    p.add_argument("series", help="series CSV")
    p.add_argument("--column", action="append", dest="columns", help="column to fit (repeatable)")
    p.add_argument("--window", nargs=2, type=float, metavar=("T0", "T1"))

    p = sub.add_parser("report", help="decay acceptance report for a series CSV")
    _common(p)
    p.add_argument("series", help="series CSV written by 'run'")

    p = sub.add_parser("quadrature", help="linear v3 decay of an analytic profile on R^3")
    _common(p)
    p.add_argument("--profile", choices=("gaussian", "divfree"), default="divfree")
    p.add_argument("--a", type=float, default=1.0, help="Gaussian horizontal exponent")
    p.add_argument("--alpha", type=float, help="div-free horizontal exponent")
    p.add_argument("--beta", type=float, help="div-free vertical exponent")
    p.add_argument("--delta", type=float, default=0.05, help="margin above the critical exponents")
    p.add_argument("--region", choices=("cone", "all"), default="cone")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--times", nargs=3, type=float, default=(10.0, 1000.0, 30), metavar=("T0", "T1", "N"))
    return parser


def _threads(args):
    n = args.threads
    if n is None:
        env = os.environ.get("ANIDECAY_THREADS")
        if env:
            try:
                n = int(env)
            except ValueError:
                raise UsageError(f"ANIDECAY_THREADS must be an integer, got {env!r}") from None
    if n is not None:
        if n < 1:
            raise UsageError(f"--threads must be positive, got {n}")
        set_threads(n)


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out, settings, args, extra=None):
    aio.write_manifest(
        out / "manifest.json", settings, ["anidecay", args.command] + sys.argv[2:], __version__, extra
    )


def cmd_gen_data(args):
    settings = load_settings(args.config, args.overrides)
    cfg = build_run_config(settings)
    out = _outdir(args)
    v0, report = cfg.initial_data()
    aio.write_checkpoint(out / "v0.ansd", v0, 0.0)
    aio.write_json(out / "initial_data.json", report.as_dict())
    _manifest(out, settings, args)
    if args.format == "json":
        print(aio.to_json(report.as_dict()), end="")
    else:
        for k, v in report.as_dict().items():
            print(f"{k:<20} {v:.10g}")
    return EXIT_OK


def cmd_run(args):
    settings = load_settings(args.config, args.overrides)
    cfg = build_run_config(settings)
    out = _outdir(args)
    t0 = time.perf_counter()
    rec = run(cfg)
    elapsed = time.perf_counter() - t0
    aio.record_to_csv(out / "series.csv", rec)
    b = energy_budget(rec)
    lg = rec.ledger
    aio.series_to_csv(
        out / "energy.csv",
        {
            "t": lg.times,
            "energy": lg.energy,
            "dissipation": lg.dissipation,
            "dissipation_rate": lg.dissipation_rate,
            "residual": b.residual,
            "quadrature_term": b.quadrature_term,
            "corrected_residual": b.corrected_residual,
        },
    )
    aio.series_to_csv(out / "apriori.csv", apriori_monitor(rec))
    if rec.initial_report is not None:
        aio.write_json(out / "initial_data.json", rec.initial_report.as_dict())
    if args.format == "svg":
        aio.write_sparklines(out, rec.series, SPARK_COLUMNS)
    _manifest(out, settings, args, {"elapsed_seconds": round(elapsed, 3)})
    print(
        f"run finished: t_end = {cfg.t_end:g}, {cfg.n_steps} steps, "
        f"max energy residual {float(np.max(b.residual)):.3e}, "
        f"corrected {float(np.max(b.corrected_residual)):.3e}"
    )
    return EXIT_OK


def linear_tier_error(n=32, steps=1000, dt=1e-3, seed=0):
    """Max per-mode relative error of the linear-only solver vs exp(-t |k_h|^2) v0."""
    from .initial_data import SpectralEnvelope, generate
    from .solver import step

    grid = Grid3(n, n)
    v0, _ = generate(SpectralEnvelope(0.0, 1.0, 2.0, seed=seed), grid, c0=None)
    v = v0
    for i in range(steps):
        v = step(v, dt, "linear-only", t=i * dt)
    exact = np.exp(-steps * dt * grid.kh2) * np.asarray(v0.coeffs)
    nz = np.abs(exact) > 0
    err = np.abs(np.asarray(v.coeffs) - exact)
    return float(np.max(err[nz] / np.abs(exact[nz]))) if nz.any() else float(np.max(err))


def cmd_verify_linear(args):
    err = linear_tier_error()
    ok = err <= 1e-12
    print(f"{'PASS' if ok else 'FAIL'}  linear tier max relative error {err:.3e} (tol 1e-12)")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_identities(args):
    results = verify_identities()
    if args.format == "json":
        print(aio.to_json([r.__dict__ for r in results]), end="")
    else:
        for r in results:
            print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _read_series(path):
    try:
        columns, data = aio.read_csv(path)
    except FileNotFoundError:
        raise UsageError(f"series file {path} does not exist") from None
    return {c: data[:, i] for i, c in enumerate(columns)}


def cmd_fit(args):
    series = _read_series(args.series)
    if "t" not in series:
        raise UsageError(f"{args.series} has no 't' column")
    columns = args.columns or [c for c in series if c != "t"]
    fits = []
    for c in columns:
        if c not in series:
            raise UsageError(f"{args.series} has no column {c!r}")
        fits.append(fit_power_law(series["t"], series[c], args.window, quantity=c))
    if args.format == "json":
        print(aio.to_json([f.as_dict() for f in fits]), end="")
    else:
        for f in fits:
            print(
                f"{f.quantity:<20} exponent {f.exponent:+.6f} +- {f.stderr:.2e}  "
                f"R2 {f.r2:.6f}  n {f.n_samples}"
            )
    return EXIT_OK


def cmd_report(args):
    settings = load_settings(args.config, args.overrides)
    cfg = build_run_config(settings)
    series = _read_series(args.series)
    missing = [c for c in MONITOR_COLUMNS if c not in series]
    if missing:
        raise FitError(f"{args.series} is missing series {missing}")
    rec = SimpleNamespace(series=series, config=cfg)
    rep = acceptance(
        rec,
        cfg.s,
        cfg.s1,
        tolerance=settings["fit.tolerance"],
        gap_tolerance=settings["fit.gap_tolerance"],
        variant=settings["fit.variant"],
    )
    out = _outdir(args)
    (out / "report.json").write_text(rep.to_json() + "\n")
    (out / "report.txt").write_text(rep.to_text() + "\n")
    print(rep.to_json() if args.format == "json" else rep.to_text())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_compare(args):
    settings = load_settings(args.config, args.overrides)
    cfg = build_run_config(settings)
    out = _outdir(args)
    cmp = compare_modes(cfg)
    aio.write_json(out / "compare.json", cmp.as_dict())
    aio.record_to_csv(out / "series_anisotropic.csv", cmp.anisotropic)
    aio.record_to_csv(out / "series_isotropic.csv", cmp.isotropic)
    _manifest(out, settings, args)
    d = cmp.as_dict()
    if args.format == "json":
        print(aio.to_json(d), end="")
    else:
        for mode in ("anisotropic", "isotropic"):
            f = cmp.fits[mode]
            print(
                f"{mode:<12} E(t_end) {cmp.energy_end[mode]:.6e}  "
                f"p(v^h) {f['vh_l2_sq'].exponent:+.4f}  p(v3) {f['v3_l2_sq'].exponent:+.4f}  "
                f"gap {d['v3_minus_vh'][mode]:+.4f}"
            )
    return EXIT_OK


def cmd_quadrature(args):
    t0, t1, n = args.times
    if not (0 <= t0 < t1) or int(n) != n or n < 2:
        raise UsageError("--times needs 0 <= T0 < T1 and an integer N >= 2")
    times = np.geomspace(max(t0, 1e-12), t1, int(n)) if t0 > 0 else np.linspace(t0, t1, int(n))
    s = args.s
    if args.profile == "gaussian":
        profile = GaussianProfile(args.a)
        s_arg = None
    else:
        alpha = args.alpha if args.alpha is not None else s - 1 + args.delta
        if args.beta is not None:
            beta = args.beta
        elif args.region == "cone":
            beta = s / 2 - 0.25 + args.delta
        else:
            beta = s / 2 + 0.75 + args.delta
        profile = DivFreeProfile(alpha, beta, args.region)
        s_arg = s
    res = linear_decay_quadrature(profile, times, s=s_arg, window=(float(times[0]), float(times[-1])))
    out = _outdir(args)
    aio.series_to_csv(out / "quadrature.csv", {"t": res.times, "v3_linear_l2_sq": res.values})
    summary = {"profile": profile.__class__.__name__, "fit": res.fit.as_dict() if res.fit else None,
               "target": res.target}
    aio.write_json(out / "quadrature.json", summary)
    if args.format == "json":
        print(aio.to_json(summary), end="")
    else:
        if res.fit:
            line = f"fitted exponent {res.fit.exponent:+.6f} +- {res.fit.stderr:.1e}"
            if res.target is not None:
                line += f"  bound {res.target:+.4f} (+0.05)"
            print(line)
    if res.target is not None and res.fit is not None:
        return EXIT_OK if res.fit.exponent <= res.target + 0.05 + 1e-9 else EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "run": cmd_run,
    "verify-linear": cmd_verify_linear,
    "verify-identities": cmd_verify_identities,
    "fit": cmd_fit,
    "report": cmd_report,
    "compare": cmd_compare,
    "quadrature": cmd_quadrature,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _threads(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ParameterGateError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except AnidecayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
