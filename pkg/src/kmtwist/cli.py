"""Command-line entry point ``kmtwist``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import csvio
from .center_manifold import TABLE_ROWS, DegenerateCoefficientError, coefficients, table_column
from .estimate import deviation_metrics, mode_estimate
from .harness import (ConfigError, ExperimentConfig, convergence_study, run_simulation, sweep_b1)
from .model import target_state
from .ode import IntegrationError
from .spectra import b1_critical, chi1_supremum, is_linearly_stable, spectrum_rows

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("kmtwist")

_OVERRIDES = (
    ("--b1", "b1", float),
    ("--kappa", "kappa", float),
    ("--sigma", "sigma", float),
    ("--q", "q", int),
    ("--b3", "b3", float),
    ("--n", "n", int),
    ("--seed", "rng_seed", int),
    ("--t-end", "t_end", float),
)


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2) on its own; route through main
        raise _ArgumentError(message)


def _common(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--config", help="flat TOML file of experiment keys")
    for flag, dest, typ in _OVERRIDES:
        p.add_argument(flag, dest=dest, type=typ, default=None)
    p.add_argument("--out", default=default_out, help="output CSV path")
    p.add_argument("--rho2", choices=("tabulated", "projection"), default=None,
                   help="second-harmonic coupling convention for predictions")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kmtwist", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate one run and write the final snapshot")
    _common(p, "snapshot.csv")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("sweep", help="sweep b1 and write the bifurcation table")
    _common(p, "sweep.csv")
    p.add_argument("--b1-values", type=lambda s: [float(x) for x in s.split(",")], default=None,
                   help="comma-separated ascending gains")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-timing", action="store_true", help="write zero wall times")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("spectrum", help="eigenvalues of the linearization per Fourier mode")
    _common(p, "spectrum.csv")
    p.add_argument("--ell-max", type=int, default=16)

    p = sub.add_parser("cm-coeffs", help="center-manifold constants for q = 1..4")
    _common(p, "cm_coeffs.csv")

    p = sub.add_parser("estimate", help="mode estimate of a snapshot CSV")
    _common(p, "estimate.csv")
    p.add_argument("--input", required=True, help="snapshot CSV")

    p = sub.add_parser("converge", help="L2 distance to a refined lattice at time T")
    _common(p, "converge.csv")
    p.add_argument("--workers", type=int, default=None)
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    base = csvio.load_config(args.config) if args.config else ExperimentConfig()
    changes = {dest: getattr(args, dest) for _, dest, _ in _OVERRIDES if getattr(args, dest) is not None}
    if args.rho2:
        changes["rho2_convention"] = args.rho2
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    if getattr(args, "b1_values", None) is not None:
        changes["b1_values"] = tuple(args.b1_values)
    return csvio.config_from_mapping(changes, base)


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _cmd_simulate(cfg: ExperimentConfig, args) -> None:
    res = run_simulation(cfg)
    out = Path(args.out)
    target = target_state(cfg.graph(), cfg.params(), res.t_final).u
    csvio.write_snapshot_csv(out, res.final_u, target)
    hist = _sibling(out, "_modes.csv")
    csvio.write_table(hist, ("t", "r", "psi"), zip(res.history_t.tolist(), res.history_r.tolist(),
                                                   res.history_psi.tolist()))
    csvio.write_text(_sibling(out, ".gp"), csvio.snapshot_plot_script(out, _sibling(out, ".gp")))
    if not args.no_plot:
        from .plotting import plot_mode_history, plot_snapshot

        plot_snapshot(res.final_u, _sibling(out, ".png"))
        plot_mode_history(res.history_t, res.history_r, res.history_psi, _sibling(out, "_modes.png"))
    e = res.estimate
    print(f"t={res.t_final:g} converged={res.converged} residual={res.residual:.3e} "
          f"max_dev={res.max_dev:.3e} r={e.r:.6g} psi={e.psi:.6g} mean_drift={e.mean_drift:.6g}")


def _cmd_sweep(cfg: ExperimentConfig, args) -> None:
    rows = sweep_b1(cfg)
    out = Path(args.out)
    csvio.write_sweep_csv(rows, out, include_timing=not args.no_timing)
    b1q = b1_critical(cfg.q, cfg.kappa, cfg.sigma)
    title = f"q={cfg.q} kappa={cfg.kappa:g} sigma={cfg.sigma:.4g}"
    gp = _sibling(out, ".gp")
    csvio.write_text(gp, csvio.sweep_plot_script(out, gp, b1q, title))
    if not args.no_plot:
        from .plotting import plot_sweep

        plot_sweep(rows, _sibling(out, ".png"), b1q, title)
    for r in rows:
        note = f" error={r.error}" if r.error else ""
        print(f"b1={r.b1:.6g} r={r.r_measured:.6g} predicted={r.r_predicted:.6g} converged={r.converged}{note}")


def _cmd_spectrum(cfg: ExperimentConfig, args) -> None:
    rows = spectrum_rows(cfg.q, cfg.kappa, cfg.sigma, cfg.b1, args.ell_max)
    csvio.write_table(args.out, ("ell", "chi1", "chi2", "re", "im"),
                      ([r["ell"], r["chi1"], r["chi2"], r["re"], r["im"]] for r in rows))
    ell_max = max(64, 4 * cfg.q)
    stable, margin = is_linearly_stable(cfg.q, cfg.kappa, cfg.sigma, cfg.b1, ell_max)
    sup, arg = chi1_supremum(cfg.q, cfg.kappa, ell_max)
    print(f"b1q={b1_critical(cfg.q, cfg.kappa, cfg.sigma):.10g} sup_mode={arg} "
          f"stable={stable} margin={margin:.6g}")


def _cmd_cm(cfg: ExperimentConfig, args) -> None:
    header = ("kappa", "q") + TABLE_ROWS + ("c1", "c2", "beta1_sigma_bar", "beta_sigma")
    rows = []
    for q in range(1, 5):
        col = table_column(q, cfg.kappa, cfg.rho2_convention)
        try:
            co = coefficients(q, cfg.kappa, cfg.sigma, cfg.b3, cfg.rho2_convention)
            extra = [co.c1, co.c2, co.beta1_sigma_bar, co.beta_sigma]
        except DegenerateCoefficientError:
            extra = [math.nan] * 4
        rows.append([cfg.kappa, q] + [col[name] for name in TABLE_ROWS] + extra)
    csvio.write_table(args.out, header, rows)
    for row in rows:
        print(",".join("%.5f" % x if isinstance(x, float) else str(x) for x in row))


def _cmd_estimate(cfg: ExperimentConfig, args) -> None:
    u = csvio.read_snapshot_csv(args.input)
    e = mode_estimate(u, cfg.q)
    spec = cfg.replace(n=u.size).graph()
    max_dev, l2 = deviation_metrics(u, target_state(spec, cfg.params(), cfg.t_end).u)
    csvio.write_table(args.out, ("mean_drift", "r", "psi", "c_coef", "s_coef", "max_dev", "l2_dev"),
                      [[e.mean_drift, e.r, e.psi, e.c_coef, e.s_coef, max_dev, l2]])
    print(f"r={e.r:.10g} psi={e.psi:.10g} mean_drift={e.mean_drift:.10g}")


def _cmd_converge(cfg: ExperimentConfig, args) -> None:
    table = convergence_study(cfg)
    csvio.write_table(args.out, ("n", "l2_distance"), table)
    for n, d in table:
        print(f"n={n} l2={d:.6e}")


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "spectrum": _cmd_spectrum,
    "cm-coeffs": _cmd_cm,
    "estimate": _cmd_estimate,
    "converge": _cmd_converge,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        print(f"kmtwist: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"kmtwist: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ArithmeticError) as exc:
        print(f"kmtwist: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"kmtwist: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
