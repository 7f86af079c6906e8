"""Command-line entry point.

Every subcommand reads a config (a path or a shipped name), applies
``--set section.key=value`` overrides, echoes the resolved config to stderr
and writes a CSV table (stdout unless a path is given). ``--figure`` also
renders a plot next to it.

Exit status: 0 on success, 1 on invalid input, 2 when integration diverges.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import RunConfig, apply_override, format_config, load_config, parse_config
from .diagnostics import (average_power, average_power_legacy, bifurcation_sweep, classify,
                          poincare)
from .errors import ConfigError, DivergenceError
from .integrator import STATE_NAMES, energy_audit, integrate, integrate_legacy
from .internal import freq_response_internal
from .model import DimlessParams
from .output import Series, branch_series, emit_csv, emit_figure
from .primary import freq_response_primary
from .sweeps import (SweepRecord, SweepSpec, chaos_grid, family_sweep, power_compare,
                     retune_capacitance, retune_physical)

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2

COMMANDS = ("simulate", "poincare", "bifurcate", "freqresp-internal", "freqresp-primary",
            "sweep", "chaos-grid", "power-compare", "energy-audit", "retune")

DEFAULT_CONFIG = {"chaos-grid": "ref17", "bifurcate": "ref17"}


class Result:
    """Table plus optional figure produced by a subcommand."""

    def __init__(self, columns, rows, series=(), style=None, summary=""):
        self.columns = columns
        self.rows = rows
        self.series = list(series)
        self.style = style or {}
        self.summary = summary


def _workers(cfg):
    return cfg.analysis["workers"] or None


def cmd_simulate(cfg: RunConfig, args) -> Result:
    if args.legacy:
        if cfg.physical is None:
            raise ConfigError("--legacy needs a [physical] section")
        tr = integrate_legacy(cfg.physical, cfg.integrate)
        p = cfg.physical
        avg = average_power_legacy(tr, p.Cme, p.S1, cfg.analysis["Rload"])
        cols = ["t", *tr.names]
        rows = np.column_stack([tr.tau, tr.states])
        series = [Series(tr.tau, tr.column("x"), "x")]
        return Result(cols, rows, series, {"xlabel": "t [s]", "ylabel": "x [m]"},
                      f"average power {avg!r}")
    d = cfg.model
    tr = integrate(d, cfg.integrate)
    power = cfg.analysis["Rload"] * tr.column("dQ2") ** 2
    rows = np.column_stack([tr.tau, tr.states, power])
    series = [Series(tr.tau, tr.column(n), n) for n in ("Y", "Q1", "Q2")]
    avg = average_power(tr, cfg.analysis["Rload"])
    return Result(["tau", *STATE_NAMES, "power"], rows, series,
                  {"xlabel": "tau", "ylabel": "response"}, f"average power {avg!r}")


def cmd_poincare(cfg: RunConfig, args) -> Result:
    d, var = cfg.model, cfg.analysis["variable"]
    tr = integrate(d, cfg.integrate)
    sec = poincare(tr, d, var)
    rc = classify(sec, cfg.analysis["tol"])
    rows = [(k, t, v, dv) for k, (t, (v, dv)) in enumerate(zip(sec.tau, sec.points))]
    series = [Series(sec.points[:, 0], sec.points[:, 1], rc.label, kind="scatter")]
    return Result(["index", "tau", var, "d" + var], rows, series,
                  {"xlabel": var, "ylabel": "d" + var, "marker_size": 6.0},
                  f"{rc.label} ({rc.distinct_points} clusters)")


def _grid(cfg):
    a = cfg.analysis
    if a["values"]:
        return list(a["values"])
    if a["grid_n"] < 1:
        raise ConfigError("grid_n must be >= 1")
    return list(np.linspace(a["grid_min"], a["grid_max"], a["grid_n"]))


def cmd_bifurcate(cfg: RunConfig, args) -> Result:
    a = cfg.analysis
    diag = bifurcation_sweep(cfg.model, a["param"], _grid(cfg), cfg.integrate, a["variable"],
                             a["tol"], reseed=a["reseed"], workers=_workers(cfg))
    rows, xs, ys = [], [], []
    for value, n, samples in zip(diag.param_values, diag.distinct, diag.samples):
        if len(samples) == 0:
            rows.append((float(value), int(n), float("nan")))
        for s in samples:
            rows.append((float(value), int(n), float(s)))
            xs.append(value)
            ys.append(s)
    split = diag.first_split()
    split = None if split is None else float(split)
    return Result([a["param"], "distinct", a["variable"]], rows,
                  [Series(xs, ys, kind="scatter")],
                  {"xlabel": a["param"], "ylabel": a["variable"], "marker_size": 0.5},
                  f"first split at {a['param']} = {split!r}")


def _freqresp(cfg: RunConfig, regime) -> Result:
    a = cfg.analysis
    target = a["target"] or regime
    d = cfg.model if target == "none" else retune_capacitance(cfg.model, target).params
    amplitudes = a["values"] or (d.E,)
    kw = {}
    if a["sigma1_min"] is not None or a["sigma1_max"] is not None:
        default = (-0.4, 0.4) if regime == "internal" else (-0.6, 0.6)
        lo = a["sigma1_min"] if a["sigma1_min"] is not None else default[0]
        hi = a["sigma1_max"] if a["sigma1_max"] is not None else default[1]
        kw["sigma1_range"] = (lo, hi)
    if a["n_points"]:
        kw["n_points"] = a["n_points"]
    fn = freq_response_internal if regime == "internal" else freq_response_primary
    rows, series, peaks = [], [], []
    for i, E in enumerate(amplitudes):
        curve = fn(E, d, **kw)
        rows += [(E, *pt) for pt in curve]
        series += branch_series(curve.column("sigma1"), curve.column("p3"),
                                [pt.stable for pt in curve], f"E={E!r}",
                                colors=(f"C{2 * i % 10}", f"C{(2 * i + 1) % 10}"))
        pk = curve.peak("p3")
        peaks.append(f"E={E!r}: peak p3 {pk.p3!r} at sigma1 {pk.sigma1!r}" if pk
                     else f"E={E!r}: no equilibria")
    return Result(["E", "sigma1", "p1", "p2", "p3", "stable"], rows, series,
                  {"xlabel": "sigma1", "ylabel": "p3"}, "; ".join(peaks))


def cmd_freqresp_internal(cfg, args):
    return _freqresp(cfg, "internal")


def cmd_freqresp_primary(cfg, args):
    return _freqresp(cfg, "primary")


def cmd_sweep(cfg: RunConfig, args) -> Result:
    a = cfg.analysis
    if not a["values"]:
        raise ConfigError("sweep needs analysis.values")
    kw = {}
    if a["sigma1_min"] is not None and a["sigma1_max"] is not None:
        kw["sigma1_range"] = (a["sigma1_min"], a["sigma1_max"])
    if a["n_points"]:
        kw["n_points"] = a["n_points"]
    spec = SweepSpec(base=cfg.model, vary=a["param"], values=tuple(a["values"]),
                     analysis=a["sweep_analysis"], physical=cfg.physical,
                     target=a["target"] or None, cfg=cfg.integrate, tol=a["tol"],
                     variable=a["variable"], **kw)
    res = family_sweep(spec)
    y = "avg_power" if spec.analysis in ("simulate", "power") else "peak_p3"
    series = [Series(res.column("value"), res.column(y), y)]
    return Result(list(SweepRecord._fields), res.records, series,
                  {"xlabel": a["param"], "ylabel": y})


def cmd_chaos_grid(cfg: RunConfig, args) -> Result:
    a = cfg.analysis
    recs = chaos_grid(cfg.model, a["pairs"], cfg.integrate, a["tol"], a["variable"],
                      _workers(cfg))
    rows = [(r.alpha2, r.beta2, r.response.label if r.response else "diverged", r.spread,
             r.error) for r in recs]
    series = [Series([r.alpha2 for r in recs], [r.spread for r in recs], "distinct points")]
    return Result(["alpha2", "beta2", "label", "distinct", "error"], rows, series,
                  {"xlabel": "alpha2", "ylabel": "distinct section points"})


def cmd_power_compare(cfg: RunConfig, args) -> Result:
    pc = power_compare(cfg.model, cfg.integrate, cfg.analysis["Rload"])
    return Result(list(pc._fields), [pc], summary=f"primary/internal ratio {pc.ratio!r}")


def cmd_energy_audit(cfg: RunConfig, args) -> Result:
    stencil = cfg.analysis["audit_stencil"]
    tr = integrate(cfg.model, cfg.integrate)
    res = energy_audit(tr, cfg.model, stencil)
    return Result(["steps_per_period", "stencil", "residual"],
                  [(cfg.integrate.steps_per_period, stencil, res)])


def cmd_retune(cfg: RunConfig, args) -> Result:
    target = cfg.analysis["target"]
    if target not in ("internal", "primary"):
        raise ConfigError("retune needs analysis.target = internal or primary")
    r = retune_capacitance(cfg.model, target)
    cols = ["target", "cs_factor", "ct_factor", *DimlessParams.field_names()]
    row = [target, r.cs_factor, r.ct_factor, *r.params.as_array()]
    if cfg.physical is not None:
        p, _ = retune_physical(cfg.physical, target)
        cols += ["Cs", "Ct"]
        row += [p.Cs, p.Ct]
    return Result(cols, [row])


HANDLERS = {
    "simulate": cmd_simulate,
    "poincare": cmd_poincare,
    "bifurcate": cmd_bifurcate,
    "freqresp-internal": cmd_freqresp_internal,
    "freqresp-primary": cmd_freqresp_primary,
    "sweep": cmd_sweep,
    "chaos-grid": cmd_chaos_grid,
    "power-compare": cmd_power_compare,
    "energy-audit": cmd_energy_audit,
    "retune": cmd_retune,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maglev", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HANDLERS[name].__name__.replace("cmd_", "").replace("_", " "))
        sp.add_argument("-c", "--config", default=None,
                        help="config file or shipped name (baseline, ref17)")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config key")
        sp.add_argument("--csv", default=None, help="CSV output path (default: stdout)")
        sp.add_argument("--figure", default=None, help="figure path (.svg, .png or .pdf)")
        sp.add_argument("-q", "--quiet", action="store_true",
                        help="do not echo the resolved config")
        if name == "simulate":
            sp.add_argument("--legacy", action="store_true",
                            help="integrate the dimensional single-circuit model")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors; 2 means divergence here
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        text = load_config(args.config or DEFAULT_CONFIG.get(args.command, "baseline"))
        for item in args.overrides:
            text = apply_override(text, item)
        cfg = parse_config(text)
        if not args.quiet:
            stderr.write("".join(f"# {line}\n" if line else "#\n"
                                 for line in format_config(cfg).splitlines()))
        result = HANDLERS[args.command](cfg, args)
        csv_path = args.csv or cfg.output["csv"] or None
        text = emit_csv(result.rows, result.columns, csv_path)
        if csv_path is None:
            stdout.write(text)
        fig_path = args.figure or cfg.output["figure"] or None
        if fig_path:
            emit_figure(result.series, result.style, fig_path)
        if result.summary:
            stderr.write(result.summary + "\n")
    except DivergenceError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_DIVERGED
    except (ValueError, KeyError, OSError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
