"""Command-line experiment runner.

Exit codes: 0 all checks pass, 2 configuration error, 3 numerical failure, 4 inequality or
ceiling violation, 5 hypothesis-scan failure.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from .config import load_config
from .errors import ConfigError, HypothesisViolation, NumericalFailure
from .evolution import integrate
from .verify import convergence as conv
from .verify import monitors as mon
from .verify import residuals as res

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VIOLATION, EXIT_HYPOTHESIS = 0, 2, 3, 4, 5
CSV_HEADER = ("t", "monitor", "value", "threshold", "pass")


def _fmt(x):
    return format(float(x), ".17g")


def _atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data if isinstance(data, bytes) else data.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([_fmt(r.t), r.monitor, _fmt(r.value), _fmt(r.threshold),
                         "true" if r.passed else "false"])
    return buf.getvalue()


def read_csv(path):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read CSV {path}: {exc}") from None
    if not lines:
        raise ConfigError(f"CSV {path} is empty")
    if tuple(lines[0]) != CSV_HEADER:
        raise ConfigError(f"CSV {path} lacks the header {','.join(CSV_HEADER)}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if len(line) != len(CSV_HEADER):
            raise ConfigError(f"CSV {path} line {i} has {len(line)} fields")
        try:
            rows.append(mon.MonitorRow(float(line[0]), line[1], float(line[2]), float(line[3])))
        except ValueError:
            raise ConfigError(f"CSV {path} line {i} is not numeric") from None
    if not rows:
        raise ConfigError(f"CSV {path} has no data rows")
    return rows


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return str(x)


def report_text(report):
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


class _Context:
    def __init__(self, args, cfg):
        self.args = args
        self.cfg = cfg
        self.out_dir = Path(args.out_dir)

    def out(self, key):
        return self.out_dir / self.cfg.output[key]

    def say(self, msg):
        if not self.args.quiet:
            print(msg)

    def finish(self, command, rows, code, extra):
        _atomic_write(self.out("csv"), csv_text(rows))
        report = {
            "command": command,
            "version": __version__,
            "exit_code": code,
            "rows": len(rows),
            "failures": [{"t": r.t, "monitor": r.monitor, "value": r.value,
                          "threshold": r.threshold} for r in rows if not r.passed],
            "config": self.cfg.tree,
            **extra,
        }
        _atomic_write(self.out("report"), report_text(report))
        self.say(f"{command}: {len(rows)} rows, {len(report['failures'])} failing, "
                 f"exit {code}; wrote {self.out('csv')} and {self.out('report')}")
        return code


def cmd_run(ctx):
    cfg = ctx.cfg
    scenario = cfg.scenario()
    checks = cfg.checks
    t_start = time.perf_counter()
    traj = integrate(scenario.problem(int(cfg.geometry["resolution"])), scenario.t_end,
                     scenario.cfl_sigma, cfg.snapshot_times())
    ctx.say(f"integrated to t={scenario.t_end} in {len(traj.step_sizes)} steps "
            f"({time.perf_counter() - t_start:.2f} s)")

    rows, theorems, hypothesis_failed = [], {}, False
    for theorem in checks["theorems"]:
        try:
            report = mon.check_inequality(
                traj, theorem, tolerance_C=float(checks["tolerance_C"]), t_min=cfg.time["t_min"],
                d=float(checks["d"]), x_count=int(checks["x_samples"]), seed=int(checks["seed"]))
        except HypothesisViolation as exc:
            hypothesis_failed = True
            print(f"refused: {exc}", file=sys.stderr)
            theorems[theorem] = {"verdict": "refused", "diagnostic": str(exc),
                                 "minima": exc.report.minima if exc.report else {}}
            continue
        rows.extend(report.rows)
        theorems[theorem] = {"verdict": "pass" if report.verdict else "fail",
                             "params": report.params, "minima": report.minima}
    if hypothesis_failed:
        code = EXIT_HYPOTHESIS
    elif all(r.passed for r in rows):
        code = EXIT_OK
    else:
        code = EXIT_VIOLATION
    extra = {"theorems": theorems,
             "trajectory": {"steps": len(traj.step_sizes),
                            "dt_max": max(traj.step_sizes, default=0.0),
                            "snapshots": len(traj.snapshots)}}
    return ctx.finish("run", rows, code, extra)


def _identity_rows(cfg, traj, t):
    checks = cfg.checks
    coeffs = cfg.coefficients()
    ceiling = float(checks["residual_ceiling"])
    geom = traj.geometry
    out = []

    def add(name, values):
        out.append(mon.MonitorRow(t, name, float(np.max(values)), ceiling))

    for family in checks["residuals"]:
        if family == "prop":
            add("res_prop", res.residual_prop(traj, coeffs, t=t))
        elif family == "thm2":
            for lam in checks["lambdas"]:
                add(f"res_thm2_lam{float(lam):g}",
                    res.residual_thm2(traj, coeffs, lam=float(lam), t=t))
        elif family == "cor_u":
            for a_q in checks["a_q"]:
                add(f"res_cor_u_aQ{float(a_q):g}",
                    res.residual_cor(traj, float(a_q), float(checks["d"]), t=t))
        elif family == "cor_v":
            add("res_cor_v", res.residual_cor(traj, traj.problem.a - 4.0, float(checks["d"]),
                                              t=t, form="v"))
        elif family == "bochner":
            add("res_bochner", res.residual_bochner(geom, traj.u_at(t), t))
        elif family == "li_yau":
            add("res_li_yau", res.residual_li_yau(traj, t=t))
        elif family == "coherence":
            a_q = traj.problem.a - 4.0
            for form in ("u", "v"):
                rhs = res.identity_rhs_family(traj, t, a_q=a_q, d=float(checks["d"]), form=form)
                gap = max(res.relative_gap(rhs["prop"], rhs["square"]),
                          res.relative_gap(rhs["prop"], rhs["corollary"]),
                          res.relative_gap(rhs["square"], rhs["corollary"]))
                out.append(mon.MonitorRow(t, f"coherence_{form}", gap,
                                          float(checks["coherence_ceiling"])))
    return out


def cmd_verify_identities(ctx):
    cfg = ctx.cfg
    scenario = cfg.scenario()
    delta = float(cfg.checks["residual_delta"])
    times = [float(t) for t in cfg.checks["residual_times"]]
    if not times:
        raise ConfigError("checks.residual_times is empty")
    for t in times:
        if not scenario.t0 < t - delta < t + delta <= scenario.t_end:
            raise ConfigError(f"residual time {t} +- {delta} must lie in ({scenario.t0}, "
                              f"{scenario.t_end}]")
    snaps = sorted({s for t in times for s in (t - delta, t, t + delta)})
    traj = integrate(scenario.problem(int(cfg.geometry["resolution"])), scenario.t_end,
                     scenario.cfl_sigma, snaps)
    rows = []
    for t in times:
        rows.extend(_identity_rows(cfg, traj, t))
    code = EXIT_OK if all(r.passed for r in rows) else EXIT_VIOLATION
    return ctx.finish("verify-identities", rows, code,
                      {"residual_times": times, "delta": delta})


def cmd_scan_conditions(ctx):
    cfg = ctx.cfg
    checks = cfg.checks
    geom = cfg.scenario().geometry(int(cfg.geometry["resolution"]))
    times = cfg.snapshot_times()
    if cfg.time["t_min"] is not None:
        times = [t for t in times if t >= float(cfg.time["t_min"])]
    samples = geo.sample_vector_fields(geom, int(checks["x_samples"]), int(checks["seed"]))
    report = mon.condition_scan(geom, times, samples, tuple(checks["hypotheses"]))
    code = EXIT_OK if report.verdict else EXIT_HYPOTHESIS
    if code != EXIT_OK:
        print(f"hypothesis scan failed: {mon.describe_failures(report)}", file=sys.stderr)
    return ctx.finish("scan-conditions", report.rows, code,
                      {"minima": report.minima, "params": report.params,
                       "diagnostic": mon.describe_failures(report)})


def _band(raw):
    lo, hi = raw
    return (-math.inf if lo is None else float(lo)), (math.inf if hi is None else float(hi))


def cmd_convergence(ctx):
    cfg = ctx.cfg
    cc = cfg.convergence
    scenario = cfg.scenario()
    report = conv.refinement_study(scenario, cc["resolutions"], tuple(cc["metrics"]),
                                   cc["t_eval"], float(cc["delta"]))
    t = report.t_eval
    rows = []
    for name, errs in report.errors.items():
        for N, e in zip(report.resolutions, errs):
            if math.isfinite(e):
                rows.append(mon.MonitorRow(t, f"err_{name}_N{N}", e, math.inf))
    for name, order in report.orders.items():
        lo, hi = _band(cc["solver_band"] if name == "solver" else cc["residual_band"])
        gap = max(lo - order, order - hi) if math.isfinite(order) else math.inf
        rows.append(mon.MonitorRow(t, f"order_gap_{name}", gap, 0.0))
        ctx.say(f"{name}: fitted order {order:.3f} (band [{lo}, {hi}])")
    code = EXIT_OK if all(r.passed for r in rows) else EXIT_VIOLATION
    if code != EXIT_OK:
        bad = [r.monitor[len("order_gap_"):] for r in rows if not r.passed]
        print(f"convergence order outside band for: {', '.join(bad)}", file=sys.stderr)
    return ctx.finish("convergence", rows, code,
                      {"orders": report.orders, "pairwise": report.pairwise,
                       "errors": report.errors, "t_eval": t})


def render_svg(rows):
    """SVG bytes with one value-vs-t panel per monitor and its threshold line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(dict.fromkeys(r.monitor for r in rows))
    with matplotlib.rc_context({"svg.hashsalt": "harnacklab", "svg.fonttype": "path"}):
        fig, axes = plt.subplots(len(names), 1, figsize=(6.0, 2.2 * len(names)), squeeze=False)
        for ax, name in zip(axes[:, 0], names):
            sel = sorted((r for r in rows if r.monitor == name), key=lambda r: r.t)
            t = [r.t for r in sel]
            v = [r.value for r in sel]
            (line,) = ax.plot(t, v, marker="o" if len(sel) == 1 else None, color="tab:blue",
                              label="value")
            line.set_gid(f"monitor-{name}")
            thr = [r.threshold for r in sel]
            if all(math.isfinite(x) for x in thr):
                (tl,) = ax.plot(t, thr, linestyle="--", color="tab:red",
                                marker="_" if len(sel) == 1 else None, label="threshold")
                tl.set_gid(f"threshold-{name}")
            ax.set_title(name, fontsize=9)
            ax.set_xlabel("t")
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def cmd_plot(csv_path, svg_path, quiet=False):
    rows = read_csv(csv_path)
    _atomic_write(svg_path, render_svg(rows))
    if not quiet:
        print(f"plot: {len(set(r.monitor for r in rows))} monitors -> {svg_path}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "verify-identities": cmd_verify_identities,
    "scan-conditions": cmd_scan_conditions,
    "convergence": cmd_convergence,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="harnacklab",
        description="Numerical checks of differential Harnack estimates along geometric flows.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="YAML run configuration")
        p.add_argument("--out-dir", default=".", help="directory for CSV, SVG and report files")
        p.add_argument("--seed", type=int, default=None, help="override checks.seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    helps = {
        "run": "integrate and monitor the configured Harnack inequalities",
        "verify-identities": "residuals of the evolution identities on the configured trajectory",
        "scan-conditions": "scan the curvature hypotheses over sampled vector fields",
        "convergence": "grid-refinement study with fitted orders",
    }
    for name, text in helps.items():
        common(sub.add_parser(name, help=text))
    plot = sub.add_parser("plot", help="render a monitor CSV as SVG")
    common(plot, config_required=False)
    plot.add_argument("csv", nargs="?", help="input CSV (default: the configured output CSV)")
    plot.add_argument("svg", nargs="?", help="output SVG (default: the configured output SVG)")
    return parser


def _plot_paths(args):
    csv_path, svg_path = args.csv, args.svg
    if csv_path is None or svg_path is None:
        if args.config is not None:
            output = load_config(args.config).output
            names = output["csv"], output["svg"]
        else:
            names = "monitors.csv", "monitors.svg"
        csv_path = csv_path or Path(args.out_dir) / names[0]
        svg_path = svg_path or Path(args.out_dir) / names[1]
    return csv_path, svg_path


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            return cmd_plot(*_plot_paths(args), quiet=args.quiet)
        cfg = load_config(args.config, seed=args.seed)
        return COMMANDS[args.command](_Context(args, cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HypothesisViolation as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc!r}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
