"""Command line driver.

    hmcflow run CONFIG [--out DIR] [--svg]
    hmcflow refine CONFIG [--levels N] [--out DIR]
    hmcflow compare OUTER INNER [--out DIR]
    hmcflow oracle {flow,string} --r0 R0 [--r1 R1] [--d D] [--t-end T] [--out FILE]
    hmcflow sweep SWEEPFILE [--out DIR]

Exit codes: 0 success (including physical terminations such as collapse),
2 configuration error, 3 loss of hyperbolicity (or of the time-like
condition for strings), 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import oracles
from .config import RunSpec, parse_config
from .diagnostics import (CSV_COLUMNS, RESIDUAL_FIELDS, containment,
                          containment_violations, finalize_residuals)
from .errors import HMCFError, InvalidConfig, NotApplicable, TooFewRecords
from .geometry import deriv_theta, radius_of_curvature
from .solver import (FlowConfig, Termination, estimate_collapse_time, evolve,
                     evolve_lockstep)
from .string_solver import StringTermination, string_evolve

log = logging.getLogger("hmcflow")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPERBOLICITY = 3
EXIT_NUMERICAL = 4

STRING_COLUMNS = ("t", "mean_radius", "diameter", "gauge_residual",
                  "timelike_margin", "min_speed_u")


def exit_code(termination) -> int:
    value = getattr(termination, "value", termination)
    if value in (Termination.HYPERBOLICITY_LOST.value,
                 StringTermination.TIMELIKE_LOST.value,
                 StringTermination.DEGENERATE.value):
        return EXIT_HYPERBOLICITY
    if value == Termination.NUMERICAL_FAILURE.value:
        return EXIT_NUMERICAL
    return EXIT_OK


def fmt(x) -> str:
    """17 significant digits, locale independent; None -> empty field."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


# ---------------------------------------------------------------- run

def _snapshot_indices(count, every):
    if every <= 0:
        idx = [0]
    else:
        idx = list(range(0, count, every))
    if idx[-1] != count - 1:
        idx.append(count - 1)
    return idx


def _flow_snapshot_rows(state):
    s, p = state.s, state.p
    th = state.grid.nodes
    s_th = deriv_theta(s, 1)
    v = radius_of_curvature(s)
    x = s * np.cos(th) - s_th * np.sin(th)
    y = s * np.sin(th) + s_th * np.cos(th)
    with np.errstate(divide="ignore"):
        k = np.where(v > 0.0, 1.0 / v, np.inf)
    return zip(th, s, p, x, y, k)


def _svg(path: Path, curves):
    """Closed polylines, one per snapshot, in a common frame."""
    pts = np.concatenate([c for c in curves])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    size, pad = 480.0, 10.0
    scale = (size - 2 * pad) / span
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" '
             f'height="{size:g}" viewBox="0 0 {size:g} {size:g}">']
    for i, c in enumerate(curves):
        X = pad + (c[:, 0] - lo[0]) * scale
        Y = size - pad - (c[:, 1] - lo[1]) * scale
        pts_txt = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(X, Y))
        shade = int(200 * (1 - i / max(len(curves) - 1, 1)))
        lines.append(f'<polygon points="{pts_txt}" fill="none" '
                     f'stroke="rgb({shade},{shade},255)" stroke-width="1"/>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def execute(spec: RunSpec, out: Path, svg: bool = False) -> dict:
    """Run one parsed config and write its files into ``out``."""
    t0 = time.perf_counter()
    out.mkdir(parents=True, exist_ok=True)
    if spec.kind == "string":
        summary = _execute_string(spec, out, svg)
    else:
        summary = _execute_flow(spec, out, svg)
    summary["config_digest"] = spec.digest
    summary["wall_time"] = time.perf_counter() - t0
    write_json(out / "summary.json", summary)
    return summary


def _execute_flow(spec, out, svg):
    traj = evolve(spec.config)
    try:
        traj = finalize_residuals(traj)
    except TooFewRecords as exc:
        log.warning("residuals not computed: %s", exc)
    write_csv(out / "diagnostics.csv", CSV_COLUMNS,
              (r.as_row() for r in traj.records))
    idx = _snapshot_indices(len(traj.snapshots), spec.output["snapshot_every"])
    curves = []
    for j, i in enumerate(idx):
        st = traj.snapshots[i]
        rows = list(_flow_snapshot_rows(st))
        write_csv(out / f"snapshot_{j:04d}.csv",
                  ("theta", "S", "S_tau", "x", "y", "k"), rows)
        curves.append(np.array([(r[3], r[4]) for r in rows]))
    if svg:
        _svg(out / "curves.svg", curves)
    estimate = None
    try:
        est = estimate_collapse_time(traj)
        estimate = {"value": est.time, "uncertainty": est.uncertainty}
    except NotApplicable:
        pass
    residuals = {}
    for name in RESIDUAL_FIELDS:
        vals = [getattr(r, name) for r in traj.records
                if getattr(r, name) is not None]
        residuals[name] = _finite_or_none(max(vals)) if vals else None
    return {
        "kind": "flow",
        "termination": traj.termination.value,
        "t_final": traj.t_final,
        "steps": traj.steps,
        "records": len(traj.records),
        "message": traj.message,
        "collapse_estimate": estimate,
        "max_identity_residuals": residuals,
    }


def _execute_string(spec, out, svg):
    traj = string_evolve(spec.config)
    write_csv(out / "diagnostics.csv", STRING_COLUMNS,
              ([getattr(r, c) for c in STRING_COLUMNS] for r in traj.records))
    idx = _snapshot_indices(len(traj.snapshots), spec.output["snapshot_every"])
    curves = []
    for j, i in enumerate(idx):
        st = traj.snapshots[i]
        u = st.spacing * np.arange(st.m)
        write_csv(out / f"snapshot_{j:04d}.csv", ("u", "x", "y", "vx", "vy"),
                  zip(u, st.X[:, 0], st.X[:, 1], st.V[:, 0], st.V[:, 1]))
        curves.append(st.X)
    if svg:
        _svg(out / "curves.svg", curves)
    return {
        "kind": "string",
        "termination": traj.termination.value,
        "t_final": traj.t_final,
        "steps": traj.steps,
        "records": len(traj.records),
        "message": traj.message,
        "collapse_estimate": None,
        "max_identity_residuals": {
            "gauge_residual": max(r.gauge_residual for r in traj.records),
        },
    }


def cmd_run(args) -> int:
    spec = parse_config(args.config)
    out = Path(args.out or spec.output["dir"])
    summary = execute(spec, out, args.svg)
    print(f"{summary['termination']} at t={summary['t_final']:.10g} -> {out}")
    est = summary.get("collapse_estimate")
    if est:
        print(f"collapse estimate {est['value']:.10g} "
              f"+- {est['uncertainty']:.2g}")
    return exit_code(summary["termination"])


# ---------------------------------------------------------------- refine

def _with(cfg: FlowConfig, **kw) -> FlowConfig:
    fields = dict(cfg.__dict__)
    fields.update(kw)
    return FlowConfig(**fields)


def observed_orders(errors):
    out = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        if a is None or b is None or a <= 0.0 or b <= 0.0:
            out.append(None)
        else:
            out.append(math.log2(a / b))
    return out


def richardson(values):
    """Extrapolate the last three values of a sequence refined by 2.

    Returns (limit, order). When the differences do not contract
    monotonically the finest value is returned with order None.
    """
    if len(values) < 3 or any(v is None for v in values[-3:]):
        return None, None
    a, b, c = values[-3:]
    d1, d2 = b - a, c - b
    if d2 == 0.0:
        return c, None
    ratio = d1 / d2
    if not ratio > 1.0:
        return c, None
    p = math.log2(ratio)
    return c + d2 / (ratio - 1.0), p


def refine_table(cfg: FlowConfig, levels: int):
    """Rerun with n and record_every doubled per level.

    Circle runs are compared with the radial oracle at t_final (or by
    collapse time if they collapse); other runs with the finest level,
    sampled on the coarse grid.
    """
    if levels < 3:
        raise InvalidConfig(f"refine needs levels >= 3, got {levels}")
    trajs = []
    for i in range(levels):
        c = _with(cfg, n=cfg.n * 2 ** i, record_every=cfg.record_every * 2 ** i)
        trajs.append(evolve(c))
    ests = []
    for tr in trajs:
        try:
            ests.append(estimate_collapse_time(tr).time)
        except NotApplicable:
            ests.append(None)
    circle = cfg.shape == "circle" and cfg.velocity == "constant"
    errors, reference = [], None
    reached = all(tr.termination == Termination.REACHED_T_END for tr in trajs)
    if circle:
        r0 = float(cfg.shape_params["r0"])
        r1 = -float(cfg.velocity_params.get("f0", 0.0))
        if reached:
            sol = oracles.circle_flow(r0, r1, cfg.d, t_end=cfg.t_end)
            reference = float(sol.R[-1])
            errors = [float(np.max(np.abs(tr.snapshots[-1].s - reference)))
                      for tr in trajs]
        else:
            reference = oracles.circle_flow(r0, r1, cfg.d).collapse_time
            errors = [None if e is None else abs(e - reference) for e in ests]
    elif reached:
        fine = trajs[-1].snapshots[-1].s
        for i, tr in enumerate(trajs[:-1]):
            stride = 2 ** (levels - 1 - i)
            errors.append(float(np.max(np.abs(tr.snapshots[-1].s
                                              - fine[::stride]))))
        errors.append(None)
    else:
        errors = [None] * levels
    orders = observed_orders(errors)
    rows = []
    for i, tr in enumerate(trajs):
        rows.append({
            "level": i, "n": tr.config.n, "record_every": tr.config.record_every,
            "steps": tr.steps, "termination": tr.termination.value,
            "t_final": tr.t_final, "error": errors[i], "order": orders[i],
            "collapse_estimate": ests[i],
        })
    limit, p = richardson(ests) if all(e is not None for e in ests) else (None, None)
    return {
        "reference": reference,
        "comparison": "oracle" if circle else "finest_level",
        "levels": rows,
        "richardson_collapse": limit,
        "richardson_order": p,
    }


def cmd_refine(args) -> int:
    if args.levels < 3:
        raise InvalidConfig(f"refine needs --levels >= 3, got {args.levels}")
    spec = parse_config(args.config)
    if spec.kind != "flow":
        raise InvalidConfig("refine applies to flow configs only")
    table = refine_table(spec.config, args.levels)
    out = Path(args.out or spec.output["dir"])
    out.mkdir(parents=True, exist_ok=True)
    cols = ("level", "n", "record_every", "steps", "termination", "t_final",
            "error", "order", "collapse_estimate")
    with open(out / "refine.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in table["levels"]:
            w.writerow([row[c] if isinstance(row[c], str) else fmt(row[c])
                        for c in cols])
    table["config_digest"] = spec.digest
    write_json(out / "refine.json", table)
    for row in table["levels"]:
        err = "-" if row["error"] is None else f"{row['error']:.3e}"
        order = "-" if row["order"] is None else f"{row['order']:.2f}"
        print(f"n={row['n']:5d}  error={err:>10}  order={order}")
    if table["richardson_collapse"] is not None:
        print(f"richardson collapse time {table['richardson_collapse']:.10g}")
    worst = max((exit_code(r["termination"]) for r in table["levels"]))
    return worst


# ---------------------------------------------------------------- compare

def check_compare_preconditions(outer: FlowConfig, inner: FlowConfig):
    if outer.n != inner.n:
        raise InvalidConfig(f"compare needs the same grid, got n={outer.n} "
                            f"and n={inner.n}")
    so, si = outer.initial_state(), inner.initial_state()
    if not containment(so, si):
        gap = float(np.max(si.s - so.s))
        raise InvalidConfig(f"initial containment fails: inner support "
                            f"exceeds outer by {gap:.3e}")
    # P = -f, so f_inner >= f_outer means P_inner <= P_outer
    if np.any(si.p > so.p):
        raise InvalidConfig("compare needs f_inner >= f_outer at every node")


def compare_runs(outer: FlowConfig, inner: FlowConfig) -> dict:
    check_compare_preconditions(outer, inner)
    to, ti = evolve_lockstep(outer, inner)
    bad = containment_violations(to, ti)
    return {
        "outer_termination": to.termination.value,
        "inner_termination": ti.termination.value,
        "outer_t_final": to.t_final,
        "inner_t_final": ti.t_final,
        "common_records": len({s.t for s in to.snapshots}
                              & {s.t for s in ti.snapshots}),
        "violations": len(bad),
        "first_violation": ({"t": bad[0][0], "magnitude": bad[0][1]}
                            if bad else None),
        "inner_not_later": ti.t_final <= to.t_final,
    }


def cmd_compare(args) -> int:
    so, si = parse_config(args.outer), parse_config(args.inner)
    if so.kind != "flow" or si.kind != "flow":
        raise InvalidConfig("compare applies to flow configs only")
    check_compare_preconditions(so.config, si.config)
    report = compare_runs(so.config, si.config)
    report["outer_digest"], report["inner_digest"] = so.digest, si.digest
    out = Path(args.out or "compare_out")
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "compare.json", report)
    print(f"violations: {report['violations']}; inner ends at "
          f"{report['inner_t_final']:.10g}, outer at "
          f"{report['outer_t_final']:.10g}")
    return max(exit_code(report["outer_termination"]),
               exit_code(report["inner_termination"]))


# ---------------------------------------------------------------- oracle

def cmd_oracle(args) -> int:
    if not args.r0 > 0.0:
        raise InvalidConfig("--r0 must be > 0")
    try:
        if args.kind == "flow":
            if args.d > 0.0:
                raise InvalidConfig("--d must be <= 0")
            sol = oracles.circle_flow(args.r0, args.r1, args.d, args.t_end)
        else:
            if args.d != 0.0:
                raise InvalidConfig("--d does not apply to the string oracle")
            sol = oracles.string_circle(args.r0, args.r1, args.t_end)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    rows = zip(sol.times, sol.R, sol.Rdot)
    if args.out:
        write_csv(Path(args.out), ("t", "R", "Rdot"), rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("t", "R", "Rdot"))
        for row in rows:
            w.writerow([fmt(v) for v in row])
    if sol.collapse_time is not None:
        print(f"# collapse_time {fmt(sol.collapse_time)}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def read_sweep(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"{path}: cannot read sweep file ({exc})") from None
    entries = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            p = Path(line)
            entries.append(p if p.is_absolute() else path.parent / p)
    if not entries:
        raise InvalidConfig(f"{path}: sweep lists no configs")
    return entries


def worker_count(jobs: int) -> int:
    cap = os.environ.get("HMCF_WORKERS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = int(cap)
        except ValueError:
            raise InvalidConfig(f"HMCF_WORKERS={cap!r} is not an integer") from None
        if limit < 1:
            raise InvalidConfig("HMCF_WORKERS must be >= 1")
    return max(1, min(limit, jobs))


def _sweep_job(spec: RunSpec, out: str):
    summary = execute(spec, Path(out))
    return summary


def cmd_sweep(args) -> int:
    path = Path(args.sweep)
    specs = [parse_config(p) for p in read_sweep(path)]
    workers = worker_count(len(specs))
    root = Path(args.out or "sweep_out")
    root.mkdir(parents=True, exist_ok=True)
    dirs = [str(root / s.digest[:16]) for s in specs]
    if workers == 1:
        results = [_sweep_job(s, d) for s, d in zip(specs, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, specs, dirs))
    merged = []
    for spec, d, res in zip(specs, dirs, results):
        entry = dict(res)
        entry["config"] = spec.source
        entry["dir"] = Path(d).name
        merged.append(entry)
    write_json(root / "sweep_summary.json", {"workers": workers,
                                             "runs": merged})
    print(f"{len(merged)} runs with {workers} workers -> {root}")
    return max(exit_code(r["termination"]) for r in merged)


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hmcflow", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve one config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--svg", action="store_true", help="also write curves.svg")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("refine", help="convergence table over doubled grids")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("compare", help="containment check of two runs")
    p.add_argument("outer")
    p.add_argument("inner")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="dump a radial reference solution")
    p.add_argument("kind", choices=("flow", "string"))
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--r1", type=float, default=0.0)
    p.add_argument("--d", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="run many configs in parallel")
    p.add_argument("sweep", help="file listing one config path per line")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed its message; usage errors are config errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HMCFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
