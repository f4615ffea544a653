"""Command-line harness.

    qbsk <moments|converge|bounds|stat|bivariate> <config.json> [overrides]

Exit status: 0 success, 1 a checked property was violated, 2 config error.
Rows go to ``--out`` (or the config's ``out``) or standard output, as CSV
with a header row or as a JSON array of objects.  Reals are written with 12
significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import config as C
from .bivariate import biv_apply, biv_bound_table, biv_moment, biv_sup_error, BivariateParams
from .config import ConfigError
from .functions import BivariateFunction, DomainError, monomial
from .moduli import ABS_FLOOR, BOUND_SLACK, THEOREMS_1D, T3_4_X_MIN, bound_table, calibrate_C
from .operators import OperatorParams, apply, moment_report
from .summability import cesaro, sequence_conditions, stat_convergence_report

__all__ = ["main", "run_moments", "run_converge", "run_bounds", "run_stat", "run_bivariate",
           "format_rows", "COLUMNS"]

PARAM_COLS = ["n", "l", "alpha", "beta", "q"]
BIV_COLS = ["n1", "l1", "alpha1", "beta1", "q1", "n2", "l2", "alpha2", "beta2", "q2"]
COLUMNS = {
    "moments": ["case"] + PARAM_COLS + ["order", "x", "closed_form_printed", "closed_form_corrected",
                                        "oracle", "abs_diff_corrected", "abs_diff_printed", "battery_seed"],
    "converge": ["function", "n", "q_n", "sup_error"],
    "bounds": ["theorem", "function", "case"] + PARAM_COLS + BIV_COLS[5:]
              + ["x", "y", "lhs", "rhs", "margin", "ok", "C"],
    "stat": ["e_index", "eps", "n_max", "exceedance_weight"],
    "bivariate_moments": ["case"] + BIV_COLS + ["i", "j", "x", "y", "closed_form", "oracle", "abs_diff",
                                                "battery_seed"],
    "bivariate_converge": ["function", "n", "q_n", "sup_error"],
}


class RunResult:
    def __init__(self, columns: Sequence[str], rows: List[dict], status: int = 0, notes: Sequence[str] = ()):
        self.columns = list(columns)
        self.rows = rows
        self.status = status
        self.notes = list(notes)


def _workers() -> int:
    raw = os.environ.get("QBSK_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError("QBSK_THREADS", f"expected an integer, got {raw!r}") from None


def _fan_out(func: Callable, cells: Sequence) -> list:
    """``[func(c) for c in cells]``, possibly on worker threads; order preserved."""
    workers = min(_workers(), max(1, len(cells)))
    if workers == 1:
        return [func(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, cells))


def _params_row(p: OperatorParams) -> dict:
    return {"n": p.n, "l": p.l, "alpha": p.alpha, "beta": p.beta, "q": p.q}


def _biv_row(bp: BivariateParams) -> dict:
    a, b = bp.px, bp.py
    return {"n1": a.n, "l1": a.l, "alpha1": a.alpha, "beta1": a.beta, "q1": a.q,
            "n2": b.n, "l2": b.l, "alpha2": b.alpha, "beta2": b.beta, "q2": b.q}


# commands -------------------------------------------------------------------

def run_moments(cfg: dict) -> RunResult:
    cases = C.operator_cases(cfg)
    xs = C.x_grid(cfg, 17)
    orders = C.ints(cfg, "orders", [0, 1, 2], 0)
    for i, o in enumerate(orders):
        if o > 2:
            raise ConfigError(f"orders[{i}]", "orders are 0, 1 or 2")
    tol = C._real(cfg.get("tolerance", 1e-8), "tolerance", positive=True)
    trunc = C.truncation(cfg)

    def cell(item):
        idx, (p, seed) = item
        out = []
        for r in moment_report(p, xs, orders, trunc):
            out.append({"case": idx, **_params_row(p), "order": r.order, "x": r.x,
                        "closed_form_printed": r.closed_form_printed,
                        "closed_form_corrected": r.closed_form_corrected, "oracle": r.oracle,
                        "abs_diff_corrected": r.abs_diff_corrected, "abs_diff_printed": r.abs_diff_printed,
                        "battery_seed": seed})
        return out

    rows = [r for chunk in _fan_out(cell, list(enumerate(cases))) for r in chunk]
    bad = [r for r in rows if not r["abs_diff_corrected"] <= tol]
    notes = []
    alpha_rows = [r for r in rows if r["order"] == 1 and r["alpha"] > 0]
    if alpha_rows:
        worse = sum(r["abs_diff_printed"] > r["abs_diff_corrected"] for r in alpha_rows)
        notes.append(f"order-1 rows with alpha > 0: printed variant worse in {worse} of {len(alpha_rows)}")
    if bad:
        notes.append(f"{len(bad)} rows exceed tolerance {tol:g}")
    return RunResult(COLUMNS["moments"], rows, 1 if bad else 0, notes)


def _n_list(cfg: dict) -> List[int]:
    rows = C.templates(cfg)
    ns = sorted({r["n"] for r in rows}) if len(rows) > 1 else [rows[0]["n"]]
    if len({(r.get("l", 0), r.get("alpha", 0.0), r.get("beta", 0.0)) for r in rows}) > 1:
        raise ConfigError("params", "converge runs take one (l, alpha, beta) with a list of n")
    return ns


def _q_for(cfg: dict, qseq, path: str = "params"):
    if qseq is not None:
        return qseq
    q = cfg.get(path, {}).get("q") if isinstance(cfg.get(path), dict) else None
    if q is None:
        raise ConfigError("q_sequence", "required unless params.q is fixed")
    if isinstance(q, list):
        raise ConfigError(f"{path}.q", "give a single fixed q or a q_sequence")
    return lambda n: C._real(q, f"{path}.q")


def _converge_checks(cfg: dict, rows: List[dict]) -> List[str]:
    spec = cfg.get("assert", {})
    if not isinstance(spec, dict):
        raise ConfigError("assert", "expected an object")
    C._known_keys(spec, ("final_over_initial_below", "nonincreasing_slack", "min_error"), "assert")
    failures = []
    by_f = {}
    for r in rows:
        by_f.setdefault(r["function"], []).append(r["sup_error"])
    for name, errs in by_f.items():
        if "final_over_initial_below" in spec:
            lim = C._real(spec["final_over_initial_below"], "assert.final_over_initial_below")
            # a column already at round-off level has nothing left to shrink
            if errs[0] > ABS_FLOOR and not errs[-1] < lim * errs[0]:
                failures.append(f"{name}: final error {errs[-1]:.6g} not below {lim:g} x initial {errs[0]:.6g}")
        if "nonincreasing_slack" in spec:
            slack = C._real(spec["nonincreasing_slack"], "assert.nonincreasing_slack", nonneg=True)
            if any(b > a + slack for a, b in zip(errs, errs[1:])):
                failures.append(f"{name}: error column increases by more than {slack:g}")
        if "min_error" in spec:
            lim = C._real(spec["min_error"], "assert.min_error")
            if min(errs) < lim:
                failures.append(f"{name}: error {min(errs):.6g} below {lim:g}")
    return failures


def run_converge(cfg: dict) -> RunResult:
    ns = _n_list(cfg)
    tpl = C.templates(cfg)[0]
    qs = _q_for(cfg, C.q_schedule(cfg))
    funcs = C.functions(cfg, bivariate=False)
    grid = C.x_grid(cfg, 257)
    trunc = C.truncation(cfg)
    cells = []
    for f in funcs:
        for n in ns:
            cells.append((f, C._make_params({**tpl, "n": n, "q": qs(n)}, "params")))

    def cell(item):
        f, p = item
        g = f.on(f.domain[0], p.upper) if math.isinf(f.domain[1]) else f
        return {"function": f.label, "n": p.n, "q_n": p.q, "sup_error": _grid_sup_error(g, p, grid, trunc)}

    rows = _fan_out(cell, cells)
    failures = _converge_checks(cfg, rows)
    return RunResult(COLUMNS["converge"], rows, 1 if failures else 0, failures)


def _grid_sup_error(f, p, xs, trunc) -> float:
    return float(np.max(np.abs(apply(f, p, xs, trunc) - f(xs))))


def run_bounds(cfg: dict) -> RunResult:
    ids = C.theorem_ids(cfg)
    uni = [t for t in ids if t in THEOREMS_1D]
    biv = [t for t in ids if t not in THEOREMS_1D]
    trunc = C.truncation(cfg)
    scale = 1.0
    if "test_mode" in cfg:
        tm = cfg["test_mode"]
        if not isinstance(tm, dict):
            raise ConfigError("test_mode", "expected an object")
        C._known_keys(tm, ("rhs_scale",), "test_mode")
        scale = C._real(tm.get("rhs_scale", 1.0), "test_mode.rhs_scale", positive=True)
    xi_list = C.reals(cfg, "xi", [1.0], positive=True)
    s_list = C.reals(cfg, "s", [1.0], positive=True)
    for key, vals in (("xi", xi_list), ("s", s_list)):
        for i, v in enumerate(vals):
            if v > 1:
                raise ConfigError(f"{key}[{i}]", "must lie in (0, 1]")
    x_min = C._real(cfg.get("x_min", T3_4_X_MIN), "x_min", positive=True)
    notes: List[str] = []
    rows: List[dict] = []

    if uni:
        cases = C.operator_cases(cfg)
        funcs = C.functions(cfg, bivariate=False)
        xs = C.x_grid(cfg, 33)
        gp = C.grid_policy(cfg, len(xs))
        c_value = None
        if "T3_2" in uni:
            if "C" in cfg:
                c_value = C._real(cfg["C"], "C", nonneg=True)
            else:
                try:
                    c_value = calibrate_C(funcs, [p for p, _ in cases], gp, trunc, xs)
                except ArithmeticError as exc:
                    raise ConfigError("functions", f"T3_2 calibration failed: {exc}") from None
                notes.append(f"T3_2 calibrated C = {c_value:.12g}")
        cells = []
        for t in uni:
            exps = xi_list if t == "T3_3" else s_list if t == "T3_4" else [None]
            for f in funcs:
                for idx, (p, _) in enumerate(cases):
                    for e in exps:
                        cells.append((t, f, idx, p, e))

        def cell(item):
            t, f, idx, p, e = item
            pts = xs[xs >= x_min] if t == "T3_4" else xs
            kw = {"xi": e} if t == "T3_3" else {"s": e} if t == "T3_4" else {}
            try:
                reps = bound_table(t, f, p, pts, c_value, gp, trunc, **kw)
            except DomainError as exc:
                raise ConfigError("functions", f"{f.label}: {exc}") from None
            return [(t, f, idx, p, r) for r in reps]

        for chunk in _fan_out(cell, cells):
            for t, f, idx, p, r in chunk:
                rhs = r.rhs * scale
                rows.append({"theorem": t, "function": f.label, "case": idx, **_params_row(p),
                             "x": r.x, "y": None, "lhs": r.lhs, "rhs": rhs, "margin": rhs - r.lhs,
                             "ok": None, "C": c_value if t == "T3_2" else None})

    if biv:
        cases2 = C.bivariate_cases(cfg)
        # a mixed run keeps its univariate settings under functions/grid
        if uni:
            funcs2 = C.functions(cfg, bivariate=True, key="bivariate_functions", default="bivariate")
            g1 = C.x_grid(cfg, 9, "biv_grid")
        else:
            funcs2 = C.functions(cfg, bivariate=True)
            g1 = C.x_grid(cfg, 9)
        gp2 = C.biv_grid_policy(cfg, len(g1))
        pts = [(x, y) for x in g1 for y in g1]
        cells2 = []
        for t in biv:
            for f in funcs2:
                if t == "T6_2" and not f.smooth:
                    notes.append(f"T6_2 skipped for non-smooth {f.label}")
                    continue
                for idx, (bp, _) in enumerate(cases2):
                    cells2.append((t, f, idx, bp))

        def cell2(item):
            t, f, idx, bp = item
            s1, s2 = (s_list[0], s_list[0])
            reps = biv_bound_table(t, f, bp, pts, gp2, trunc, s1=s1, s2=s2)
            return [(t, f, idx, bp, r) for r in reps]

        for chunk in _fan_out(cell2, cells2):
            for t, f, idx, bp, r in chunk:
                rhs = r.rhs * scale
                a, b = bp.px, bp.py
                rows.append({"theorem": t, "function": f.label, "case": idx, **_params_row(a),
                             "n2": b.n, "l2": b.l, "alpha2": b.alpha, "beta2": b.beta, "q2": b.q,
                             "x": r.x, "y": r.y, "lhs": r.lhs, "rhs": rhs, "margin": rhs - r.lhs,
                             "ok": None, "C": None})

    for r in rows:
        r["ok"] = bool(r["margin"] >= -BOUND_SLACK * abs(r["rhs"]) - ABS_FLOOR)
    bad = sum(not r["ok"] for r in rows)
    if bad:
        notes.append(f"{bad} bound violations")
    return RunResult(COLUMNS["bounds"], rows, 1 if bad else 0, notes)


def run_stat(cfg: dict) -> RunResult:
    matrix = cfg.get("matrix", "cesaro")
    if matrix != "cesaro":
        raise ConfigError("matrix", f"only 'cesaro' is supported, got {matrix!r}")
    qseq = C.q_schedule(cfg)
    if qseq is None:
        raise ConfigError("q_sequence", "required")
    tpl = cfg.get("params", {})
    if not isinstance(tpl, dict):
        raise ConfigError("params", "expected an object")
    C._known_keys(tpl, ("l", "alpha", "beta"), "params")
    C._make_params({"n": 1, **tpl, "q": 0.5}, "params")
    e_list = C.ints(cfg, "e_index", [0, 1, 2], 0)
    for i, e in enumerate(e_list):
        if e > 2:
            raise ConfigError(f"e_index[{i}]", "must be 0, 1 or 2")
    eps_list = C.reals(cfg, "eps", [0.05], positive=True)
    n_max = C.ints(cfg, "n_max", [500], 16)
    grid_n = C._int(cfg.get("grid", 257), "grid", 2)
    trunc = C.truncation(cfg)
    A = cesaro()
    reports = _fan_out(lambda e: stat_convergence_report(A, qseq, tpl, e, eps_list, n_max, grid_n, trunc),
                       e_list)
    rows = [{"e_index": r.e_index, "eps": r.eps, "n_max": r.n_max, "exceedance_weight": r.weight}
            for rep in reports for r in rep.rows]
    notes = []
    failures = []
    spec = cfg.get("assert", {})
    if not isinstance(spec, dict):
        raise ConfigError("assert", "expected an object")
    C._known_keys(spec, ("weight_below", "nonincreasing_slack"), "assert")
    if "weight_below" in spec:
        lim = C._real(spec["weight_below"], "assert.weight_below")
        top = max(n_max)
        for r in rows:
            if r["n_max"] == top and not r["exceedance_weight"] < lim:
                failures.append(f"e{r['e_index']} eps={r['eps']:g}: weight {r['exceedance_weight']:.6g} >= {lim:g}")
    if "nonincreasing_slack" in spec:
        slack = C._real(spec["nonincreasing_slack"], "assert.nonincreasing_slack", nonneg=True)
        for e in e_list:
            for eps in eps_list:
                seq = [r["exceedance_weight"] for r in rows if r["e_index"] == e and r["eps"] == eps]
                if any(b > a + slack for a, b in zip(seq, seq[1:])):
                    failures.append(f"e{e} eps={eps:g}: weights increase along n_max")
    cond = sequence_conditions(qseq)
    notes.append("q-sequence conditions: q_n -> 1 {}, q_n^n -> limit {}, 1/[n] -> 0 {}".format(
        cond["q_to_one"], cond["power_limit"], cond["recip_to_zero"]))
    return RunResult(COLUMNS["stat"], rows, 1 if failures else 0, notes + failures)


def run_bivariate(cfg: dict) -> RunResult:
    mode = cfg.get("mode", "moments")
    trunc = C.truncation(cfg)
    if mode == "moments":
        cases = C.bivariate_cases(cfg)
        g = C.x_grid(cfg, 5)
        pairs = [(i, j) for i in range(3) for j in range(3) if i + j <= 2]
        tol = C._real(cfg.get("tolerance", 1e-8), "tolerance", positive=True)

        def cell(item):
            idx, (bp, seed) = item
            out = []
            X, Y = np.meshgrid(g, g, indexing="ij")
            for i, j in pairs:
                f = BivariateFunction.product(monomial(i, (0.0, bp.px.upper)), monomial(j, (0.0, bp.py.upper)))
                oracle = biv_apply(f, bp, X, Y, trunc)
                closed = biv_moment(bp, X, Y, i, j)
                for x, y, o, c in zip(X.ravel(), Y.ravel(), np.ravel(oracle), np.ravel(closed)):
                    out.append({"case": idx, **_biv_row(bp), "i": i, "j": j, "x": float(x), "y": float(y),
                                "closed_form": float(c), "oracle": float(o), "abs_diff": abs(float(c) - float(o)),
                                "battery_seed": seed})
            return out

        rows = [r for chunk in _fan_out(cell, list(enumerate(cases))) for r in chunk]
        bad = [r for r in rows if not r["abs_diff"] <= tol]
        return RunResult(COLUMNS["bivariate_moments"], rows, 1 if bad else 0,
                         [f"{len(bad)} rows exceed tolerance {tol:g}"] if bad else [])
    if mode == "converge":
        qseq = C.q_schedule(cfg)
        if qseq is None:
            raise ConfigError("q_sequence", "required")
        tx = C.templates(cfg, "px", need_n=False)
        ty = C.templates(cfg, "py", need_n=False)
        if len(tx) != 1 or len(ty) != 1:
            raise ConfigError("px", "converge mode takes one px and one py template")
        ns = C.ints(cfg, "n", None, 1)
        funcs = C.functions(cfg, bivariate=True)
        grid_n = C._int(cfg.get("grid", 17), "grid", 2)
        cells = []
        for f in funcs:
            for n in ns:
                q = qseq(n)
                bp = BivariateParams(C._make_params({**tx[0], "n": n, "q": q}, "px"),
                                     C._make_params({**ty[0], "n": n, "q": q}, "py"))
                cells.append((f, n, q, bp))

        def cell(item):
            f, n, q, bp = item
            try:
                err = biv_sup_error(f, bp, grid_n, trunc)
            except ValueError as exc:
                raise ConfigError("functions", f"{f.label}: {exc}") from None
            return {"function": f.label, "n": n, "q_n": q, "sup_error": err}

        rows = _fan_out(cell, cells)
        failures = _converge_checks(cfg, rows)
        return RunResult(COLUMNS["bivariate_converge"], rows, 1 if failures else 0, failures)
    raise ConfigError("mode", f"expected 'moments' or 'converge', got {mode!r}")


COMMANDS = {
    "moments": run_moments,
    "converge": run_converge,
    "bounds": run_bounds,
    "stat": run_stat,
    "bivariate": run_bivariate,
}


# output ---------------------------------------------------------------------

def _cell_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.12g}")
    return v


def format_rows(result: RunResult, fmt: str) -> str:
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in result.columns} for r in result.rows]
        return json.dumps(data, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for r in result.rows:
        writer.writerow([_cell_text(r.get(c)) for c in result.columns])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qbsk", description="q-Bernstein-Schurer-Kantorovich verification harness")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="path to a JSON run config")
    ap.add_argument("--n", type=int)
    ap.add_argument("--l", type=int)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--beta", type=float)
    ap.add_argument("--q", type=float)
    ap.add_argument("--f", help="function spec, e.g. 'poly:0,1' or 'abs:0.5'")
    ap.add_argument("--grid", type=int, help="number of evaluation points in [0, 1]")
    ap.add_argument("--tol", type=float, help="q-integral truncation tolerance")
    ap.add_argument("--out", help="output path (default: standard output)")
    ap.add_argument("--format", choices=("csv", "json"))
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = C.load_config(args.config)
        C.check_top_keys(cfg, args.command)
        cfg = C.apply_overrides(cfg, vars(args))
        fmt = C.output_format(cfg)
        out = cfg.get("out")
        if out is not None and not isinstance(out, str):
            raise ConfigError("out", "expected a path string")
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    text = format_rows(result, fmt)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for note in result.notes:
        print(note, file=sys.stderr)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
