"""Command-line entry point.

Exit status: 0 on success, 2 when the framework ends irreducibly
infeasible, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .baseline import BaselineReport, run_baseline
from .config import ConfigError, RunConfig, parse_config, with_overrides
from .core import ContractViolation, DesignPoint, evaluate_metrics, simulate
from .framework import FrameworkResult, FrameworkStatus, run_framework
from .microgrid import closed_form_metrics
from .ranking import generate_candidates, rank_problem, tally_violations
from .relaxation import ReducedProblem, Selection
from .solver import grid_oracle, metric_extremes

log = logging.getLogger("ccdrelax")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
FIXTURES = ("microgrid4.json", "microgrid2.json")


def _num(x):
    """JSON-safe float: full precision, infinities as null."""
    x = float(x)
    return None if not math.isfinite(x) else x


def _csv_num(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _sig(x, digits=4) -> str:
    x = float(x)
    return f"{x:.{digits}g}" if math.isfinite(x) else str(x)


def _csv_text(rows, header=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _text_table(header, rows) -> str:
    cells = [list(map(str, header))] + [[c if isinstance(c, str) else _sig(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(wd) for c, wd in zip(r, widths)) for r in cells) + "\n"


def _design_dict(d: DesignPoint | None):
    if d is None:
        return None
    return {"theta": [float(v) for v in d.theta], "phi": [float(v) for v in d.phi]}


def load_config(path: str | None) -> RunConfig:
    """Read a config file; bare fixture names fall back to the packaged copies."""
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.exists() and p.name in FIXTURES and len(p.parts) == 1:
        text = resources.files("ccdrelax.data").joinpath(p.name).read_text(encoding="utf-8")
    else:
        text = p.read_text(encoding="utf-8")
    return parse_config(text)


# -- rank --------------------------------------------------------------------


def cmd_rank(cfg: RunConfig, fmt: str):
    problem = cfg.build_problem()
    ranked = rank_problem(problem, cfg.candidate_scheme(), cfg.solver.feasibility_tol)
    names = problem.metric_names
    rows = [(pos + 1, m + 1, names[m], c) for pos, (m, c) in enumerate(zip(ranked.order, ranked.counts))]
    if fmt == "json":
        return EXIT_OK, _json_text(
            {
                "candidates_evaluated": ranked.candidates_evaluated,
                "order": [m + 1 for m in ranked.order],
                "counts": [c for c in ranked.counts],
                "ranking": [{"rank": r[0], "metric": r[1], "name": r[2], "violations": r[3]} for r in rows],
            }
        )
    header = ("rank", "metric", "name", "violations")
    if fmt == "text":
        return EXIT_OK, _text_table(header, [tuple(map(str, r)) for r in rows])
    return EXIT_OK, _csv_text(rows, header)


# -- solve -------------------------------------------------------------------


def framework_payload(problem, result: FrameworkResult) -> dict:
    solved = result.status is FrameworkStatus.SOLVED
    payload = {
        "status": result.status.value,
        "relaxed_metrics": sorted(m + 1 for m in result.relaxed),
        "final_selection": result.selection.bits,
        "iterations": result.solves,
        "iteration_log": [
            {
                "selection": it.selection.bits,
                "status": it.status.value,
                "objective": None if it.objective is None else _num(it.objective),
                "evaluations": it.evaluations,
            }
            for it in result.iterations
        ],
        "ranking": {
            "order": [m + 1 for m in result.ranking.order],
            "counts": list(result.ranking.counts),
        },
        "design": _design_dict(result.design),
        "objective": _num(result.objective) if solved else None,
        "metrics": None,
    }
    if solved:
        payload["metrics"] = [
            {
                "metric": m + 1,
                "name": problem.metric_names[m],
                "value": _num(result.report.values[m]),
                "lb": _num(problem.metric_bounds[m, 0]),
                "ub": _num(problem.metric_bounds[m, 1]),
                "relaxed": m in result.relaxed,
                "slack": _num(result.slacks[m]),
                "within_bounds": bool(result.report.within_bounds[m]),
            }
            for m in range(problem.n_metrics)
        ]
        payload["trajectory"] = {
            "states": result.trajectory.states.tolist(),
            "inputs": result.trajectory.inputs.tolist(),
        }
    return payload


def cmd_solve(cfg: RunConfig, fmt: str):
    problem = cfg.build_problem()
    result = run_framework(problem, cfg.framework_config())
    code = EXIT_OK if result.status is FrameworkStatus.SOLVED else EXIT_INFEASIBLE
    payload = framework_payload(problem, result)
    if fmt == "json":
        return code, _json_text(payload)
    header = ("metric", "name", "value", "lb", "ub", "relaxed", "slack", "within_bounds")
    rows = [
        (m["metric"], m["name"], m["value"], m["lb"], m["ub"], m["relaxed"], m["slack"], m["within_bounds"])
        for m in payload["metrics"] or []
    ]
    if fmt == "text":
        lines = [
            f"status: {payload['status']}",
            f"relaxed metrics: {payload['relaxed_metrics']}",
            f"solves: {payload['iterations']}",
        ]
        for it in payload["iteration_log"]:
            lines.append(f"  z={it['selection']}  {it['status']}")
        text_rows = [
            (str(r[0]), r[1], r[2], r[3] if r[3] is not None else -math.inf,
             r[4] if r[4] is not None else math.inf, str(r[5]), r[6], str(r[7]))
            for r in rows
        ]
        body = _text_table(header, text_rows)
        return code, "\n".join(lines) + "\n" + body
    csv_rows = [
        (r[0], r[1], _csv_num(r[2]), _csv_num(-math.inf if r[3] is None else r[3]),
         _csv_num(math.inf if r[4] is None else r[4]), int(r[5]), _csv_num(r[6]), int(r[7]))
        for r in rows
    ]
    return code, _csv_text(csv_rows, header)


# -- baseline ----------------------------------------------------------------


def baseline_rows(problem, report: BaselineReport):
    m = problem.n_metrics
    header = (
        ["trial"]
        + [f"w{i + 1}" for i in range(m)]
        + [f"theta{i + 1}" for i in range(problem.n_theta)]
        + [f"phi{i + 1}" for i in range(problem.n_phi)]
        + [f"mu{i + 1}" for i in range(m)]
        + ["in_bounds_count", "status"]
    )
    rows = []
    for t in report.trials:
        if t.in_bounds is None:
            blanks = [""] * (problem.n_theta + problem.n_phi + m + 1)
            rows.append([t.index] + [_csv_num(w) for w in t.weights] + blanks + ["failed"])
            continue
        rows.append(
            [t.index]
            + [_csv_num(w) for w in t.weights]
            + [_csv_num(v) for v in t.design.as_vector()]
            + [_csv_num(v) for v in t.values]
            + [t.in_bounds, "solved"]
        )
    return header, rows


def cmd_baseline(cfg: RunConfig, fmt: str):
    problem = cfg.build_problem()
    report = run_baseline(problem, cfg.baseline.weight_levels, cfg.solver_config())
    header, rows = baseline_rows(problem, report)
    summary = {
        "trials": len(report.trials),
        "original_problem": report.original_outcome.status.value,
        "max_in_bounds": report.max_in_bounds,
        "trials_achieving_max": report.trials_achieving_max,
        "fraction_achieving_max": report.fraction_achieving_max,
        "histogram": {str(k): v for k, v in report.histogram.items()},
    }
    if fmt == "json":
        payload = dict(summary)
        payload["weight_levels"] = list(report.weight_levels)
        if report.short_circuited:
            payload["original_design"] = _design_dict(report.original_outcome.design)
        payload["rows"] = [dict(zip(header, r)) for r in rows]
        return EXIT_OK, _json_text(payload)
    if fmt == "text":
        lines = [f"{k}: {v}" for k, v in summary.items()]
        return EXIT_OK, "\n".join(lines) + "\n"
    tail = [
        ("max_in_bounds", "" if report.max_in_bounds is None else report.max_in_bounds),
        ("trials_achieving_max", report.trials_achieving_max),
    ]
    return EXIT_OK, _csv_text(rows, header) + _csv_text(tail)


# -- oracle ------------------------------------------------------------------


def cmd_oracle(cfg: RunConfig, fmt: str, selection: str):
    problem = cfg.build_problem()
    sel = Selection.from_bits(selection)
    weights = [s.weight for s in cfg.problem.metric_specs()]
    res = cfg.solver.grid_resolution
    out = grid_oracle(ReducedProblem(problem, sel, weights, cfg.solver.feasibility_tol), res)
    extremes = metric_extremes(problem, res)
    payload = {
        "selection": sel.bits,
        "resolution": res,
        "status": out.status.value,
        "evaluations": out.evaluations,
        "objective": None if out.objective is None else _num(out.objective),
        "design": _design_dict(out.design),
        "metrics": None if out.classification is None else [_num(v) for v in out.classification.report.values],
        "best_infeasible_design": _design_dict(out.best_infeasible_design),
        "worst_hard_violation": None if out.worst_hard_violation is None else _num(out.worst_hard_violation),
        "metric_minima": [
            {"metric": m + 1, "min": _num(v), "design": _design_dict(d)} for m, (v, d) in enumerate(extremes)
        ],
    }
    if fmt == "json":
        return EXIT_OK, _json_text(payload)
    if fmt == "text":
        lines = [f"selection {sel.bits}: {out.status.value} on a {res}-point grid"]
        if out.design is not None:
            lines.append(f"J = {_sig(out.objective)} at {payload['design']}")
        for e in payload["metric_minima"]:
            lines.append(f"min mu{e['metric']} = {_sig(e['min'])} at {e['design']}")
        return EXIT_OK, "\n".join(lines) + "\n"
    header = ("selection", "status", "objective", "design", "worst_hard_violation")
    d = out.design or out.best_infeasible_design
    row = (
        sel.bits,
        out.status.value,
        "" if out.objective is None else _csv_num(out.objective),
        " ".join(_csv_num(v) for v in d.as_vector()),
        "" if out.worst_hard_violation is None else _csv_num(out.worst_hard_violation),
    )
    return EXIT_OK, _csv_text([row], header)


# -- reproduce ---------------------------------------------------------------


def table1(cfg: RunConfig):
    """Metric values on the ranking candidates plus closed-form deviations."""
    problem = cfg.build_problem()
    candidates = generate_candidates(problem, cfg.candidate_scheme())
    rows = []
    worst = 0.0
    for i, d in enumerate(candidates, start=1):
        vals = evaluate_metrics(problem, simulate(problem, d), d).values
        if problem.horizon == 3 and problem.n_metrics >= 2:
            p = cfg.problem
            ref = closed_form_metrics(d.theta[0], d.phi[0], p.initial_state, p.reference_state)
            worst = max(worst, float(np.max(np.abs(vals[:2] - np.array(ref)))))
        rows.append((i, float(d.theta[0]), float(d.phi[0]), [float(v) for v in vals]))
    counts = tally_violations(problem, candidates, cfg.solver.feasibility_tol)
    return problem, rows, counts, worst


def cmd_table1(cfg: RunConfig, fmt: str):
    problem, rows, counts, worst = table1(cfg)
    m = problem.n_metrics
    header = ["test", "theta", "phi"] + [f"mu{i + 1}" for i in range(m)]
    if fmt == "json":
        return EXIT_OK, _json_text(
            {
                "rows": [dict(zip(header, [r[0], r[1], r[2], *r[3]])) for r in rows],
                "violation_counts": [int(c) for c in counts],
                "closed_form_max_abs_error": worst,
            }
        )
    if fmt == "text":
        return EXIT_OK, _text_table(header, [(str(r[0]), r[1], r[2], *r[3]) for r in rows])
    return EXIT_OK, _csv_text(
        [[r[0], _csv_num(r[1]), _csv_num(r[2])] + [_csv_num(v) for v in r[3]] for r in rows], header
    )


def packaged_config(name: str) -> RunConfig:
    return parse_config(resources.files("ccdrelax.data").joinpath(name).read_text(encoding="utf-8"))


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "text"), default=None)
    common.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="override ranking.seed")
    common.add_argument("--grid", type=int, default=None, help="override solver.grid_resolution")

    parser = argparse.ArgumentParser(
        prog="ccdrelax", description="Ranking-based metric-bound relaxation for CCD problems"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("rank", "rank metrics by violation count"),
        ("solve", "run the relaxation framework"),
        ("baseline", "relax everything and sweep weights"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("config")
    sp = sub.add_parser("oracle", parents=[common], help="exhaustive grid solve for one selection")
    sp.add_argument("config")
    sp.add_argument("--selection", required=True, help="bitstring, 1 = hard bound (e.g. 0101)")
    sp = sub.add_parser("reproduce", parents=[common], help="rerun a packaged experiment")
    sp.add_argument("experiment", choices=("table1", "framework", "baseline"))
    return parser


def run_command(args) -> tuple[int, str]:
    if args.command == "reproduce":
        cfg = packaged_config("microgrid4.json")
    else:
        cfg = load_config(args.config)
    cfg = with_overrides(cfg, args.seed, args.grid)
    default_fmt = {"reproduce": "csv", "baseline": "csv"}.get(args.command, cfg.output.format)
    if args.command == "reproduce" and args.experiment == "framework":
        default_fmt = "json"
    fmt = args.format or default_fmt
    if args.command == "rank":
        return cmd_rank(cfg, fmt)
    if args.command == "solve":
        return cmd_solve(cfg, fmt)
    if args.command == "baseline":
        return cmd_baseline(cfg, fmt)
    if args.command == "oracle":
        return cmd_oracle(cfg, fmt, args.selection)
    return {"table1": cmd_table1, "framework": cmd_solve, "baseline": cmd_baseline}[args.experiment](cfg, fmt)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        code, text = run_command(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ContractViolation, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8", newline="\n")
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
