import argparse
import logging
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.config import JobConfig, build_operator, build_symbol, job_schema, parse_job, read_job_text
from src.constants import (
    DEFAULT_TRUNCATIONS,
    ELLIPTIC_FLOOR,
    ELLIPTIC_TRUNCATIONS,
    SV_THRESHOLD,
    UNIFORMIZE_TRUNCATIONS,
)
from src.data_models import ActionKind, EllipticityReport, Verdict
from src.ellipticity import check_elliptic, check_elliptic_isometric, elliptic_s_interval, sweep_s
from src.errors import GIndexError, NotEllipticError, UnsupportedActionError
from src.nctorus import correspondence_table
from src.realization import analytic_index
from src.reports import CSV_INDEX_COLUMNS, canonical_json, envelope, index_rows, to_csv
from src.topological import index_finite_free, index_formula_Z
from src.uniformization import (
    AveragedOperatorSpec,
    fredholm_probe,
    invariant_restriction_index,
    transverse_elliptic_check,
)
from src.utils import locate_job

log = logging.getLogger("gidx")

EXIT_OK = 0
EXIT_NOT_ELLIPTIC = 2
EXIT_INCONCLUSIVE = 3

VERDICT_EXIT = {
    Verdict.ELLIPTIC: EXIT_OK,
    Verdict.NOT_ELLIPTIC: EXIT_NOT_ELLIPTIC,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


@dataclass
class Outcome:
    """What a command hands back to the output stage."""
    result: Any
    summary: str
    exit_code: int = EXIT_OK
    rows: List[Dict[str, Any]] = field(default_factory=list)
    columns: Sequence[str] = ()


def _truncations(job: JobConfig, args: argparse.Namespace, default: Sequence[int]) -> List[int]:
    if args.trunc:
        return args.trunc
    return list(job.truncations or default)


def _tolerance(job: JobConfig, args: argparse.Namespace, default: float) -> float:
    if args.tol is not None:
        return args.tol
    return job.tolerance if job.tolerance is not None else default


def _ellipticity_rows(report: EllipticityReport) -> List[Dict[str, Any]]:
    evidence = report.evidence
    if "min_singular_values" in evidence:
        return [{"N": N, "min_sv": sv} for N, sv in zip(evidence["N_list"], evidence["min_singular_values"])]
    if "interior_min_sv" in evidence and isinstance(evidence["interior_min_sv"], list):
        return [{"s": s, "min_sv": sv} for s, sv in evidence["interior_min_sv"]]
    return []


def cmd_ellipticity(job: JobConfig, args: argparse.Namespace) -> Outcome:
    sym = build_symbol(job)
    floor = _tolerance(job, args, ELLIPTIC_FLOOR)
    if sym.action.kind is ActionKind.DILATION:
        if job.s_range is not None:
            report = elliptic_s_interval(sym, job.s_range, job.s_grid, floor=floor)
        else:
            report = check_elliptic(sym, job.s, floor=floor)
    else:
        N_list = _truncations(job, args, ELLIPTIC_TRUNCATIONS)
        report = check_elliptic_isometric(sym, job.x_samples, N_list, floor, job.s, args.seed)
    summary = f"verdict: {report.verdict.name.lower()} ({report.method})"
    if report.interval is not None:
        summary += f", elliptic for s in ({report.interval[0]:.9f}, {report.interval[1]:.9f})"
    rows = _ellipticity_rows(report)
    columns = tuple(rows[0]) if rows else ()
    return Outcome(report, summary, VERDICT_EXIT[report.verdict], rows, columns)


def cmd_index(job: JobConfig, args: argparse.Namespace) -> Outcome:
    spec = build_operator(job)
    sym = spec.symbol()
    check = check_elliptic(sym, job.s, seed=args.seed)
    if check.verdict is Verdict.NOT_ELLIPTIC:
        raise NotEllipticError(f"operator is not elliptic ({check.method}, {check.failing_threshold})")
    if check.verdict is Verdict.INCONCLUSIVE:
        log.warning("ellipticity inconclusive (%s); computing the index anyway", check.failing_threshold)

    N_list = _truncations(job, args, DEFAULT_TRUNCATIONS)
    report = analytic_index(spec, N_list, _tolerance(job, args, SV_THRESHOLD), args.threads)
    topological = None
    if sym.action.kind is ActionKind.ROTATION:
        topological = index_formula_Z(sym)
    elif sym.action.kind is ActionKind.CYCLIC:
        topological = index_finite_free(sym)
    report.compare(topological.snapped if topological else None)

    summary = f"analytic index {report.stabilized_index}"
    if topological is not None:
        summary += f", topological index {topological.snapped} (agree: {report.agree})"
    exit_code = EXIT_OK if report.stabilized_index is not None else EXIT_INCONCLUSIVE
    result = {"index": report, "topological": topological, "ellipticity": check}
    return Outcome(result, summary, exit_code, index_rows(report.per_N), CSV_INDEX_COLUMNS)


def cmd_sweep_s(job: JobConfig, args: argparse.Namespace) -> Outcome:
    sym = build_symbol(job)
    if sym.action.kind is not ActionKind.DILATION:
        raise UnsupportedActionError("sweep-s tabulates pole conditions of dilation actions")
    lo, hi = job.s_range or (-2.0, 2.0)
    rows = sweep_s(sym, np.linspace(lo, hi, job.s_grid + 1))
    flat = [
        {
            "s": row["s"],
            "pole_zero_min": min(row["pole_zero_min"]),
            "pole_infinity_min": min(row["pole_infinity_min"]),
            "interior_min_sv": row["interior_min_sv"],
        }
        for row in rows
    ]
    return Outcome(rows, f"{len(rows)} s values tabulated", EXIT_OK, flat, tuple(flat[0]))


def cmd_nctorus(job: JobConfig, args: argparse.Namespace) -> Outcome:
    theta = job.nctorus.theta if job.nctorus else 0.7
    L = job.nctorus.L if job.nctorus else 12.0
    table = correspondence_table(theta, L)
    tol = _tolerance(job, args, 1e-6)
    worst = max(max(v for k, v in row.items() if k != "seam") for row in table.values())
    seam = max(row["seam"] for row in table.values())
    passed = worst < tol and seam < 1e-8
    rows = [{"function": name, **row} for name, row in table.items()]
    summary = f"max correspondence residual {worst:.3e}, max seam residual {seam:.3e}"
    result = {"theta": theta, "residuals": table, "passed": passed}
    return Outcome(result, summary, EXIT_OK if passed else EXIT_INCONCLUSIVE, rows, tuple(rows[0]))


def cmd_uniformize(job: JobConfig, args: argparse.Namespace) -> Outcome:
    block = job.uniformize
    alpha = block.alpha if block else 0.5
    N_list = args.trunc or list(block.truncations if block else UNIFORMIZE_TRUNCATIONS)
    spec = AveragedOperatorSpec(alpha)
    check = transverse_elliptic_check(spec)
    probe = fredholm_probe(spec, N_list)
    if not check.transversally_elliptic:
        result = {"alpha": alpha, "transverse": check, "fredholm_probe": probe}
        return Outcome(result, "not transversally elliptic", EXIT_NOT_ELLIPTIC)
    report = invariant_restriction_index(spec, N_list)
    result = {"alpha": alpha, "transverse": check, "fredholm_probe": probe, "index": report}
    exit_code = EXIT_OK if report.stabilized_index is not None else EXIT_INCONCLUSIVE
    summary = f"transversally elliptic, index {report.stabilized_index}"
    return Outcome(result, summary, exit_code, index_rows(report.per_N), CSV_INDEX_COLUMNS)


COMMANDS = {
    "ellipticity": cmd_ellipticity,
    "index": cmd_index,
    "sweep-s": cmd_sweep_s,
    "nctorus": cmd_nctorus,
    "uniformize": cmd_uniformize,
}


def _int_list(text: str) -> List[int]:
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers, e.g. '64,128,256'")
    if not values or min(values) <= 0:
        raise argparse.ArgumentTypeError("truncations must be positive")
    return values


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gidx", description="Ellipticity and index of G-operators.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("config", help="Job file (JSON); bundled defaults in jobs/ are found by name.")
        cmd.add_argument("--trunc", type=_int_list, default=None, help="Truncation sizes, e.g. '64,128,256'")
        cmd.add_argument("--tol", type=_positive_float, default=None, help="Main threshold of the command")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--threads", type=int, default=1)
        cmd.add_argument("--format", choices=("json", "csv"), default=None)
        cmd.add_argument("--out", type=str, default=None, help="Write the report here instead of stdout")
        cmd.add_argument("--verbose", "-v", action="count", default=0)
    sub.add_parser("schema", help="Print the JSON schema of job files")
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
        return
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        print(canonical_json(job_schema()))
        return EXIT_OK

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    text: Optional[str] = None
    try:
        path = locate_job(args.config)
        text = read_job_text(path)
        job = parse_job(text, str(path))
        if args.seed is None:
            args.seed = job.seed
        outcome = COMMANDS[args.command](job, args)
    except GIndexError as exc:
        log.error("%s", exc)
        # 任务文件没能读入时 config_hash 为 null
        _emit(canonical_json(envelope(args.command, None, text, error=exc.to_dict())), args.out)
        return exc.exit_code

    fmt = args.format or job.output_format
    if fmt == "csv" and outcome.columns:
        _emit(to_csv(outcome.rows, outcome.columns), args.out)
    else:
        _emit(canonical_json(envelope(args.command, outcome.result, text, seed=args.seed)), args.out)
    if args.out is not None:
        print(outcome.summary)
    else:
        log.info(outcome.summary)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
