import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .codec import dumps, hydrate
from .constants import (
    COMPRESSION_DIM,
    CSV_FLOAT_FORMAT,
    CSV_HEADER,
    DEFAULT_BUDGET,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    ELLIPSE_REPORT_GRID,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATION,
    THREADS_ENV,
    TOL_FORMULA,
    TOL_INEQUALITY,
    TOLERANCES,
)
from .errors import ConfigError, JemoError
from .formulas import (
    cb_symmetric_formula,
    diag_commuting_formula,
    normal_commuting_formula,
    selfadjoint_cb_formula,
    selfadjoint_jordan_op,
)
from .geometry import (
    Degeneracy,
    ellipse_model,
    ellipse_rows,
    hyperbola_check,
    is_vertical_strip,
    normalize_pair,
    strip_midpoint,
)
from .haagerup import ElemOp, NormCertificate, certify
from .jordan import (
    compress_to_2d,
    dependent_norm,
    dependent_ratio,
    jordan_op,
    verify_lower_bounds,
)
from .linalg import CMatrix, Ensemble, op_norm, random_pair
from .utils import StringEnum, spawn_seeds

logger = logging.getLogger(__name__)


class Command(StringEnum):
    NORM = "norm"
    CBNORM = "cbnorm"
    HAAGERUP = "haagerup"
    VERIFY = "verify"
    FORMULAS = "formulas"
    ELLIPSE_REPORT = "ellipse-report"
    COMPRESS = "compress"


class FormulaFamily(StringEnum):
    SYMMETRIC = "symmetric"
    COMMUTING = "commuting"
    NORMAL_COMMUTING = "normal-commuting"
    DIAGONAL = "diagonal"
    SELFADJOINT = "selfadjoint"


class OutputFormat(StringEnum):
    JSON = "json"
    CSV = "csv"


@dataclass
class RunConfig:
    command: str
    seed: int = DEFAULT_SEED
    trials: int = DEFAULT_TRIALS
    budget: int = DEFAULT_BUDGET
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(TOLERANCES))
    inputs: List[str] = field(default_factory=list)
    output_format: str = str(OutputFormat.JSON)
    out: Optional[str] = None
    families: List[str] = field(default_factory=list)
    verbose: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"--trials must be at least 1, got {self.trials}.", "trials")
        if self.budget < 1:
            raise ConfigError(f"--budget must be at least 1, got {self.budget}.", "budget")


@dataclass
class CaseResult:
    label: str
    seed: int
    passed: bool
    certificate: Optional[NormCertificate] = None
    margins: Dict[str, float] = field(default_factory=dict)
    values: Dict[str, float] = field(default_factory=dict)


@dataclass
class Aggregate:
    cases: int
    failures: int
    failing_seeds: List[int]
    min_margins: Dict[str, float]
    max_deviation: Dict[str, float]
    wall_time: float = 0.0


@dataclass
class RunReport:
    version: str
    config: RunConfig
    cases: List[CaseResult]
    aggregate: Aggregate


@dataclass
class CaseTask:
    command: str
    label: str
    seed: int
    budget: int
    tolerances: Dict[str, float]
    pair: Optional[Tuple[CMatrix, CMatrix]] = None
    operator: Optional[ElemOp] = None


def parse_tolerances(overrides: Sequence[str]) -> Dict[str, float]:
    tolerances = dict(TOLERANCES)
    for override in overrides:
        name, sep, value = override.partition("=")
        if not sep:
            raise ConfigError(f"Tolerance override `{override}` is not name=value.", override)
        if name not in TOLERANCES:
            raise ConfigError(
                f"Unknown tolerance `{name}`, expected one of {', '.join(TOLERANCES)}.",
                name,
            )
        try:
            tolerances[name] = float(value)
        except ValueError as e:
            raise ConfigError(f"Tolerance `{name}` needs a number, got `{value}`.", name) from e
    return tolerances


def load_input(path: str) -> Tuple[ElemOp, Optional[Tuple[CMatrix, CMatrix]]]:
    """Either a Jordan pair {"a": ..., "b": ...} or an ElemOp {"dim": ..., "terms": [...]}."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)

    if not isinstance(data, dict):
        raise ValueError(f"Input `{path}` must hold a JSON object.")
    if "terms" in data:
        parsed = hydrate(ElemOp, data)
        return ElemOp(parsed.dim, list(parsed.terms)), None
    if "a" in data and "b" in data:
        a, b = hydrate(CMatrix, data["a"]), hydrate(CMatrix, data["b"])
        return jordan_op(a, b), (a, b)
    raise ValueError(f"Input `{path}` has neither `terms` nor an `a`, `b` pair.")


def _deviation(certificate: NormCertificate, against_op: bool = True) -> float:
    if certificate.formula is None:
        return abs(certificate.cb - certificate.lower)
    deviations = [abs(certificate.formula - certificate.cb)]
    if against_op:
        deviations.append(abs(certificate.formula - certificate.lower))
    return max(deviations)


def _family_case(family: FormulaFamily, task: CaseTask) -> Tuple[NormCertificate, float]:
    seed, budget, slack = task.seed, task.budget, task.tolerances

    if family is FormulaFamily.SYMMETRIC:
        a, b = random_pair(Ensemble.COMPLEX_SYMMETRIC, 2, seed)
        value: Optional[float] = cb_symmetric_formula(a, b)
        T = jordan_op(a, b)
    elif family is FormulaFamily.COMMUTING:
        a, b = random_pair(Ensemble.COMMUTING_PAIR, 2, seed)
        value, T = None, jordan_op(a, b)
    elif family is FormulaFamily.NORMAL_COMMUTING:
        a, b = random_pair(Ensemble.COMMUTING_NORMAL_PAIR, 2, seed)
        value, T = normal_commuting_formula(a, b), jordan_op(a, b)
    elif family is FormulaFamily.DIAGONAL:
        a, b = random_pair(Ensemble.DIAGONAL, 2, seed)
        l1, l2 = np.diag(a.data) / np.abs(np.diag(a.data)).max()
        m1, m2 = np.diag(b.data) / np.abs(np.diag(b.data)).max()
        value = diag_commuting_formula(l1, l2, m1, m2)
        T = jordan_op(CMatrix.diag([l1, l2]), CMatrix.diag([m1, m2]))
    else:
        a, b = random_pair(Ensemble.SELFADJOINT_JORDAN_PAIR, 2, seed)
        value, T = selfadjoint_cb_formula(a, b), selfadjoint_jordan_op(a, b)

    certificate = certify(T, budget, seed, formula=value, slack=slack)
    return certificate, _deviation(certificate, family is not FormulaFamily.SELFADJOINT)


def run_case(task: CaseTask) -> CaseResult:
    command = Command(task.command)
    tolerances = task.tolerances

    if command in (Command.NORM, Command.CBNORM, Command.HAAGERUP):
        assert task.operator is not None
        formula = None
        if task.pair is not None and dependent_ratio(*task.pair) is not None:
            formula = dependent_norm(*task.pair)
        certificate = certify(task.operator, task.budget, task.seed, formula, tolerances)
        headline = {
            Command.NORM: ("norm", certificate.lower),
            Command.CBNORM: ("cb", certificate.cb),
            Command.HAAGERUP: ("haagerup", certificate.upper),
        }[command]
        return CaseResult(
            task.label, task.seed, certificate.passed, certificate, values=dict([headline])
        )

    if command is Command.VERIFY:
        a, b = task.pair or random_pair(Ensemble.GINIBRE, 2, task.seed)
        certificate = verify_lower_bounds(a, b, task.budget, task.seed, tolerances)
        if a.n == 1:
            return CaseResult(task.label, task.seed, certificate.passed, certificate)
        if a.n > 2:
            # the range picture lives on the 2×2 compression
            a, b = compress_to_2d(a, b)
        check = hyperbola_check(a, b, task.budget)
        passed = (
            certificate.passed
            and check.passed
            and check.det_margin >= -tolerances[TOL_INEQUALITY]
        )
        margins = {"hyperbola": check.margin, "det_bound": check.det_margin}
        return CaseResult(task.label, task.seed, passed, certificate, margins)

    if command is Command.COMPRESS:
        a, b = task.pair or random_pair(Ensemble.GINIBRE, COMPRESSION_DIM, task.seed)
        a2, b2 = compress_to_2d(a, b)
        certificate = verify_lower_bounds(a, b, task.budget, task.seed, tolerances)
        values = {
            "norm_loss_a": op_norm(a) - op_norm(a2),
            "norm_loss_b": op_norm(b) - op_norm(b2),
        }
        return CaseResult(
            task.label, task.seed, certificate.passed, certificate, values=values
        )

    family = FormulaFamily(task.label.split(":")[0])
    certificate, deviation = _family_case(family, task)
    passed = certificate.passed and deviation <= tolerances[TOL_FORMULA]
    return CaseResult(
        task.label, task.seed, passed, certificate, values={"deviation": deviation}
    )


def worker_count(tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        limit = os.cpu_count() or 1
    else:
        try:
            limit = int(raw)
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got `{raw}`.", THREADS_ENV) from e
        if limit < 1:
            raise ConfigError(f"{THREADS_ENV} must be positive, got {limit}.", THREADS_ENV)
    return max(1, min(limit, tasks))


def run_tasks(tasks: List[CaseTask], workers: int) -> List[CaseResult]:
    # map keeps task order, so reports do not depend on the worker count
    if workers == 1:
        return [run_case(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_case, tasks))


def build_tasks(config: RunConfig) -> List[CaseTask]:
    command = Command(config.command)
    base = dict(budget=config.budget, tolerances=config.tolerances)

    if command in (Command.NORM, Command.CBNORM, Command.HAAGERUP):
        if not config.inputs:
            raise ConfigError(f"`{command}` needs --input.", "input")
        tasks = []
        for index, path in enumerate(config.inputs):
            operator, pair = load_input(path)
            seed = spawn_seeds(config.seed, index + 1)[index]
            tasks.append(
                CaseTask(str(command), path, seed, operator=operator, pair=pair, **base)
            )
        return tasks

    if command in (Command.VERIFY, Command.COMPRESS) and config.inputs:
        tasks = []
        for index, path in enumerate(config.inputs):
            _, pair = load_input(path)
            if pair is None:
                raise ConfigError(f"`{command}` needs an `a`, `b` pair in `{path}`.", "input")
            seed = spawn_seeds(config.seed, index + 1)[index]
            tasks.append(CaseTask(str(command), path, seed, pair=pair, **base))
        return tasks

    if command is Command.FORMULAS:
        families = [FormulaFamily(name) for name in config.families] or list(FormulaFamily)
        return [
            CaseTask(str(command), f"{family}:{trial}", seed, **base)
            for family in families
            for trial, seed in enumerate(spawn_seeds(config.seed, config.trials))
        ]

    return [
        CaseTask(str(command), f"trial:{trial}", seed, **base)
        for trial, seed in enumerate(spawn_seeds(config.seed, config.trials))
    ]


def aggregate(cases: List[CaseResult], wall_time: float) -> Aggregate:
    min_margins: Dict[str, float] = {}
    max_deviation: Dict[str, float] = {}
    for case in cases:
        margins = dict(case.certificate.margins) if case.certificate else {}
        margins.update(case.margins)
        for name, value in margins.items():
            min_margins[name] = min(value, min_margins.get(name, value))
        if "deviation" in case.values:
            family = case.label.split(":")[0]
            max_deviation[family] = max(
                case.values["deviation"], max_deviation.get(family, 0.0)
            )

    failing = [case.seed for case in cases if not case.passed]
    return Aggregate(
        cases=len(cases),
        failures=len(failing),
        failing_seeds=failing,
        min_margins=min_margins,
        max_deviation=max_deviation,
        wall_time=wall_time,
    )


def run(config: RunConfig) -> RunReport:
    started = time.perf_counter()
    tasks = build_tasks(config)
    cases = run_tasks(tasks, worker_count(len(tasks)))
    return RunReport(
        version=__version__,
        config=config,
        cases=cases,
        aggregate=aggregate(cases, time.perf_counter() - started),
    )


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else format(value, CSV_FLOAT_FORMAT)


def report_csv(report: RunReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("label", "seed", "passed", "lower", "cb", "upper", "formula", "min_margin"))
    for case in report.cases:
        certificate = case.certificate
        writer.writerow(
            (
                case.label,
                case.seed,
                int(case.passed),
                _fmt(certificate.lower if certificate else None),
                _fmt(certificate.cb if certificate else None),
                _fmt(certificate.upper if certificate else None),
                _fmt(certificate.formula if certificate else None),
                _fmt(min([certificate.min_margin, *case.margins.values()]) if certificate else None),
            )
        )
    return buffer.getvalue()


def ellipse_report(config: RunConfig) -> str:
    if config.inputs:
        _, pair = load_input(config.inputs[0])
        if pair is None:
            raise ConfigError("`ellipse-report` needs an `a`, `b` pair.", "input")
        a, b = pair
    else:
        a, b = random_pair(Ensemble.GINIBRE, 2, spawn_seeds(config.seed, 1)[0])

    canon, bs, _ = normalize_pair(a, b)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)

    if is_vertical_strip(abs(canon.lambda_)):
        point = strip_midpoint(bs)
        writer.writerow(
            (
                str(Degeneracy.VERTICAL_STRIP),
                _fmt(point.x),
                _fmt(point.y),
                _fmt(point.product),
                _fmt(0.0),
            )
        )
        return buffer.getvalue()

    model = ellipse_model(abs(canon.lambda_), bs)
    if model.degenerate != Degeneracy.NONE:
        # a segment has no ellipse to trace, so only its midpoint is reported
        writer.writerow(
            (
                str(model.degenerate),
                _fmt(model.x0),
                _fmt(model.y0),
                _fmt(4 * model.x0 * model.y0),
                _fmt(0.0),
            )
        )
        return buffer.getvalue()

    grid = max(ELLIPSE_REPORT_GRID, config.budget)
    for row in ellipse_rows(model, grid):
        writer.writerow(tuple(_fmt(value) for value in row))
    return buffer.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8") as handle:
        handle.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jemo", description="Norms of elementary operators on matrix algebras"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    for command in Command:
        sub = commands.add_parser(str(command))
        sub.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sub.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        sub.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        sub.add_argument(
            "--tol", action="append", default=[], metavar="NAME=VALUE",
            help=f"override a tolerance ({', '.join(TOLERANCES)})",
        )
        sub.add_argument("--input", action="append", default=[], dest="inputs")
        sub.add_argument(
            "--format", choices=[str(f) for f in OutputFormat], default=str(OutputFormat.JSON)
        )
        sub.add_argument("--out", default=None)
        sub.add_argument("--verbose", action="store_true")
        if command is Command.FORMULAS:
            sub.add_argument(
                "--family", action="append", default=[], dest="families",
                choices=[str(f) for f in FormulaFamily],
            )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        seed=args.seed,
        trials=args.trials,
        budget=args.budget,
        tolerances=parse_tolerances(args.tol),
        inputs=list(args.inputs),
        output_format=args.format,
        out=args.out,
        families=list(getattr(args, "families", [])),
        verbose=args.verbose,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = config_from_args(args)
        if config.command == str(Command.ELLIPSE_REPORT):
            _emit(ellipse_report(config), config.out)
            return EXIT_OK

        report = run(config)
        if config.output_format == str(OutputFormat.CSV):
            _emit(report_csv(report), config.out)
        else:
            _emit(dumps(report, RunReport) + "\n", config.out)
    except (JemoError, OSError, ValueError, KeyError, TypeError) as e:
        print(f"jemo: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if report.aggregate.failures:
        seeds = ", ".join(str(seed) for seed in report.aggregate.failing_seeds)
        print(
            f"jemo: {report.aggregate.failures} of {report.aggregate.cases} cases failed "
            f"(seeds: {seeds})",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
