import json

import numpy as np
import pytest

from jemo.cli import (
    Command,
    RunConfig,
    RunReport,
    build_tasks,
    load_input,
    main,
    parse_tolerances,
    run,
    worker_count,
)
from jemo.codec import dumps, loads, matrix_to_json
from jemo.constants import CSV_HEADER, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, THREADS_ENV, TOLERANCES
from jemo.errors import ConfigError
from jemo.linalg import Ensemble, random_pair


@pytest.fixture(autouse=True)
def single_worker(monkeypatch) -> None:
    monkeypatch.setenv(THREADS_ENV, "1")


def test_can_parse_tolerances() -> None:
    # when
    tolerances = parse_tolerances(["sandwich=1e-4", "formula=0.5"])

    # then
    assert tolerances["sandwich"] == 1e-4
    assert tolerances["formula"] == 0.5
    assert tolerances["inequality"] == TOLERANCES["inequality"]


@pytest.mark.parametrize("given", [["sandwich"], ["unknown=1"], ["sandwich=small"]])
def test_fail_parse_tolerances(given) -> None:
    with pytest.raises(ConfigError):
        parse_tolerances(given)


@pytest.mark.parametrize("given", [{"trials": 0}, {"budget": 0}])
def test_fail_run_config_without_work(given) -> None:
    with pytest.raises(ConfigError):
        RunConfig(command="verify", **given)


def test_worker_count(monkeypatch) -> None:
    # given
    monkeypatch.setenv(THREADS_ENV, "3")

    # then
    assert worker_count(10) == 3
    assert worker_count(2) == 2


@pytest.mark.parametrize("given", ["zero", "0", "-2"])
def test_fail_worker_count_on_invalid_env(monkeypatch, given: str) -> None:
    # given
    monkeypatch.setenv(THREADS_ENV, given)

    # then
    with pytest.raises(ConfigError):
        worker_count(4)


def test_can_load_pair(pair_file, e11, e22) -> None:
    # when
    operator, pair = load_input(pair_file(e11, e22))

    # then
    assert operator.dim == 2
    assert len(operator.terms) == 2
    assert pair[0] == e11 and pair[1] == e22


def test_can_load_operator(tmp_path, identity2, e12) -> None:
    # given
    file = tmp_path / "operator.json"
    term = {"a": matrix_to_json(identity2), "b": matrix_to_json(e12)}
    file.write_text(json.dumps({"dim": 2, "terms": [term, term]}))

    # when
    operator, pair = load_input(str(file))

    # then
    assert pair is None
    assert len(operator.terms) == 2


@pytest.mark.parametrize("given", [[1, 2], {"a": {"n": 2, "re": [[1, 0], [0, 1]]}}])
def test_fail_load_input_on_unknown_layout(tmp_path, given) -> None:
    # given
    file = tmp_path / "broken.json"
    file.write_text(json.dumps(given))

    # then
    with pytest.raises(ValueError):
        load_input(str(file))


def test_tasks_are_seeded_from_master_seed() -> None:
    # given
    short = build_tasks(RunConfig(command="verify", seed=7, trials=2))
    long = build_tasks(RunConfig(command="verify", seed=7, trials=4))

    # then
    assert [task.seed for task in short] == [task.seed for task in long[:2]]
    assert len({task.seed for task in long}) == 4


def test_formula_tasks_cover_requested_families() -> None:
    # when
    tasks = build_tasks(
        RunConfig(command=str(Command.FORMULAS), trials=3, families=["diagonal", "symmetric"])
    )

    # then
    assert [task.label for task in tasks] == [
        "diagonal:0", "diagonal:1", "diagonal:2", "symmetric:0", "symmetric:1", "symmetric:2",
    ]


def test_can_report_norm(pair_file, capsys, e11, e22) -> None:
    # when
    code = main(["norm", "--input", pair_file(e11, e22), "--budget", "8"])

    # then
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["aggregate"]["cases"] == 1
    assert report["aggregate"]["failures"] == 0
    assert report["cases"][0]["values"]["norm"] == pytest.approx(1.0, abs=1e-9)


def test_dependent_pair_uses_closed_form(pair_file, capsys, identity2) -> None:
    # when
    code = main(["cbnorm", "--input", pair_file(identity2, 2 * identity2), "--budget", "8"])

    # then
    assert code == EXIT_OK
    case = json.loads(capsys.readouterr().out)["cases"][0]
    assert case["certificate"]["formula"] == pytest.approx(4.0)
    assert case["values"]["cb"] == pytest.approx(4.0, abs=1e-9)


def test_verify_writes_csv(pair_file, tmp_path, e11, e22) -> None:
    # given
    out = tmp_path / "report.csv"

    # when
    code = main(
        ["verify", "--input", pair_file(e11, e22), "--budget", "8", "--format", "csv", "--out", str(out)]
    )

    # then
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("label,seed,passed")
    assert len(lines) == 2
    assert lines[1].split(",")[2] == "1"


def test_violations_exit_with_failing_seeds(pair_file, capsys, e11, e22) -> None:
    # when
    code = main(["norm", "--input", pair_file(e11, e22), "--budget", "8", "--tol", "sandwich=-10"])

    # then
    assert code == EXIT_VIOLATION
    assert "1 of 1 cases failed" in capsys.readouterr().err


def test_ellipse_report_on_segment(pair_file, capsys) -> None:
    # when
    code = main(["ellipse-report", "--input", pair_file(np.diag([1, 0]), np.diag([0, 1]))])

    # then
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == [",".join(CSV_HEADER), "s12-zero,0.5,0.5,1,0"]


def test_ellipse_report_on_vertical_strip(pair_file, capsys, identity2) -> None:
    # when
    code = main(["ellipse-report", "--input", pair_file(identity2, identity2)])

    # then
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == [",".join(CSV_HEADER), "vertical-strip,1,0.5,2,0"]


@pytest.mark.parametrize("seed", [1, 5])
def test_verify_compresses_larger_pairs(pair_file, capsys, seed: int) -> None:
    # given
    a, b = random_pair(Ensemble.GINIBRE, 4, seed)

    # when
    code = main(["verify", "--input", pair_file(a, b), "--budget", "4"])

    # then
    assert code != EXIT_USAGE
    case = json.loads(capsys.readouterr().out)["cases"][0]
    assert set(case["margins"]) == {"hyperbola", "det_bound"}
    assert case["certificate"]["margins"]["compression"] >= -1e-9


def test_formulas_command_runs_a_family(capsys) -> None:
    # when
    code = main(["formulas", "--family", "diagonal", "--trials", "1", "--budget", "8"])

    # then
    assert code != EXIT_USAGE
    report = json.loads(capsys.readouterr().out)
    assert report["aggregate"]["cases"] == 1
    assert report["cases"][0]["label"] == "diagonal:0"
    assert "deviation" in report["cases"][0]["values"]


def test_ellipse_report_traces_boundary(capsys) -> None:
    # when
    code = main(["ellipse-report", "--seed", "3", "--budget", "8"])

    # then
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 1024
    residuals = [abs(float(line.split(",")[4])) for line in lines[1:]]
    assert max(residuals) <= 1e-9


@pytest.mark.parametrize(
    "given_args",
    [
        ["verify", "--trials", "0"],
        ["norm"],
        ["verify", "--tol", "nonsense"],
    ],
)
def test_usage_errors(capsys, given_args) -> None:
    # when
    code = main(given_args)

    # then
    assert code == EXIT_USAGE
    assert "jemo: error:" in capsys.readouterr().err


def test_malformed_input_is_a_usage_error(tmp_path) -> None:
    # given
    file = tmp_path / "pair.json"
    file.write_text("{not json")

    # then
    assert main(["norm", "--input", str(file)]) == EXIT_USAGE


@pytest.mark.parametrize(
    "given",
    [
        {"terms": [{"a": {"n": 2, "re": [[1, 0], [0, 1]]}}]},
        {"dim": 2, "terms": "x"},
        {"a": [1, 2], "b": {"n": 2, "re": [[1, 0], [0, 1]]}},
    ],
)
def test_invalid_input_structure_is_a_usage_error(tmp_path, capsys, given) -> None:
    # given
    file = tmp_path / "operator.json"
    file.write_text(json.dumps(given))

    # when
    code = main(["norm", "--input", str(file), "--budget", "4"])

    # then
    assert code == EXIT_USAGE
    assert "jemo: error:" in capsys.readouterr().err


def test_unknown_command_exits_through_argparse() -> None:
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])

    assert e.value.code == 2


def test_report_survives_json(pair_file, e11, e22) -> None:
    # given
    report = run(RunConfig(command="norm", inputs=[pair_file(e11, e22)], budget=4))

    # when
    restored = loads(RunReport, dumps(report, RunReport))

    # then
    assert restored.aggregate.cases == 1
    assert restored.cases[0].certificate.lower == report.cases[0].certificate.lower
    assert restored.cases[0].certificate.lower_witness == report.cases[0].certificate.lower_witness
    assert restored.config.inputs == report.config.inputs


def test_verify_is_deterministic_across_workers(monkeypatch) -> None:
    # given
    config = RunConfig(command="verify", seed=7, trials=2, budget=4)

    # when
    monkeypatch.setenv(THREADS_ENV, "1")
    serial = run(config)
    monkeypatch.setenv(THREADS_ENV, "2")
    parallel = run(config)

    # then
    assert [case.seed for case in serial.cases] == [case.seed for case in parallel.cases]
    assert [case.certificate.margins for case in serial.cases] == [
        case.certificate.margins for case in parallel.cases
    ]


def test_compress_reports_norm_loss(capsys) -> None:
    # when
    code = main(["compress", "--trials", "1", "--budget", "8", "--seed", "11"])

    # then
    assert code == EXIT_OK
    values = json.loads(capsys.readouterr().out)["cases"][0]["values"]
    assert abs(values["norm_loss_a"]) <= 1e-6
    assert abs(values["norm_loss_b"]) <= 1e-6
