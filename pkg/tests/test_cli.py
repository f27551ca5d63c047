"""End-to-end tests for the command-line interface: exit codes, JSON
schema conformance, CSV shape, and byte-identical reruns."""

import csv
import json
import math
from pathlib import Path

import jsonschema
import pytest

from compensator_bounds.cli import main, parse_args
from compensator_bounds.functions import Family, parse_function_spec

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"


def load_schema(name: str) -> dict:
    with open(SCHEMA_DIR / f"{name}.schema.json", encoding="utf-8") as fh:
        return json.load(fh)


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out


def check(name: str, payload: dict) -> None:
    jsonschema.validate(payload, load_schema(name))


class TestParseArgs:
    def test_bound_config(self):
        args = parse_args(["bound", "--f", "exp:lambda=0.5"])
        assert args.command == "bound"
        assert args.f.family is Family.EXPONENTIAL
        assert args.f.param == 0.5
        assert args.seed == 0

    def test_recursion_with_csv_sink(self, tmp_path):
        out = tmp_path / "out.csv"
        args = parse_args(["solve-recursion", "--f", "pow:m=2",
                           "--csv", str(out)])
        assert args.command == "solve-recursion"
        assert args.f.family is Family.POWER
        assert args.csv == str(out)

    def test_negative_lambda_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["bound", "--f", "exp:lambda=-1"])
        assert exc.value.code == 2
        assert "lambda must be > 0" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["bound", "--f", "quad", "--frobnicate"])
        assert exc.value.code == 2

    def test_step_accepts_fractions(self):
        args = parse_args(["compare", "--f", "quad", "--horizon", "5",
                           "--step", "1/128"])
        assert args.step == 1.0 / 128
        args = parse_args(["compare", "--f", "quad", "--horizon", "5",
                           "--step", "0.25"])
        assert args.step == 0.25

    def test_bad_step_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["compare", "--f", "quad", "--horizon", "5",
                        "--step", "zero"])
        assert exc.value.code == 2
        assert "grid step" in capsys.readouterr().err

    def test_csv_rejected_where_meaningless(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["bound", "--f", "quad", "--csv", "x.csv"])
        assert exc.value.code == 2
        assert "--csv" in capsys.readouterr().err

    def test_simulate_flag_dependencies(self, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["simulate", "--chain", "intro", "--f", "quad"])
        assert exc.value.code == 2
        assert "--n" in capsys.readouterr().err
        with pytest.raises(SystemExit) as exc:
            parse_args(["simulate", "--chain", "extremal", "--f", "quad"])
        assert exc.value.code == 2
        assert "--policy" in capsys.readouterr().err


class TestBound:
    def test_exponential_value(self, capsys):
        code, out = run_cli(["bound", "--f", "exp:lambda=0.5"], capsys)
        assert code == 0
        payload = json.loads(out)
        check("bound", payload)
        assert payload["value"] == pytest.approx(2.0, abs=1e-8)
        assert payload["unbounded"] is False
        assert parse_function_spec(payload["function"]).param == 0.5

    def test_supercritical_is_unbounded(self, capsys):
        code, out = run_cli(["bound", "--f", "exp:lambda=1.5"], capsys)
        assert code == 0
        payload = json.loads(out)
        check("bound", payload)
        assert payload["value"] == "unbounded"
        assert payload["unbounded"] is True

    def test_json_file_matches_stdout(self, tmp_path, capsys):
        target = tmp_path / "bound.json"
        code, out = run_cli(["bound", "--f", "quad", "--json", str(target)],
                            capsys)
        assert code == 0
        assert target.read_text(encoding="utf-8") == out
        payload = json.loads(out)
        assert payload["value"] == pytest.approx(1.0 + math.sqrt(2.0),
                                                 abs=1e-8)


class TestSolveRecursion:
    def test_quad_trace(self, tmp_path, capsys):
        trace_csv = tmp_path / "trace.csv"
        # The increments shrink quadratically in the distance to the
        # limit, so a loose stopping tolerance still lands close.
        code, out = run_cli(["solve-recursion", "--f", "quad",
                             "--tol", "1e-6", "--csv", str(trace_csv)],
                            capsys)
        assert code == 0
        payload = json.loads(out)
        check("solve-recursion", payload)
        assert payload["status"] == "converged"
        assert payload["b"][0] == 0.0
        assert payload["limit"] == pytest.approx(1.0 + math.sqrt(2.0),
                                                 abs=5e-3)
        with open(trace_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "b_n", "a_star_n"]
        assert len(rows) == payload["iterations"] + 2
        assert rows[1] == ["0", "0.0", ""]
        assert float(rows[2][1]) == payload["b"][1]

    def test_function_string_round_trips(self, capsys):
        code, out = run_cli(["solve-recursion", "--f", "exp:lambda=0.25"],
                            capsys)
        payload = json.loads(out)
        assert parse_function_spec(payload["function"]).param == 0.25


BELLMAN_SMALL = ["solve-bellman", "--f", "exp:lambda=0.5", "--horizon", "4",
                 "--step", "1/64", "--opt-grid", "128", "--refine", "30"]


class TestSolveBellman:
    def test_artifact_and_table(self, tmp_path, capsys):
        table_csv = tmp_path / "table.csv"
        code, out = run_cli(BELLMAN_SMALL + ["--csv", str(table_csv)],
                            capsys)
        assert code == 0
        payload = json.loads(out)
        check("solve-bellman", payload)
        assert payload["horizon"] == 4
        assert payload["values_at_zero"][0] == 1.0
        assert payload["values_at_zero"][1] == pytest.approx(
            math.exp(0.5), abs=1e-10)
        points = 4 * 64 + 1
        assert len(payload["actions"]) == 5
        assert all(len(row) == points for row in payload["actions"])
        with open(table_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "y", "value", "action"]
        assert len(rows) == 1 + 5 * points

    def test_deterministic_stdout(self, capsys):
        _, first = run_cli(BELLMAN_SMALL, capsys)
        _, second = run_cli(BELLMAN_SMALL, capsys)
        assert first == second


class TestCompare:
    def test_exponential_within_budget(self, tmp_path, capsys):
        out_csv = tmp_path / "cmp.csv"
        code, out = run_cli(["compare", "--f", "exp:lambda=0.5",
                             "--horizon", "6", "--step", "1/64",
                             "--csv", str(out_csv)], capsys)
        assert code == 0
        payload = json.loads(out)
        check("compare", payload)
        assert payload["enforced"] is True
        assert payload["within_budget"] is True
        assert len(payload["rows"]) == 7
        n0, c0, b0, gap0 = payload["rows"][0]
        assert (n0, c0, b0, gap0) == (0, 1.0, 1.0, 0.0)
        with open(out_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "c_n", "b_n", "gap"]
        assert len(rows) == 8

    def test_outside_class_not_enforced(self, capsys):
        code, out = run_cli(["compare", "--f", "remark2", "--horizon", "4",
                             "--step", "1/64"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["enforced"] is False


class TestTestShift:
    def test_clean_scan_for_exponential(self, capsys):
        code, out = run_cli(["test-shift", "--f", "exp:lambda=1",
                             "--trials", "300", "--seed", "5"], capsys)
        assert code == 0
        payload = json.loads(out)
        check("test-shift", payload)
        assert payload["violations"] == 0

    def test_counterexample_scan(self, tmp_path, capsys):
        report = tmp_path / "scan.json"
        code, out = run_cli(["test-shift", "--f", "remark2",
                             "--trials", "300", "--seed", "7",
                             "--report", str(report)], capsys)
        assert code == 0
        payload = json.loads(out)
        check("test-shift", payload)
        assert payload["violations"] >= 1
        assert payload["injected_gap"] == pytest.approx(-0.125, abs=1e-12)
        assert report.read_text(encoding="utf-8") == out


class TestSimulate:
    def test_intro_chain(self, tmp_path, capsys):
        paths_csv = tmp_path / "paths.csv"
        argv = ["simulate", "--chain", "intro", "--f", "exp:lambda=1",
                "--n", "20", "--paths", "2000", "--seed", "3",
                "--dump-paths", "50", "--csv", str(paths_csv)]
        code, out = run_cli(argv, capsys)
        assert code == 0
        payload = json.loads(out)
        check("simulate", payload)
        assert payload["within_4se"] is True
        assert payload["max_doob_residual"] == 0.0
        with open(paths_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["path_id", "k", "X", "Y", "M"]
        assert len(rows) == 1 + 50 * 21
        assert rows[1][:2] == ["0", "0"]
        for row in rows[1:100]:
            x, y, m = float(row[2]), float(row[3]), float(row[4])
            assert m == x - y

    def test_intro_seed_determinism(self, capsys):
        argv = ["simulate", "--chain", "intro", "--f", "exp:lambda=1",
                "--n", "15", "--paths", "500", "--seed", "11"]
        _, first = run_cli(argv, capsys)
        _, second = run_cli(argv, capsys)
        assert first == second
        _, other = run_cli(argv[:-1] + ["12"], capsys)
        assert other != first

    def test_extremal_chain_from_artifact(self, tmp_path, capsys):
        policy = tmp_path / "policy.json"
        code, _ = run_cli(BELLMAN_SMALL + ["--json", str(policy)], capsys)
        assert code == 0
        code, out = run_cli(["simulate", "--chain", "extremal",
                             "--f", "exp:lambda=0.5",
                             "--policy", str(policy),
                             "--paths", "4000", "--seed", "9"], capsys)
        assert code == 0
        payload = json.loads(out)
        check("simulate", payload)
        assert payload["within_4se"] is True
        assert payload["max_doob_residual"] == 0.0
        assert payload["exact_f"] == pytest.approx(payload["table_value"],
                                                   abs=2.0 / 64)
        assert len(payload["increments"]) == 4

    def test_extremal_artifact_mismatch(self, tmp_path, capsys):
        policy = tmp_path / "policy.json"
        run_cli(BELLMAN_SMALL + ["--json", str(policy)], capsys)
        code = main(["simulate", "--chain", "extremal", "--f", "pow:m=2",
                     "--policy", str(policy)])
        assert code == 2
        code = main(["simulate", "--chain", "extremal",
                     "--f", "exp:lambda=0.5",
                     "--policy", str(tmp_path / "missing.json")])
        assert code == 2


class TestReport:
    def test_exponential_all_pass(self, tmp_path, capsys):
        target = tmp_path / "report.json"
        code, out = run_cli(["report", "--f", "exp:lambda=0.5",
                             "--horizon", "6", "--step", "1/64",
                             "--trials", "200", "--json", str(target)],
                            capsys)
        assert code == 0
        payload = json.loads(out)
        check("report", payload)
        assert payload["status"] == "all-pass"
        assert payload["failures"] == []
        assert payload["bound"]["value"] == pytest.approx(2.0, abs=1e-8)
        assert payload["shift_scan"]["violations"] == 0
        assert payload["chain_check"]["within_budget"] is True
        assert target.read_text(encoding="utf-8") == out

    def test_supercritical_consistent(self, capsys):
        code, out = run_cli(["report", "--f", "exp:lambda=1.5",
                             "--horizon", "5", "--step", "1/64",
                             "--trials", "100"], capsys)
        assert code == 0
        payload = json.loads(out)
        check("report", payload)
        assert payload["bound"]["value"] == "unbounded"
        assert payload["recursion"]["status"] == "diverged"
        assert payload["status"] == "all-pass"

    def test_counterexample_is_expected_finding(self, capsys):
        code, out = run_cli(["report", "--f", "remark2", "--horizon", "4",
                             "--step", "1/64", "--trials", "200"], capsys)
        assert code == 0
        payload = json.loads(out)
        check("report", payload)
        assert payload["class_s"] is False
        assert payload["shift_scan"]["violations"] >= 1
        assert payload["shift_scan"]["violations_expected"] is True
        assert payload["status"] == "all-pass"

    def test_comparison_csv(self, tmp_path, capsys):
        out_csv = tmp_path / "rows.csv"
        code, _ = run_cli(["report", "--f", "pow:m=2", "--horizon", "5",
                           "--step", "1/64", "--trials", "100",
                           "--csv", str(out_csv)], capsys)
        assert code == 0
        with open(out_csv, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["n", "c_n", "b_n", "gap"]
        assert len(rows) == 7
