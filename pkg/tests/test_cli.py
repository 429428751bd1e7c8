import json
from pathlib import Path

import pytest
import yaml

from transfix.cli import main, run_scenario
from transfix.errors import ScenarioParseError, ScenarioValidationError
from transfix.records import read_trace
from transfix.scenario import load, parse_text

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

UNION = """\
name: union
spaces:
  abc: {kind: powerset, base: [a, b, c]}
operators:
  add-a: {space: abc, family: union, set: [a]}
runs:
  - {do: iterate, operator: add-a, from: []}
"""


def write(tmp_path, text, name="s.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        assert run_cli("run", write(tmp_path, UNION), "--out-dir", tmp_path / "out") == 0
        assert "[ok] 00 iterate: converged at 1" in capsys.readouterr().out

    def test_failed_directive(self, tmp_path):
        text = UNION.replace("from: []}", "from: [], budget: 0}")
        assert run_cli("run", write(tmp_path, text), "--out-dir", tmp_path / "out") == 1

    def test_missing_file(self, tmp_path):
        assert run_cli("run", tmp_path / "nope.yaml") == 2

    def test_yaml_error_reports_position(self, tmp_path, capsys):
        path = write(tmp_path, "name: x\nspaces: {a: [\n")
        assert run_cli("check", path) == 2
        assert "ScenarioParseError" in capsys.readouterr().err

    def test_unresolved_operator(self, tmp_path, capsys):
        path = write(tmp_path, UNION.replace("operator: add-a", "operator: nope"))
        assert run_cli("run", path, "--out-dir", tmp_path) == 2
        assert "runs/0: unknown operator 'nope'" in capsys.readouterr().err


class TestParseErrors:
    def test_line_and_column(self):
        with pytest.raises(ScenarioParseError) as info:
            parse_text("name: x\nruns: [a, b\nother: 1\n")
        assert info.value.line == 3 and info.value.column is not None

    def test_not_a_mapping(self):
        with pytest.raises(ScenarioParseError):
            parse_text("- 1\n- 2\n")

    def test_schema_error_names_the_path(self, tmp_path):
        with pytest.raises(ScenarioValidationError) as info:
            load(write(tmp_path, UNION.replace("kind: powerset", "kind: donut")))
        assert "spaces/abc" in str(info.value)


class TestRun:
    def test_expected_divergence_is_success(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli("run", SCENARIOS / "translation.yaml", "--out-dir", out) == 0
        result = json.loads((out / "translation" / "00-iterate.result.json").read_text())
        assert result["record"] == "non-convergence"
        assert read_trace(out / "translation" / "00-iterate.trace.jsonl").outcome == "limit-divergence"

    def test_certificate_written(self, tmp_path):
        out = tmp_path / "out"
        run_cli("run", write(tmp_path, UNION), "--out-dir", out)
        cert = json.loads((out / "union" / "00-iterate.cert.json").read_text())
        assert cert["closure"] == "1" and cert["residual"] == "0"

    def test_byte_identical_reruns(self, tmp_path):
        for d in ("a", "b"):
            assert run_cli("run", SCENARIOS / "halving.yaml", "--out-dir", tmp_path / d) == 0
        files = sorted(p.name for p in (tmp_path / "a" / "halving").iterdir())
        assert files
        for name in files:
            assert (tmp_path / "a" / "halving" / name).read_bytes() == (tmp_path / "b" / "halving" / name).read_bytes()

    def test_oracle_subcommand_runs_only_checks(self, tmp_path, capsys):
        assert run_cli("oracle", SCENARIOS / "halving.yaml", "--out-dir", tmp_path) == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("[")]
        assert len(lines) == 1 and "oracle-check" in lines[0]

    def test_run_scenario_api(self, tmp_path):
        results = run_scenario(load(SCENARIOS / "powerset.yaml"), tmp_path)
        assert results and all(r.ok for r in results)


class TestOverrides:
    def test_check_echoes_defaults(self, tmp_path, capsys):
        assert run_cli("check", write(tmp_path, UNION), "--seed", 7, "--budget", "w*3", "--tolerance", 1e-6) == 0
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["defaults"]["seed"] == 7
        assert doc["defaults"]["budget"] == "w*3"
        assert doc["defaults"]["tolerance"] == 1e-6

    def test_budget_override_applies(self, tmp_path):
        assert run_cli("run", SCENARIOS / "halving.yaml", "--budget", "5", "--out-dir", tmp_path) == 1

    def test_tolerance_override_reaches_metric_spaces(self):
        scen = load(SCENARIOS / "halving.yaml", {"tolerance": 1e-4})
        assert scen.spaces["reals"].tolerance == 1e-4

    def test_bad_budget(self, tmp_path):
        assert run_cli("check", write(tmp_path, UNION), "--budget", "w^") == 2


class TestExplain:
    def test_union_table(self, tmp_path, capsys):
        out = tmp_path / "out"
        run_cli("run", write(tmp_path, UNION), "--out-dir", out)
        capsys.readouterr()
        assert run_cli("explain", out / "union" / "00-iterate.trace.jsonl") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[2].split()[0] == "0" and lines[2].endswith("false")
        assert lines[3].split()[0] == "1" and lines[3].endswith("true")
        assert lines[-1] == "outcome: converged at 1"

    def test_header_only_trace(self, tmp_path, capsys):
        out = tmp_path / "out"
        run_cli("run", write(tmp_path, UNION), "--out-dir", out)
        path = out / "union" / "00-iterate.trace.jsonl"
        path.write_text(path.read_text().splitlines()[0] + "\n")
        assert run_cli("explain", path) == 2
        assert "EmptyTrace" in capsys.readouterr().err

    def test_empty_file(self, tmp_path):
        assert run_cli("explain", write(tmp_path, "", "t.jsonl")) == 2


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.yaml")), ids=lambda p: p.stem)
def test_bundled_scenarios_pass(path, tmp_path):
    assert run_cli("run", path, "--out-dir", tmp_path) == 0
