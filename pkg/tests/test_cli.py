import json
import shutil
import subprocess
import sys

import pytest

from sopa import ExactDecimal, load_report, load_xes
from sopa.cli import main
from tests.conftest import FIXTURES, HIRING

MODEL = str(HIRING / "hiring.bpmn")
VARIANTS_A = str(HIRING / "scenario_a.variants.xml")
VARIANTS_B = str(HIRING / "scenario_b.variants.xml")
MIXED = str(HIRING / "mixed.variants.xml")


def run(*argv) -> int:
    return main(list(argv))


class TestValidate:
    def test_ok(self, capsys):
        assert run("validate", "--model", MODEL, "--variants", VARIANTS_A) == 0
        assert capsys.readouterr().out.strip() == "OK"

    def test_diagnostics_go_to_stderr(self, capsys, tmp_path):
        # a config that prices none of the model's drivers
        bad = tmp_path / "bad.variants.xml"
        bad.write_text(
            """
            <costVariantConfig count="1">
              <variant id="v" frequency="1">
                <driver id="Nothing" cost="1"/>
              </variant>
            </costVariantConfig>
            """
        )
        assert run("validate", "--model", MODEL, "--variants", str(bad)) == 1
        err = capsys.readouterr().err
        assert "invalid:" in err
        assert "not concretized" in err

    def test_missing_file(self, capsys):
        assert run("validate", "--model", "/nonexistent.bpmn", "--variants", VARIANTS_A) == 1
        assert "error:" in capsys.readouterr().err


class TestSimulate:
    def test_writes_log_and_summary(self, capsys, tmp_path):
        out = tmp_path / "log.xes"
        code = run(
            "simulate",
            "--model", MODEL,
            "--variants", VARIANTS_A,
            "--instances", "20",
            "--seed", "5",
            "--out", str(out),
        )
        assert code == 0
        message = capsys.readouterr().out
        assert f"wrote 20 traces to {out}" in message
        assert "completed=" in message and "cancelled=" in message
        log = load_xes(out)
        assert len(log) == 20

    def test_outcome_tallies_add_up(self, capsys, tmp_path):
        out = tmp_path / "log.xes"
        run(
            "simulate",
            "--model", MODEL,
            "--variants", VARIANTS_A,
            "--instances", "50",
            "--out", str(out),
        )
        message = capsys.readouterr().out
        tallies = {
            piece.split("=")[0]: int(piece.split("=")[1])
            for piece in message[message.index("(") + 1 : message.index(")")].split(", ")
        }
        assert sum(tallies.values()) == 50

    def test_threaded_output_matches_sequential(self, capsys, tmp_path):
        seq, par = tmp_path / "seq.xes", tmp_path / "par.xes"
        base = [
            "simulate",
            "--model", MODEL,
            "--variants", MIXED,
            "--instances", "32",
            "--seed", "9",
        ]
        assert run(*base, "--threads", "1", "--out", str(seq)) == 0
        assert run(*base, "--threads", "4", "--out", str(par)) == 0
        assert seq.read_bytes() == par.read_bytes()

    def test_exact_quota_flag(self, capsys, tmp_path):
        out = tmp_path / "log.xes"
        run(
            "simulate",
            "--model", MODEL,
            "--variants", MIXED,
            "--instances", "10",
            "--exact-variant-quotas",
            "--out", str(out),
        )
        from collections import Counter

        counts = Counter(t.variant for t in load_xes(out).traces)
        assert counts == {
            "standard procedure": 5,
            "transport with e-bike": 2,
            "digital only": 3,
        }

    def test_invalid_combination_exits_one(self, capsys, tmp_path):
        # behavior annotations exist, but the variants file prices drivers
        # the base model does not know
        bad = tmp_path / "one.variants.xml"
        bad.write_text(
            '<costVariantConfig count="1"><variant id="v" frequency="1">'
            '<driver id="Ghost" cost="1"/></variant></costVariantConfig>'
        )
        out = tmp_path / "log.xes"
        code = run(
            "simulate",
            "--model", MODEL,
            "--variants", str(bad),
            "--instances", "5",
            "--out", str(out),
        )
        assert code == 1
        assert "invalid:" in capsys.readouterr().err
        assert not out.exists()


class TestAnalyze:
    @pytest.fixture()
    def small_log(self, tmp_path):
        out = tmp_path / "log.xes"
        run(
            "simulate",
            "--model", MODEL,
            "--variants", VARIANTS_A,
            "--instances", "15",
            "--out", str(out),
        )
        return out

    def test_report_written(self, capsys, small_log, tmp_path):
        out = tmp_path / "pilot.report.json"
        code = run(
            "analyze",
            "--log", str(small_log),
            "--variants", VARIANTS_A,
            "--out", str(out),
        )
        assert code == 0
        report = load_report(out)
        assert report.trace_count == 15
        assert report.scenario == "pilot"  # label derived from the filename
        assert "wrote report for 15 traces" in capsys.readouterr().out

    def test_scenario_flag_wins(self, capsys, small_log, tmp_path):
        out = tmp_path / "pilot.report.json"
        run(
            "analyze",
            "--log", str(small_log),
            "--variants", VARIANTS_A,
            "--scenario", "named",
            "--out", str(out),
        )
        assert load_report(out).scenario == "named"

    def test_side_outputs(self, capsys, small_log, tmp_path):
        out = tmp_path / "r.json"
        csv = tmp_path / "r.csv"
        svg = tmp_path / "r.svg"
        run(
            "analyze",
            "--log", str(small_log),
            "--variants", VARIANTS_A,
            "--out", str(out),
            "--csv", str(csv),
            "--svg", str(svg),
        )
        assert csv.read_text().startswith("activity,averageCost,occurrences")
        assert svg.read_text().startswith("<svg ")

    def test_without_config_strict_rejects_unpriced_drivers(self, capsys, small_log, tmp_path):
        out = tmp_path / "r.json"
        assert run("analyze", "--log", str(small_log), "--out", str(out)) == 1
        assert "no cost for driver" in capsys.readouterr().err

    def test_without_config_lenient_costs_zero(self, capsys, small_log, tmp_path):
        out = tmp_path / "r.json"
        code = run("analyze", "--log", str(small_log), "--lenient", "--out", str(out))
        assert code == 0
        report = load_report(out)
        # no config and no inline values: every driver warns and counts zero
        assert report.average_process_instance_cost == ExactDecimal.parse("0")
        assert report.warning_count > 0
        assert "warning:" in capsys.readouterr().err

    def test_lenient_warnings_on_stderr(self, capsys, tmp_path):
        log = tmp_path / "log.xes"
        log.write_text(
            '<log xes.version="2.0" xmlns="http://www.xes-standard.org/">'
            "<trace>"
            '<string key="concept:name" value="1"/>'
            '<string key="cost:variant" value="standard procedure"/>'
            "<event>"
            '<string key="concept:name" value="a"/>'
            '<string key="lifecycle:transition" value="complete"/>'
            '<date key="time:timestamp" value="2026-07-17T15:35:28+02:00"/>'
            "</event>"
            "</trace></log>"
        )
        out = tmp_path / "r.json"
        code = run(
            "analyze",
            "--log", str(log),
            "--variants", VARIANTS_A,
            "--lenient",
            "--out", str(out),
        )
        assert code == 0
        assert "warning:" in capsys.readouterr().err

    def test_strict_parse_failure_exits_one(self, capsys, tmp_path):
        log = tmp_path / "log.xes"
        log.write_text("<log")
        out = tmp_path / "r.json"
        assert run("analyze", "--log", str(log), "--out", str(out)) == 1
        assert "error:" in capsys.readouterr().err


class TestCompare:
    @pytest.fixture()
    def reports(self, tmp_path):
        paths = []
        for label, variants in (("a", VARIANTS_A), ("b", VARIANTS_B)):
            log = tmp_path / f"{label}.xes"
            run(
                "simulate",
                "--model", MODEL,
                "--variants", variants,
                "--instances", "25",
                "--out", str(log),
            )
            report = tmp_path / f"{label}.report.json"
            run("analyze", "--log", str(log), "--variants", variants, "--out", str(report))
            paths.append(report)
        return paths

    def test_stdout_markdown(self, capsys, reports):
        capsys.readouterr()
        assert run("compare", str(reports[0]), str(reports[1])) == 0
        out = capsys.readouterr().out
        assert out.startswith("# a vs b")
        assert "| activity | a | b | change |" in out

    def test_markdown_file(self, capsys, reports, tmp_path):
        out = tmp_path / "cmp.md"
        assert run("compare", str(reports[0]), str(reports[1]), "--out", str(out)) == 0
        assert out.read_text().startswith("# a vs b")

    def test_json_file(self, capsys, reports, tmp_path):
        out = tmp_path / "cmp.json"
        assert run("compare", str(reports[0]), str(reports[1]), "--out", str(out)) == 0
        data = json.loads(out.read_text())
        assert data["baseline"] == "a"

    def test_unknown_suffix_exits_one(self, capsys, reports, tmp_path):
        out = tmp_path / "cmp.html"
        assert run("compare", str(reports[0]), str(reports[1]), "--out", str(out)) == 1
        assert "use .md or .json" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_report_exits_one(self, capsys, tmp_path):
        assert run("compare", str(tmp_path / "a.json"), str(tmp_path / "b.json")) == 1
        assert "error:" in capsys.readouterr().err


class TestExpect:
    def test_payload(self, capsys, tmp_path):
        out = tmp_path / "expect.json"
        code = run(
            "expect",
            "--model", MODEL,
            "--variants", VARIANTS_A,
            "--out", str(out),
        )
        assert code == 0
        data = json.loads(out.read_text())
        rows = {row["name"]: row for row in data["perActivity"]}
        assert rows["Conduct interview with candidate"]["expectedExecutions"] == "3.43"
        assert rows["Hiring required"]["expectedExecutions"] == "1"
        assert data["variants"] == [{"id": "standard procedure", "frequency": "1"}]
        value = ExactDecimal.parse(data["averageProcessInstanceCost"])
        assert abs(float(value.value) - 7.0134e-4) < 1e-7

    def test_annotation_override(self, capsys, tmp_path):
        out = tmp_path / "expect.json"
        code = run(
            "expect",
            "--model", MODEL,
            "--variants", str(HIRING / "scenario_c.variants.xml"),
            "--annotations", str(HIRING / "scenario_c_behavior.xml"),
            "--out", str(out),
        )
        assert code == 0
        data = json.loads(out.read_text())
        rows = {row["name"]: row for row in data["perActivity"]}
        assert rows["Conduct interview with candidate"]["expectedExecutions"] == "3.92"


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        assert run() == 2

    def test_unknown_flag(self, capsys):
        assert run("validate", "--model", MODEL, "--variants", VARIANTS_A, "--frobnicate") == 2

    def test_missing_required_flag(self, capsys):
        assert run("simulate", "--model", MODEL) == 2

    def test_help_smoke_test(self):
        exe = shutil.which("sopa")
        if exe is None:
            pytest.skip("sopa entry point not installed")
        proc = subprocess.run(
            [exe, "--help"], capture_output=True, text=True, timeout=60
        )
        assert proc.returncode == 0
        assert "simulate" in proc.stdout
