"""CLI subcommands and exit codes."""

import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from pchart.chartio import serialize_chart
from pchart.cli import main

from fixtures import coin, counter_bad, counter_guarded, retry, toggle


@pytest.fixture
def charts(tmp_path):
    for make in (toggle, coin, retry, counter_bad, counter_guarded):
        chart = make()
        (tmp_path / f"{chart.name}.pchart").write_text(serialize_chart(chart))
    return tmp_path


def test_validate_ok(charts, capsys):
    code = main(["validate", str(charts / "toggle.pchart")])
    assert code == 0
    assert "ok" in capsys.readouterr().out


def test_validate_bad_document(tmp_path, capsys):
    bad = tmp_path / "bad.pchart"
    bad.write_text('{"formatVersion": 1, "name": "x", "root": 0, "nextId": 1, '
                   '"states": {"0": {"name": "root", "kind": "xor", "children": [], '
                   '"initial": 9, "box": [0, 0, 10, 10]}}}')
    code = main(["validate", str(bad)])
    assert code == 1


def test_compile_prints_golden(charts, capsys):
    code = main(["compile", str(charts / "toggle.pchart")])
    assert code == 0
    golden = (Path(__file__).parent / "golden" / "toggle.gc.txt").read_text()
    assert capsys.readouterr().out == golden


def test_compile_missing_file_usage_error(capsys):
    code = main(["compile", "nonexistent.pchart"])
    assert code == 2


def test_check_violation_exit_one(charts, capsys):
    code = main(["check", str(charts / "counter_bad.pchart")])
    assert code == 1
    out = capsys.readouterr().out
    assert "violation" in out and "witness" in out


def test_check_clean_exit_zero(charts, capsys):
    code = main(["check", str(charts / "counter.pchart")])
    assert code == 0


def test_query_pmax(charts, capsys):
    code = main(["query", str(charts / "coin.pchart"), "--kind", "Pmax",
                 "--target", "Goal"])
    assert code == 0
    assert capsys.readouterr().out.strip() == "0.5"


def test_query_emin(charts, capsys):
    code = main(["query", str(charts / "retry.pchart"), "--kind", "Emin",
                 "--target", "Goal"])
    assert code == 0
    assert float(capsys.readouterr().out) == pytest.approx(2.0, abs=1e-6)


def test_query_unknown_target(charts, capsys):
    code = main(["query", str(charts / "coin.pchart"), "--kind", "Pmax",
                 "--target", "Nowhere"])
    assert code == 2


def test_query_not_almost_sure_exit_one(charts):
    code = main(["query", str(charts / "coin.pchart"), "--kind", "Emin",
                 "--target", "Goal"])
    assert code == 1


def test_codegen_c(charts, tmp_path, capsys):
    out = tmp_path / "gen"
    code = main(["codegen", str(charts / "toggle.pchart"), "--target", "c",
                 "--out", str(out)])
    assert code == 0
    assert (out / "toggle.c").is_file()
    assert (out / "toggle.h").is_file()
    assert (out / "toggle_harness.c").is_file()


def test_codegen_prism_matches_golden(charts, tmp_path):
    out = tmp_path / "gen"
    code = main(["codegen", str(charts / "coin.pchart"), "--target", "prism",
                 "--out", str(out)])
    assert code == 0
    golden = Path(__file__).parent / "golden" / "prism"
    assert (out / "coin.prism").read_text() == (golden / "coin.prism").read_text()
    assert (out / "coin.props").read_text() == (golden / "coin.props").read_text()


def test_codegen_c_probabilistic_rejected(charts, tmp_path):
    code = main(["codegen", str(charts / "coin.pchart"), "--target", "c",
                 "--out", str(tmp_path / "gen")])
    assert code == 1


def test_render(charts, tmp_path):
    out = tmp_path / "toggle.svg"
    code = main(["render", str(charts / "toggle.pchart"), "--out", str(out)])
    assert code == 0
    ET.fromstring(out.read_text())


def test_usage_error_bad_subcommand():
    assert main(["frobnicate"]) == 2


def test_usage_error_missing_args():
    assert main(["query", "x.pchart"]) == 2


def test_serve_missing_directory(capsys):
    assert main(["serve", "/definitely/not/here"]) == 2
