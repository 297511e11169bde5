"""Standalone CLI surface of the reporting tool."""

from pathlib import Path

from fannsreport.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def test_qps_recall_subcommand(tmp_path, capsys):
    rc = main([
        "qps-recall",
        "--in", str(FIXTURES / "raw_caps.csv"),
        "--in", str(FIXTURES / "raw_ung.csv"),
        "--out-dir", str(tmp_path / "figs"),
    ])
    assert rc == 0
    printed = capsys.readouterr().out.strip().splitlines()
    assert printed and all(Path(line).exists() for line in printed)


def test_index_scatter_subcommand(tmp_path):
    rc = main([
        "index-scatter",
        "--in", str(FIXTURES / "builds.csv"),
        "--out-dir", str(tmp_path / "figs"),
        "--color-param", "h",
    ])
    assert rc == 0


def test_schema_error_is_diagnosed(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("foo,bar\n1,2\n")
    rc = main(["qps-recall", "--in", str(bad), "--out-dir", str(tmp_path)])
    assert rc == 1
    assert "error" in capsys.readouterr().err
