import csv
import json
import math
import os

import pytest

from scenefp.cli import main
from scenefp.fingerprint import threshold_circle
from scenefp.framework import build_default_registry
from scenefp.scene import write_tracks

from conftest import scenario_of, straight_track


@pytest.fixture
def recording(tmp_path):
    """Closing pair on disk: ttc 2.6 s at t=0 dropping to 0.6 s at t=2."""
    scn = scenario_of(straight_track("f", x0=0.0, vx=15.0, duration=3.0),
                      straight_track("l", x0=30.0, vx=5.0, duration=3.0))
    path = tmp_path / "closing.csv"
    write_tracks(scn, str(path))
    return str(path)


@pytest.fixture
def crossing_recording(tmp_path):
    scn = scenario_of(straight_track("a", x0=-15.0, vx=10.0, duration=4.0),
                      straight_track("b", y0=-25.0, vy=10.0, duration=4.0))
    path = tmp_path / "crossing.csv"
    write_tracks(scn, str(path))
    return str(path)


def run(*argv):
    return main(list(argv))


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def listdir(out):
    return sorted(os.listdir(out))


# ---------------------------------------------------------------------------
# evaluate

def test_evaluate_writes_all_formats(recording, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--time", "1.0", "--out", out) == 0
    assert capsys.readouterr().out.strip() == f"wrote 1 scene(s) to {out}"
    assert listdir(out) == ["config_effective.ini",
                            "fingerprint_closing_t1.000000.svg",
                            "scene_closing_t1.000000.json",
                            "summary.csv"]

    rows = read_csv(os.path.join(out, "summary.csv"))
    header, row = rows
    assert header[:2] == ["input", "t"]
    assert header[2:4] == ["tq_macro_raw", "tq_macro_norm"]
    assert header[-3:] == ["threshold_area", "critical_prediction", "ground_truth"]
    cells = dict(zip(header, row))
    assert cells["input"] == "closing"
    assert cells["t"] == "1"
    assert cells["pet_raw"] == "NA"           # same-lane pair has no zone
    assert cells["pet_norm"] == "NA"
    assert float(cells["ttc_raw"]) == pytest.approx(1.6)
    assert cells["ground_truth"] == "false"
    assert cells["critical_prediction"] in ("true", "false")
    assert float(cells["threshold_area"]) == pytest.approx(math.exp(-3.0))

    with open(os.path.join(out, "scene_closing_t1.000000.json")) as handle:
        report = json.load(handle)
    assert report["t"] == 1.0
    pet = next(a for a in report["axes"] if a["name"] == "pet")
    assert pet["raw"] is None


def test_evaluate_format_subset(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--time", "1.0", "--out", out, "--formats", "csv") == 0
    assert listdir(out) == ["config_effective.ini", "summary.csv"]


def test_evaluate_dump_claimed_sets(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--time", "0.0", "--out", out, "--formats", "csv",
               "--dump-claimed-sets") == 0
    path = os.path.join(out, "claimed_sets_closing_t0.000000.json")
    with open(path) as handle:
        dump = json.load(handle)
    assert dump["t"] == 0.0
    assert [a["agent_id"] for a in dump["agents"]] == ["f", "l"]
    assert len(dump["agents"][0]["entries"]) == 41


def test_evaluate_all_frames_row_count(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--all", "--out", out, "--formats", "csv") == 0
    rows = read_csv(os.path.join(out, "summary.csv"))
    assert len(rows) == 1 + 31            # header + 3 s at 10 Hz


def test_evaluate_range_selection(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--from", "1.0", "--to", "1.5", "--out", out,
               "--formats", "csv") == 0
    rows = read_csv(os.path.join(out, "summary.csv"))
    times = [float(r[1]) for r in rows[1:]]
    assert times == pytest.approx([1.0, 1.1, 1.2, 1.3, 1.4, 1.5])


def test_evaluate_threshold_override(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--time", "1.0", "--out", out, "--formats", "csv",
               "--threshold", "3.0") == 0
    rows = read_csv(os.path.join(out, "summary.csv"))
    cells = dict(zip(rows[0], rows[1]))
    descriptors = [m.descriptor for m in build_default_registry()]
    expected = threshold_circle(descriptors, raw_threshold=3.0).area
    assert float(cells["threshold_area"]) == pytest.approx(expected)


def test_evaluate_stem_collision(tmp_path, recording):
    nested = tmp_path / "other"
    nested.mkdir()
    scn = scenario_of(straight_track("x", vx=10.0, duration=1.0))
    second = nested / "closing.csv"
    write_tracks(scn, str(second))

    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--input", str(second),
               "--schema", "generic", "--time", "0.5", "--out", out,
               "--formats", "csv") == 0
    rows = read_csv(os.path.join(out, "summary.csv"))
    assert [r[0] for r in rows[1:]] == ["closing", "closing_2"]


# ---------------------------------------------------------------------------
# selection and error handling

def test_empty_selection_warns_and_writes_nothing(recording, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--from", "90.0", "--to", "99.0", "--out", out) == 0
    assert "no scenes selected" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_explicit_time_out_of_range(recording, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--time", "99.0", "--out", out) == 1
    assert "99" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_missing_input_file(tmp_path, capsys):
    assert run("evaluate", "--input", str(tmp_path / "nope.csv"),
               "--schema", "generic", "--all",
               "--out", str(tmp_path / "out")) == 1
    assert "error:" in capsys.readouterr().err


def test_wrong_schema_is_input_error_exit(recording, tmp_path, capsys):
    # interaction schema expects a timestamp_ms column this file lacks
    code = run("evaluate", "--input", recording, "--schema", "interaction",
               "--all", "--out", str(tmp_path / "out"))
    assert code == 1
    assert "column" in capsys.readouterr().err


def test_no_selection_is_config_error(recording, tmp_path, capsys):
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--out", str(tmp_path / "out")) == 2
    assert "selection" in capsys.readouterr().err


def test_no_input_is_config_error(tmp_path, capsys):
    assert run("evaluate", "--all", "--out", str(tmp_path / "out")) == 2
    assert "input" in capsys.readouterr().err


def test_unknown_ground_truth_metric(recording, tmp_path):
    assert run("report", "--input", recording, "--schema", "generic",
               "--all", "--out", str(tmp_path / "out"),
               "--ground-truth", "warp") == 2


def test_unknown_format(recording, tmp_path):
    assert run("evaluate", "--input", recording, "--schema", "generic",
               "--all", "--out", str(tmp_path / "out"),
               "--formats", "csv,pdf") == 2


def test_failure_retracts_partial_outputs(recording, tmp_path, monkeypatch, capsys):
    out = str(tmp_path / "out")

    def boom(*args, **kwargs):
        raise RuntimeError("render failed")

    import scenefp.cli as cli_module
    monkeypatch.setattr(cli_module.plots, "render_fingerprints", boom)
    code = run("evaluate", "--input", recording, "--schema", "generic",
               "--time", "1.0", "--out", out)
    assert code == 3
    assert "internal error" in capsys.readouterr().err
    # the partially written json/config files were removed again
    assert listdir(out) == []


# ---------------------------------------------------------------------------
# fingerprint

def test_fingerprint_per_scene_charts(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("fingerprint", "--input", recording, "--schema", "generic",
               "--time", "0.0", "--time", "2.0", "--out", out) == 0
    assert listdir(out) == ["config_effective.ini",
                            "fingerprint_closing_t0.000000.svg",
                            "fingerprint_closing_t2.000000.svg"]


def test_fingerprint_overlay(recording, crossing_recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("fingerprint", "--input", recording,
               "--input", crossing_recording, "--schema", "generic",
               "--time", "1.0", "--out", out, "--overlay") == 0
    assert listdir(out) == ["config_effective.ini", "fingerprint_overlay.svg"]


def test_fingerprint_overlay_limit(recording, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run("fingerprint", "--input", recording, "--schema", "generic",
               "--all", "--out", out, "--overlay") == 2
    assert "at most" in capsys.readouterr().err
    assert not os.path.exists(out)


# ---------------------------------------------------------------------------
# report

def test_report_outputs(recording, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run("report", "--input", recording, "--schema", "generic",
               "--all", "--out", out) == 0
    assert listdir(out) == ["config_effective.ini", "confusion.svg",
                            "report.csv", "report.json"]

    rows = read_csv(os.path.join(out, "report.csv"))
    assert rows[0][:5] == ["metric", "tp", "tn", "fp", "fn"]
    names = [r[0] for r in rows[1:]]
    assert names == ["safety_potential", "traffic_quality_area", "fingerprint_area"]
    for row in rows[1:]:
        fractions = [float(c) for c in row[1:5]]
        assert all(0.0 <= f <= 1.0 for f in fractions)
        assert sum(fractions) == pytest.approx(1.0)

    with open(os.path.join(out, "report.json")) as handle:
        report = json.load(handle)
    assert report["scenes"] == 31
    assert report["ground_truth"] == ["ttc", "pet"]
    assert set(report["metrics"]) == set(names)

    console = capsys.readouterr().out
    assert "fingerprint_area: sensitivity" in console
    assert "critical fraction" in console


def test_report_ground_truth_flag(recording, tmp_path):
    out = str(tmp_path / "out")
    assert run("report", "--input", recording, "--schema", "generic",
               "--all", "--out", out, "--ground-truth", "distance",
               "--formats", "json") == 0
    with open(os.path.join(out, "report.json")) as handle:
        assert json.load(handle)["ground_truth"] == ["distance"]


# ---------------------------------------------------------------------------
# config file interplay and determinism

def test_config_file_with_cli_overrides(recording, tmp_path):
    conf = tmp_path / "run.ini"
    conf.write_text(f"[run]\ninput = {recording}\nschema = generic\n"
                    "times = 0.0\nformats = csv\nout_dir = ignored\n",
                    encoding="utf-8")
    out = str(tmp_path / "out")
    # CLI time selection replaces the file's, --out replaces out_dir
    assert run("evaluate", "--config", str(conf), "--time", "2.0",
               "--out", out) == 0
    rows = read_csv(os.path.join(out, "summary.csv"))
    assert [r[1] for r in rows[1:]] == ["2"]
    assert not os.path.exists("ignored")


def test_rerun_is_byte_identical(recording, tmp_path):
    out = str(tmp_path / "out")
    args = ("evaluate", "--input", recording, "--schema", "generic",
            "--time", "1.0", "--out", out)
    assert run(*args) == 0
    snapshot = {name: open(os.path.join(out, name), "rb").read()
                for name in listdir(out)}
    assert run(*args) == 0
    for name in listdir(out):
        with open(os.path.join(out, name), "rb") as handle:
            assert handle.read() == snapshot[name], name


def test_workers_do_not_change_results(recording, tmp_path):
    serial = str(tmp_path / "serial")
    parallel = str(tmp_path / "parallel")
    base = ("evaluate", "--input", recording, "--schema", "generic",
            "--all", "--formats", "csv,json")
    assert run(*base, "--out", serial) == 0
    assert run(*base, "--out", parallel, "--workers", "3") == 0

    names_s = [n for n in listdir(serial) if n != "config_effective.ini"]
    names_p = [n for n in listdir(parallel) if n != "config_effective.ini"]
    assert names_s == names_p
    for name in names_s:
        with open(os.path.join(serial, name), "rb") as a, \
                open(os.path.join(parallel, name), "rb") as b:
            assert a.read() == b.read(), name
