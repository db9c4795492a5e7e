import hashlib

import pytest

from scenefp.fingerprint import (ConfusionCounts, build_fingerprint,
                                 threshold_circle)
from scenefp.framework import build_default_registry, evaluate_scene
from scenefp.plots import MAX_OVERLAY, render_confusion, render_fingerprints

from conftest import scenario_of, straight_track


def sample_fingerprint(t=0.0, offset=0.0):
    scn = scenario_of(straight_track("f", x0=offset, vx=15.0),
                      straight_track("l", x0=offset + 30.0, vx=5.0))
    return build_fingerprint(evaluate_scene(scn, t))


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def test_render_single_fingerprint(tmp_path):
    out = tmp_path / "fp.svg"
    render_fingerprints([sample_fingerprint()], str(out))
    body = out.read_text()
    assert body.lstrip().startswith("<?xml")
    assert "<svg" in body


def test_render_is_byte_deterministic(tmp_path):
    fp = sample_fingerprint()
    circle = threshold_circle([m.descriptor for m in build_default_registry()])
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    render_fingerprints([fp], str(a), threshold=circle, title="scene")
    render_fingerprints([fp], str(b), threshold=circle, title="scene")
    assert sha256(a) == sha256(b)


def test_render_overlay_limit(tmp_path):
    fps = [sample_fingerprint(offset=10.0 * i) for i in range(MAX_OVERLAY + 1)]
    with pytest.raises(ValueError):
        render_fingerprints(fps, str(tmp_path / "x.svg"))
    render_fingerprints(fps[:MAX_OVERLAY], str(tmp_path / "ok.svg"),
                        legend=[f"s{i}" for i in range(MAX_OVERLAY)])
    assert (tmp_path / "ok.svg").exists()


def test_render_empty_rejected(tmp_path):
    with pytest.raises(ValueError):
        render_fingerprints([], str(tmp_path / "x.svg"))


def test_render_mismatched_layouts_rejected(tmp_path):
    full = sample_fingerprint()
    scn = scenario_of(straight_track("f", vx=15.0),
                      straight_track("l", x0=30.0, vx=5.0))
    from scenefp.framework import EvaluationConfig
    small = build_fingerprint(
        evaluate_scene(scn, 0.0, config=EvaluationConfig(enabled=["ttc", "distance", "wttc"])))
    with pytest.raises(ValueError):
        render_fingerprints([full, small], str(tmp_path / "x.svg"))


def test_render_threshold_must_cover_layout(tmp_path):
    fp = sample_fingerprint()
    partial = threshold_circle([m.descriptor for m in build_default_registry()][:3])
    with pytest.raises(ValueError):
        render_fingerprints([fp], str(tmp_path / "x.svg"), threshold=partial)


def test_render_confusion_chart(tmp_path):
    counts = {"ttc": ConfusionCounts(0.4, 0.3, 0.2, 0.1),
              "none_rates": ConfusionCounts(0.0, 1.0, 0.0, 0.0)}
    out = tmp_path / "conf.svg"
    render_confusion(counts, str(out))
    assert out.exists()
    render_confusion(counts, str(tmp_path / "conf2.svg"))
    assert sha256(out) == sha256(tmp_path / "conf2.svg")
    with pytest.raises(ValueError):
        render_confusion({}, str(tmp_path / "x.svg"))
