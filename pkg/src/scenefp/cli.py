"""Command-line pipeline: evaluate scenes, render fingerprints, build reports.

Exit codes: 0 ok (including an empty scene selection, which only warns),
1 input error, 2 config error, 3 internal error. Outputs written by a
failing run are removed again so partial files never look like results.
"""

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from . import plots
from .config import RunConfig, dump_effective, load_config, replace
from .errors import ConfigError, InputError
from .fingerprint import (ThresholdCircle, build_fingerprint, classify_scene,
                          confusion, group_area, predict_from_metric,
                          scene_report, threshold_circle, threshold_group_area)
from .framework import (DEFAULT_AXIS_ORDER, EvaluationConfig, MetricGroup,
                        SceneEvaluation, build_default_registry,
                        evaluate_scene)
from .safety_potential import claimed_set, claimed_set_json
from .scene import parse_tracks, scene_at


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenefp",
        description="Criticality metrics and radar fingerprints for recorded traffic scenes.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    specs = (
        ("evaluate", "compute metrics per scene; write JSON reports and a CSV summary"),
        ("fingerprint", "render radar-chart SVGs for selected scenes"),
        ("report", "classify scenes against ground truth and tabulate confusion rates"),
    )
    for name, help_text in specs:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--input", action="append", metavar="CSV",
                         help="track recording; repeat for several files")
        cmd.add_argument("--schema", metavar="NAME",
                         help="input column layout (interaction, ind, generic)")
        cmd.add_argument("--config", metavar="INI", help="config file")
        cmd.add_argument("--time", action="append", type=float, metavar="T",
                         help="scene time in seconds; repeatable")
        cmd.add_argument("--from", dest="t_from", type=float, metavar="T",
                         help="start of a scene-time range")
        cmd.add_argument("--to", dest="t_to", type=float, metavar="T",
                         help="end of a scene-time range")
        cmd.add_argument("--all", action="store_true", default=False,
                         help="every recorded frame")
        cmd.add_argument("--out", metavar="DIR", help="output directory")
        cmd.add_argument("--formats", metavar="LIST",
                         help="comma list out of csv, json, svg")
        cmd.add_argument("--workers", type=int, metavar="N",
                         help="parallel scene evaluation workers")
        cmd.add_argument("--ground-truth", dest="ground_truth", metavar="LIST",
                         help="comma list of ground-truth metrics (default ttc,pet)")
        cmd.add_argument("--threshold", type=float, metavar="SECONDS",
                         help="critical raw threshold for decreasing metrics")
        if name == "evaluate":
            cmd.add_argument("--dump-claimed-sets", dest="dump_claimed_sets",
                             action="store_true", default=False,
                             help="write per-scene claimed-set polygons for debugging")
        if name == "fingerprint":
            cmd.add_argument("--overlay", action="store_true", default=False,
                             help="draw up to 3 selected scenes in one chart")
    return parser


def _parse_name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes: Dict[str, object] = {}
    if args.input:
        changes["inputs"] = list(args.input)
    if args.schema:
        changes["schema"] = args.schema
    if args.time or args.t_from is not None or args.t_to is not None or args.all:
        # any selection flag replaces the file's selection wholesale
        changes["times"] = list(args.time) if args.time else None
        changes["t_from"] = args.t_from
        changes["t_to"] = args.t_to
        changes["all_frames"] = bool(args.all)
    if args.out:
        changes["out_dir"] = args.out
    if args.formats:
        changes["formats"] = tuple(_parse_name_list(args.formats))
    if args.workers is not None:
        changes["workers"] = args.workers
    if getattr(args, "overlay", False):
        changes["overlay"] = True
    if getattr(args, "dump_claimed_sets", False):
        changes["dump_claimed_sets"] = True
    cfg = replace(cfg, **changes)

    fp_changes: Dict[str, object] = {}
    if args.ground_truth:
        names = tuple(_parse_name_list(args.ground_truth))
        for name in names:
            if name not in DEFAULT_AXIS_ORDER:
                raise ConfigError(f"--ground-truth: unknown metric {name!r}")
        fp_changes["ground_truth"] = names
    if args.threshold is not None:
        fp_changes["raw_threshold"] = args.threshold
    if fp_changes:
        cfg = replace(cfg, fingerprint=dataclasses.replace(cfg.fingerprint, **fp_changes))

    if not cfg.inputs:
        raise ConfigError("no input file; pass --input or set [run] input")
    if not cfg.has_selection():
        raise ConfigError("no scene selection; pass --time, --from/--to, or --all")
    return cfg


# ---------------------------------------------------------------------------
# Shared pipeline pieces

class _Outputs:
    """Tracks files written by one run so a failure can retract them."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: List[str] = []

    def path(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        full = os.path.join(self.out_dir, name)
        self.written.append(full)
        return full

    def discard(self) -> None:
        for full in self.written:
            try:
                os.unlink(full)
            except OSError:
                pass


def _stems(paths: Sequence[str]) -> List[str]:
    used = set()
    stems = []
    for path in paths:
        stem = os.path.splitext(os.path.basename(path))[0] or "input"
        candidate, k = stem, 1
        while candidate in used:
            k += 1
            candidate = f"{stem}_{k}"
        used.add(candidate)
        stems.append(candidate)
    return stems


def _time_tag(t: float) -> str:
    return f"{t:.6f}"


def resolve_times(scenario, cfg: RunConfig) -> List[float]:
    """Selected grid times, ascending. Explicit out-of-range times are errors."""
    grid = scenario.grid_times()
    if cfg.all_frames:
        return [float(t) for t in grid]
    if cfg.times is not None:
        snapped = {scene_at(scenario, t).t for t in cfg.times}
        return sorted(snapped)
    lo = cfg.t_from if cfg.t_from is not None else -math.inf
    hi = cfg.t_to if cfg.t_to is not None else math.inf
    return [float(t) for t in grid if lo - 1e-9 <= t <= hi + 1e-9]


def _eval_chunk(path: str, schema: str, eval_config: EvaluationConfig,
                times: Sequence[float]) -> List[SceneEvaluation]:
    """Worker body: re-parses the recording so chunks need no shared state."""
    scenario = parse_tracks(path, schema)
    registry = build_default_registry(eval_config)
    return [evaluate_scene(scenario, t, registry, eval_config) for t in times]


def _evaluate_input(path: str, cfg: RunConfig,
                    times: Sequence[float], scenario) -> List[SceneEvaluation]:
    if cfg.workers == 1 or len(times) <= 1:
        registry = build_default_registry(cfg.evaluation)
        return [evaluate_scene(scenario, t, registry, cfg.evaluation) for t in times]
    n = min(cfg.workers, len(times))
    size = -(-len(times) // n)
    chunks = [times[i * size:(i + 1) * size] for i in range(n)]
    results: List[SceneEvaluation] = []
    with ProcessPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(_eval_chunk, path, cfg.schema, cfg.evaluation, chunk)
                   for chunk in chunks if chunk]
        for future in futures:  # submission order keeps results time-sorted
            results.extend(future.result())
    return results


def _collect(cfg: RunConfig) -> List[Tuple[str, object, List[SceneEvaluation]]]:
    """Parse and evaluate every input; returns (stem, scenario, evaluations)."""
    work = []
    for path, stem in zip(cfg.inputs, _stems(cfg.inputs)):
        scenario = parse_tracks(path, cfg.schema)
        times = resolve_times(scenario, cfg)
        evaluations = _evaluate_input(path, cfg, times, scenario)
        work.append((stem, scenario, evaluations))
    return work


def _axis_layout(cfg: RunConfig) -> Tuple[List[str], Dict[str, object], ThresholdCircle]:
    registry = build_default_registry(cfg.evaluation)
    by_name = {m.descriptor.name: m.descriptor for m in registry}
    axis_order = list(cfg.fingerprint.axes) if cfg.fingerprint.axes else list(by_name)
    missing = [name for name in axis_order if name not in by_name]
    if missing:
        raise ConfigError(f"fingerprint axes not enabled in this run: {missing}")
    descriptors = [by_name[name] for name in axis_order]
    circle = threshold_circle(descriptors,
                              raw_threshold=cfg.fingerprint.raw_threshold,
                              radius_threshold=cfg.fingerprint.radius_threshold,
                              raw_overrides=cfg.fingerprint.thresholds)
    labels = {name: by_name[name].label for name in axis_order}
    return axis_order, labels, circle


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(obj, handle, indent=2, allow_nan=False)
        handle.write("\n")


def _cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def _warn_empty(cfg: RunConfig) -> int:
    print("warning: no scenes selected; nothing written", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Commands

def cmd_evaluate(cfg: RunConfig) -> int:
    work = _collect(cfg)
    if not any(evals for _, _, evals in work):
        return _warn_empty(cfg)
    axis_order, labels, circle = _axis_layout(cfg)
    fp_cfg = cfg.fingerprint

    outputs = _Outputs(cfg.out_dir)
    try:
        dump_effective(cfg, outputs.path("config_effective.ini"))
        groups_in_order: List[MetricGroup] = []
        rows = []
        for stem, scenario, evaluations in work:
            for evaluation in evaluations:
                fingerprint = build_fingerprint(evaluation, axis_order)
                if not groups_in_order:
                    for axis in fingerprint.axes:
                        if axis.group not in groups_in_order:
                            groups_in_order.append(axis.group)
                report = scene_report(evaluation, fingerprint, circle,
                                      fp_cfg.ground_truth, fp_cfg.raw_threshold)
                tag = _time_tag(evaluation.t)
                if "json" in cfg.formats:
                    _write_json(outputs.path(f"scene_{stem}_t{tag}.json"), report)
                if "svg" in cfg.formats:
                    plots.render_fingerprints(
                        [fingerprint], outputs.path(f"fingerprint_{stem}_t{tag}.svg"),
                        threshold=circle, labels=labels, title=stem)
                if cfg.dump_claimed_sets:
                    scene = scene_at(scenario, evaluation.t)
                    dump = {"t": evaluation.t, "agents": [
                        claimed_set_json(claimed_set(scenario.tracks[s.agent_id],
                                                     scene.t, cfg.evaluation.sp))
                        for s in sorted(scene.vehicles(cfg.evaluation.include_vrus),
                                        key=lambda s: s.agent_id)]}
                    _write_json(outputs.path(f"claimed_sets_{stem}_t{tag}.json"), dump)
                rows.append((stem, evaluation, fingerprint, report))

        if "csv" in cfg.formats:
            header = ["input", "t"]
            for name in axis_order:
                header += [f"{name}_raw", f"{name}_norm"]
            header.append("area_total")
            header += [f"area_{g.value}" for g in groups_in_order]
            header += ["threshold_area", "critical_prediction", "ground_truth"]
            with open(outputs.path("summary.csv"), "w", encoding="utf-8",
                      newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(header)
                for stem, evaluation, fingerprint, report in rows:
                    row = [stem, _cell(evaluation.t)]
                    for name in axis_order:
                        value = evaluation.values[name]
                        row += [_cell(value.raw), _cell(value.normalized)]
                    row.append(_cell(fingerprint.area_total))
                    row += [_cell(fingerprint.area_by_group.get(g, 0.0))
                            for g in groups_in_order]
                    row += [_cell(report["threshold_area"]),
                            _cell(report["critical_prediction"]),
                            _cell(report["ground_truth"])]
                    writer.writerow(row)
    except BaseException:
        outputs.discard()
        raise
    print(f"wrote {len(rows)} scene(s) to {cfg.out_dir}")
    return 0


def cmd_fingerprint(cfg: RunConfig) -> int:
    work = _collect(cfg)
    scenes = [(stem, evaluation) for stem, _, evals in work for evaluation in evals]
    if not scenes:
        return _warn_empty(cfg)
    axis_order, labels, circle = _axis_layout(cfg)
    if cfg.overlay and len(scenes) > plots.MAX_OVERLAY:
        raise ConfigError(f"--overlay supports at most {plots.MAX_OVERLAY} scenes, "
                          f"selection has {len(scenes)}")

    outputs = _Outputs(cfg.out_dir)
    try:
        dump_effective(cfg, outputs.path("config_effective.ini"))
        fingerprints = [(stem, build_fingerprint(evaluation, axis_order))
                        for stem, evaluation in scenes]
        if cfg.overlay:
            legend = [f"{stem} t={fp.t:g}s" for stem, fp in fingerprints]
            plots.render_fingerprints([fp for _, fp in fingerprints],
                                      outputs.path("fingerprint_overlay.svg"),
                                      threshold=circle, labels=labels,
                                      legend=legend)
            count = 1
        else:
            for stem, fingerprint in fingerprints:
                tag = _time_tag(fingerprint.t)
                plots.render_fingerprints(
                    [fingerprint], outputs.path(f"fingerprint_{stem}_t{tag}.svg"),
                    threshold=circle, labels=labels, title=stem)
            count = len(fingerprints)
    except BaseException:
        outputs.discard()
        raise
    print(f"wrote {count} chart(s) to {cfg.out_dir}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    work = _collect(cfg)
    evaluations = [evaluation for _, _, evals in work for evaluation in evals]
    if not evaluations:
        return _warn_empty(cfg)
    axis_order, labels, circle = _axis_layout(cfg)
    fp_cfg = cfg.fingerprint

    fingerprints = [build_fingerprint(evaluation, axis_order)
                    for evaluation in evaluations]
    actual = [classify_scene(evaluation, fp_cfg.ground_truth, fp_cfg.raw_threshold)
              for evaluation in evaluations]

    tq_group = MetricGroup.TRAFFIC_QUALITY
    tq_limit = threshold_group_area(circle, tq_group)
    has_tq = any(axis.group is tq_group for axis in fingerprints[0].axes)

    predictions: Dict[str, List[bool]] = {}
    if "safety_potential" in evaluations[0].values:
        predictions["safety_potential"] = [
            predict_from_metric(evaluation, "safety_potential",
                                fp_cfg.radius_threshold)
            for evaluation in evaluations]
    if has_tq:
        predictions["traffic_quality_area"] = [
            group_area(fingerprint, tq_group) >= tq_limit
            for fingerprint in fingerprints]
    predictions["fingerprint_area"] = [
        fingerprint.area_total >= circle.area for fingerprint in fingerprints]

    counts = {name: confusion(predicted, actual)
              for name, predicted in predictions.items()}
    first = next(iter(counts.values()))

    outputs = _Outputs(cfg.out_dir)
    try:
        dump_effective(cfg, outputs.path("config_effective.ini"))
        if "csv" in cfg.formats:
            with open(outputs.path("report.csv"), "w", encoding="utf-8",
                      newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(["metric", "tp", "tn", "fp", "fn",
                                 "sensitivity", "specificity",
                                 "critical_fraction", "non_critical_fraction"])
                for name, c in counts.items():
                    writer.writerow([name, _cell(c.tp), _cell(c.tn), _cell(c.fp),
                                     _cell(c.fn), _cell(c.sensitivity),
                                     _cell(c.specificity),
                                     _cell(c.critical_fraction),
                                     _cell(c.non_critical_fraction)])
        if "json" in cfg.formats:
            _write_json(outputs.path("report.json"), {
                "scenes": len(evaluations),
                "critical_fraction": first.critical_fraction,
                "non_critical_fraction": first.non_critical_fraction,
                "ground_truth": list(fp_cfg.ground_truth),
                "raw_threshold": fp_cfg.raw_threshold,
                "metrics": {name: {
                    "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn,
                    "sensitivity": c.sensitivity, "specificity": c.specificity,
                } for name, c in counts.items()},
            })
        if "svg" in cfg.formats:
            plots.render_confusion(counts, outputs.path("confusion.svg"),
                                   title=f"{len(evaluations)} scenes")
    except BaseException:
        outputs.discard()
        raise

    def show(value: Optional[float]) -> str:
        return "n/a" if value is None else "%.3f" % value

    for name, c in counts.items():
        print(f"{name}: sensitivity {show(c.sensitivity)} "
              f"specificity {show(c.specificity)}")
    print(f"critical fraction {first.critical_fraction:.3f} "
          f"over {len(evaluations)} scene(s)")
    return 0


_COMMANDS = {
    "evaluate": cmd_evaluate,
    "fingerprint": cmd_fingerprint,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
