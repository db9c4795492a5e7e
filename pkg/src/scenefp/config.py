"""Run configuration: INI loading, validation, and effective-config dumps.

Every value that influences a run lives in one RunConfig so the CLI can
write the complete effective configuration next to its outputs. Unknown
sections or keys in a config file are errors, not warnings; silently
ignored typos in threshold values are how wrong numbers end up in reports.
"""

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError
from .framework import AGGREGATIONS, DEFAULT_AXIS_ORDER, EvaluationConfig
from .pairwise import PairwiseConfig
from .safety_potential import SafetyProcedureParams
from .scene import SCHEMAS
from .traffic_quality import TqConfig

OUTPUT_FORMATS = ("csv", "json", "svg")


@dataclass
class FingerprintConfig:
    axes: Optional[List[str]] = None          # None = registry order
    raw_threshold: float = 1.5                # s, critical raw value for decreasing metrics
    radius_threshold: float = math.exp(-1.5)  # radius for increasing metrics
    thresholds: Dict[str, float] = field(default_factory=dict)  # per-metric raw overrides
    ground_truth: Tuple[str, ...] = ("ttc", "pet")

    def __post_init__(self):
        if self.raw_threshold <= 0 or not 0 < self.radius_threshold <= 1:
            raise ConfigError("fingerprint thresholds out of range")
        for name, value in self.thresholds.items():
            if value < 0:
                raise ConfigError(f"threshold for {name} must be non-negative")
        if not self.ground_truth:
            raise ConfigError("at least one ground-truth metric is required")


@dataclass
class RunConfig:
    inputs: List[str] = field(default_factory=list)
    schema: str = "interaction"
    times: Optional[List[float]] = None     # explicit scene times, seconds
    t_from: Optional[float] = None
    t_to: Optional[float] = None
    all_frames: bool = False
    out_dir: str = "out"
    formats: Tuple[str, ...] = OUTPUT_FORMATS
    overlay: bool = False
    workers: int = 1
    dump_claimed_sets: bool = False
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    fingerprint: FingerprintConfig = field(default_factory=FingerprintConfig)

    def __post_init__(self):
        if self.schema not in SCHEMAS:
            raise ConfigError(f"unknown input schema {self.schema!r}, "
                              f"expected one of {sorted(SCHEMAS)}")
        if not self.formats:
            raise ConfigError("at least one output format is required")
        for fmt in self.formats:
            if fmt not in OUTPUT_FORMATS:
                raise ConfigError(f"unknown output format {fmt!r}, "
                                  f"expected one of {list(OUTPUT_FORMATS)}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.times is not None and (self.t_from is not None or self.t_to is not None
                                       or self.all_frames):
            raise ConfigError("explicit scene times cannot be combined with a range or --all")
        if self.all_frames and (self.t_from is not None or self.t_to is not None):
            raise ConfigError("--all cannot be combined with a time range")
        if (self.t_from is not None and self.t_to is not None
                and self.t_from > self.t_to):
            raise ConfigError("time range start exceeds its end")

    def has_selection(self) -> bool:
        return (self.times is not None or self.t_from is not None
                or self.t_to is not None or self.all_frames)


# section -> (target dataclass, accepted keys)
_SECTION_FIELDS = {
    "traffic_quality": (TqConfig, ("a_brake", "t_react", "nu_ref", "a_ref",
                                   "window", "eps_speed")),
    "safety_potential": (SafetyProcedureParams, ("a_min", "a_slow", "t_react",
                                                 "horizon", "dt_proc", "margin",
                                                 "rho_scale")),
    "pairwise": (PairwiseConfig, ("lateral_gate", "heading_gate", "horizon")),
}


def _parse_float(section: str, key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite")
    return value


def _parse_int(section: str, key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {text!r}") from None


def _parse_bool(section: str, key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: not a boolean: {text!r}")


def _parse_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _build_params(section: str, cls, keys, items: Dict[str, str]):
    kwargs = {}
    for key, text in items.items():
        if key not in keys:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        kwargs[key] = _parse_float(section, key, text)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _parse_run_section(items: Dict[str, str], run_kwargs: Dict[str, object]) -> None:
    for key, text in items.items():
        if key == "input":
            run_kwargs["inputs"] = _parse_list(text)
        elif key == "schema":
            run_kwargs["schema"] = text.strip()
        elif key == "times":
            run_kwargs["times"] = [_parse_float("run", key, part)
                                   for part in _parse_list(text)]
        elif key == "t_from":
            run_kwargs["t_from"] = _parse_float("run", key, text)
        elif key == "t_to":
            run_kwargs["t_to"] = _parse_float("run", key, text)
        elif key == "all":
            run_kwargs["all_frames"] = _parse_bool("run", key, text)
        elif key == "out_dir":
            run_kwargs["out_dir"] = text.strip()
        elif key == "formats":
            run_kwargs["formats"] = tuple(_parse_list(text))
        elif key == "overlay":
            run_kwargs["overlay"] = _parse_bool("run", key, text)
        elif key == "workers":
            run_kwargs["workers"] = _parse_int("run", key, text)
        elif key == "dump_claimed_sets":
            run_kwargs["dump_claimed_sets"] = _parse_bool("run", key, text)
        else:
            raise ConfigError(f"[run] unknown key {key!r}")


def load_config(path: str) -> RunConfig:
    """Parse an INI config file into a RunConfig. Missing sections keep defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None

    run_kwargs: Dict[str, object] = {}
    eval_kwargs: Dict[str, object] = {}
    fp_kwargs: Dict[str, object] = {}

    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "run":
            _parse_run_section(items, run_kwargs)
        elif section == "framework":
            for key, text in items.items():
                if key == "include_vrus":
                    eval_kwargs["include_vrus"] = _parse_bool(section, key, text)
                elif key == "enabled":
                    eval_kwargs["enabled"] = _parse_list(text)
                else:
                    raise ConfigError(f"[framework] unknown key {key!r}")
        elif section in _SECTION_FIELDS:
            cls, keys = _SECTION_FIELDS[section]
            field_name = {"traffic_quality": "tq", "safety_potential": "sp",
                          "pairwise": "pairwise"}[section]
            eval_kwargs[field_name] = _build_params(section, cls, keys, items)
        elif section == "alpha":
            alpha = {}
            for key, text in items.items():
                _require_metric(section, key)
                alpha[key] = _parse_float(section, key, text)
            eval_kwargs["alpha"] = alpha
        elif section == "aggregation":
            aggregation = {}
            for key, text in items.items():
                _require_metric(section, key)
                how = text.strip().lower()
                if how not in AGGREGATIONS:
                    raise ConfigError(f"[aggregation] {key}: unknown mode {text!r}")
                aggregation[key] = how
            eval_kwargs["aggregation"] = aggregation
        elif section == "thresholds":
            thresholds = {}
            for key, text in items.items():
                _require_metric(section, key)
                thresholds[key] = _parse_float(section, key, text)
            fp_kwargs["thresholds"] = thresholds
        elif section == "fingerprint":
            for key, text in items.items():
                if key == "axes":
                    fp_kwargs["axes"] = _parse_list(text)
                elif key == "raw_threshold":
                    fp_kwargs["raw_threshold"] = _parse_float(section, key, text)
                elif key == "radius_threshold":
                    fp_kwargs["radius_threshold"] = _parse_float(section, key, text)
                elif key == "ground_truth":
                    fp_kwargs["ground_truth"] = tuple(_parse_list(text))
                else:
                    raise ConfigError(f"[fingerprint] unknown key {key!r}")
        else:
            raise ConfigError(f"unknown config section [{section}]")

    for name in eval_kwargs.get("enabled") or []:
        _require_metric("framework", name)
    for name in fp_kwargs.get("axes") or []:
        _require_metric("fingerprint", name)
    for name in fp_kwargs.get("ground_truth") or []:
        _require_metric("fingerprint", name)

    run_kwargs["evaluation"] = EvaluationConfig(**eval_kwargs)
    run_kwargs["fingerprint"] = FingerprintConfig(**fp_kwargs)
    return RunConfig(**run_kwargs)


def _require_metric(section: str, name: str) -> None:
    if name not in DEFAULT_AXIS_ORDER:
        raise ConfigError(f"[{section}] unknown metric {name!r}, "
                          f"expected one of {list(DEFAULT_AXIS_ORDER)}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_effective(config: RunConfig, path: str) -> None:
    """Write the complete effective configuration, defaults included.

    Per-metric alpha, aggregation, and raw thresholds are expanded for every
    enabled metric so no numeric parameter stays implicit. Re-running from
    the dumped file reproduces the run (inputs are recorded as given).
    """
    from .framework import build_default_registry

    registry = build_default_registry(config.evaluation)
    parser = configparser.ConfigParser(interpolation=None)
    run_section = {
        "input": ", ".join(config.inputs),
        "schema": config.schema,
        "out_dir": config.out_dir,
        "formats": ", ".join(config.formats),
        "overlay": _fmt(config.overlay),
        "workers": str(config.workers),
        "dump_claimed_sets": _fmt(config.dump_claimed_sets),
    }
    if config.times is not None:
        run_section["times"] = ", ".join(repr(t) for t in config.times)
    if config.t_from is not None:
        run_section["t_from"] = repr(config.t_from)
    if config.t_to is not None:
        run_section["t_to"] = repr(config.t_to)
    if config.all_frames:
        run_section["all"] = "true"
    parser["run"] = run_section

    ev = config.evaluation
    parser["framework"] = {"include_vrus": _fmt(ev.include_vrus)}
    if ev.enabled is not None:
        parser["framework"]["enabled"] = ", ".join(ev.enabled)
    for section, (cls, keys) in _SECTION_FIELDS.items():
        source = {"traffic_quality": ev.tq, "safety_potential": ev.sp,
                  "pairwise": ev.pairwise}[section]
        parser[section] = {key: _fmt(getattr(source, key)) for key in keys}
    parser["alpha"] = {m.descriptor.name: _fmt(m.descriptor.alpha) for m in registry}
    parser["aggregation"] = {m.descriptor.name: m.descriptor.aggregation for m in registry}

    fp = config.fingerprint
    parser["thresholds"] = {
        m.descriptor.name: _fmt(fp.thresholds.get(m.descriptor.name, fp.raw_threshold))
        for m in registry
    }
    parser["fingerprint"] = {
        "raw_threshold": _fmt(fp.raw_threshold),
        "radius_threshold": _fmt(fp.radius_threshold),
        "ground_truth": ", ".join(fp.ground_truth),
    }
    if fp.axes is not None:
        parser["fingerprint"]["axes"] = ", ".join(fp.axes)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        parser.write(handle)


def replace(config: RunConfig, **changes) -> RunConfig:
    """RunConfig copy with top-level fields swapped (reruns validation)."""
    return dataclasses.replace(config, **changes)
