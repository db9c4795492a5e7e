"""Metric orchestration: descriptors, normalization, and scene evaluation.

Every metric registers a descriptor (group, criticality direction, alpha,
aggregation) and a compute hook. Raw values live on their natural scale;
normalization maps them into [0, 1] where 1 is maximally critical:

    decreasing-criticality metrics (small raw = critical): exp(-alpha * raw)
    increasing-criticality metrics (large raw = critical): clamp to [0, 1]

Pair- and agent-scoped results are reduced to one scene value by the
descriptor's aggregation applied to the normalized values. Metrics whose
preconditions fail stay undefined (None); evaluation never raises for a
degenerate scene.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from . import pairwise, safety_potential, traffic_quality
from .errors import ConfigError
from .pairwise import PairwiseConfig
from .safety_potential import SafetyProcedureParams
from .scene import Scenario, Scene, scene_at
from .traffic_quality import TqConfig


class MetricGroup(Enum):
    TRAFFIC_QUALITY = "traffic_quality"
    INTERSECTION = "intersection"
    UNIVERSAL = "universal"
    FOLLOWING = "following"


class Direction(Enum):
    DECREASING = "decreasing_criticality"   # small raw values are critical
    INCREASING = "increasing_criticality"   # large raw values are critical


AGGREGATIONS = ("max", "mean", "min")


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    group: MetricGroup
    direction: Direction
    alpha: float = 1.0         # exp steepness, decreasing metrics only
    aggregation: str = "max"
    label: str = ""            # short display label for charts

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError(f"metric {self.name}: alpha must be positive")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"metric {self.name}: unknown aggregation {self.aggregation!r}")
        if not self.label:
            object.__setattr__(self, "label", self.name)


@dataclass
class MetricValue:
    descriptor: MetricDescriptor
    raw: Optional[float]
    normalized: Optional[float]
    scope: str = "scene"


@dataclass
class SceneEvaluation:
    """All metric values for one scene, plus the per-key raws behind them."""

    t: float
    values: Dict[str, MetricValue]
    per_pair: Dict[str, Dict[tuple, float]] = field(default_factory=dict)
    per_agent: Dict[str, Dict[str, float]] = field(default_factory=dict)


def normalize(raw: Optional[float], descriptor: MetricDescriptor) -> Optional[float]:
    """Map a raw metric value onto the [0, 1] criticality scale."""
    if raw is None:
        return None
    if raw < 0.0:
        raise ValueError(f"metric {descriptor.name}: negative raw value {raw}")
    if descriptor.direction is Direction.DECREASING:
        return math.exp(-descriptor.alpha * raw)
    return min(max(raw, 0.0), 1.0)


def aggregate(values: Sequence[float], how: str = "max") -> Optional[float]:
    """Reduce a list of defined values; None for an empty list.

    The mean uses exact summation, so any permutation of the inputs yields
    the identical float.
    """
    if how not in AGGREGATIONS:
        raise ConfigError(f"unknown aggregation {how!r}")
    vals = list(values)
    if not vals:
        return None
    if how == "max":
        return max(vals)
    if how == "min":
        return min(vals)
    return math.fsum(vals) / len(vals)


# ---------------------------------------------------------------------------
# Evaluation context: one scene, with shared lazily-computed intermediates.

class SceneContext:
    """Caches per-scene intermediates (zones, passages, claims) for metrics."""

    def __init__(self, scenario: Scenario, t: float, config: "EvaluationConfig"):
        self.scenario = scenario
        self.config = config
        self.scene = scene_at(scenario, t)
        self.t = self.scene.t
        self.vehicles = sorted(self.scene.vehicles(config.include_vrus),
                               key=lambda s: s.agent_id)
        self._states = {s.agent_id: s for s in self.vehicles}
        self._zones: Dict[tuple, Optional[pairwise.ConflictZone]] = {}
        self._passages: Dict[tuple, tuple] = {}
        self._sp: Optional[Dict[str, float]] = None

    def state(self, agent_id: str):
        return self._states[agent_id]

    def track(self, agent_id: str):
        return self.scenario.tracks[agent_id]

    def pairs(self) -> List[Tuple[str, str]]:
        ids = [s.agent_id for s in self.vehicles]
        return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]

    def zone(self, a: str, b: str) -> Optional[pairwise.ConflictZone]:
        key = (a, b)
        if key not in self._zones:
            self._zones[key] = pairwise.conflict_zone(
                self.track(a), self.track(b), self.t,
                horizon=self.config.pairwise.horizon)
        return self._zones[key]

    def passages(self, a: str, b: str):
        """Zone passages of both agents, or None when there is no zone."""
        key = (a, b)
        if key not in self._passages:
            zone = self.zone(a, b)
            if zone is None:
                self._passages[key] = None
            else:
                cache = self.scenario._cache
                self._passages[key] = (
                    pairwise.zone_passage(self.track(a), zone, cache),
                    pairwise.zone_passage(self.track(b), zone, cache),
                )
        return self._passages[key]

    def safety_potentials(self) -> Dict[str, float]:
        if self._sp is None:
            self._sp = safety_potential.scene_safety_potential(
                self.scene, self.scenario, self.config.sp,
                include_vrus=self.config.include_vrus)
        return self._sp


@dataclass
class EvaluationConfig:
    tq: TqConfig = field(default_factory=TqConfig)
    sp: SafetyProcedureParams = field(default_factory=SafetyProcedureParams)
    pairwise: PairwiseConfig = field(default_factory=PairwiseConfig)
    include_vrus: bool = False
    alpha: Dict[str, float] = field(default_factory=dict)
    aggregation: Dict[str, str] = field(default_factory=dict)
    enabled: Optional[List[str]] = None  # None = every default metric


# ---------------------------------------------------------------------------
# Metric implementations

class Metric:
    """One registered criticality measure."""

    scope = "scene"  # or "pair" / "agent"

    def __init__(self, descriptor: MetricDescriptor):
        self.descriptor = descriptor

    def compute(self, ctx: SceneContext):
        raise NotImplementedError


class DistanceMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        return {(a, b): pairwise.euclidean_distance(ctx.state(a), ctx.state(b))
                for a, b in ctx.pairs()}


class TtcMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        cfg = ctx.config.pairwise
        out = {}
        for a, b in ctx.pairs():
            ordered = pairwise.leader_follower(
                ctx.state(a), ctx.state(b),
                lateral_gate=cfg.lateral_gate, heading_gate=cfg.heading_gate)
            if ordered is None:
                continue
            follower, leader = ordered
            value = pairwise.ttc(follower, leader)
            if value is not None:
                out[(follower.agent_id, leader.agent_id)] = value
        return out


class WttcMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        out = {}
        for a, b in ctx.pairs():
            value = pairwise.wttc(ctx.state(a), ctx.state(b))
            if value is not None:
                out[(a, b)] = value
        return out


class TrajectoryDistanceMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        out = {}
        for a, b in ctx.pairs():
            zone = ctx.zone(a, b)
            if zone is None:
                continue
            out[(a, b)] = zone.arc_a
            out[(b, a)] = zone.arc_b
        return out


class GapTimeMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        out = {}
        for a, b in ctx.pairs():
            zone = ctx.zone(a, b)
            if zone is None:
                continue
            value = pairwise.gap_time(ctx.scene, zone)
            if value is not None:
                out[(a, b)] = value
        return out


class EncroachmentTimeMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        out = {}
        for a, b in ctx.pairs():
            zone = ctx.zone(a, b)
            if zone is None:
                continue
            value = pairwise.pair_encroachment_time(
                ctx.track(a), ctx.track(b), zone, ctx.scenario._cache)
            if value is not None:
                out[(a, b)] = value
        return out


class PetMetric(Metric):
    scope = "pair"

    def compute(self, ctx):
        out = {}
        for a, b in ctx.pairs():
            zone = ctx.zone(a, b)
            if zone is None:
                continue
            value = pairwise.pet(ctx.track(a), ctx.track(b), zone, ctx.scenario._cache)
            if value is not None:
                out[(a, b)] = value
        return out


class TqMacroMetric(Metric):
    scope = "agent"

    def compute(self, ctx):
        value = traffic_quality.tq_macro(ctx.vehicles, ctx.config.tq)
        if value is None:
            return {}
        return {s.agent_id: value for s in ctx.vehicles}


class TqMicroMetric(Metric):
    scope = "agent"

    def compute(self, ctx):
        out = {}
        for s in ctx.vehicles:
            value = traffic_quality.tq_micro(ctx.vehicles, s.agent_id, ctx.config.tq)
            if value is not None:
                out[s.agent_id] = value
        return out


class TqNanoMetric(Metric):
    scope = "agent"

    def compute(self, ctx):
        out = {}
        for s in ctx.vehicles:
            value = traffic_quality.tq_nano(ctx.vehicles, s.agent_id, ctx.config.tq)
            if value is not None:
                out[s.agent_id] = value
        return out


class TqIndiMetric(Metric):
    scope = "agent"

    def compute(self, ctx):
        out = {}
        for s in ctx.vehicles:
            value = traffic_quality.tq_indi(ctx.track(s.agent_id), ctx.t, ctx.config.tq)
            if value is not None:
                out[s.agent_id] = value
        return out


class SafetyPotentialMetric(Metric):
    scope = "agent"

    def compute(self, ctx):
        return dict(ctx.safety_potentials())


_DEFAULT_METRICS = [
    ("tq_macro", MetricGroup.TRAFFIC_QUALITY, Direction.INCREASING, "Macro", TqMacroMetric),
    ("tq_micro", MetricGroup.TRAFFIC_QUALITY, Direction.INCREASING, "Micro", TqMicroMetric),
    ("tq_nano", MetricGroup.TRAFFIC_QUALITY, Direction.INCREASING, "Nano", TqNanoMetric),
    ("tq_indi", MetricGroup.TRAFFIC_QUALITY, Direction.INCREASING, "Indi", TqIndiMetric),
    ("trajectory_distance", MetricGroup.INTERSECTION, Direction.DECREASING, "TD", TrajectoryDistanceMetric),
    ("gap_time", MetricGroup.INTERSECTION, Direction.DECREASING, "GT", GapTimeMetric),
    ("encroachment_time", MetricGroup.INTERSECTION, Direction.DECREASING, "ET", EncroachmentTimeMetric),
    ("pet", MetricGroup.INTERSECTION, Direction.DECREASING, "PET", PetMetric),
    ("safety_potential", MetricGroup.UNIVERSAL, Direction.INCREASING, "SP", SafetyPotentialMetric),
    ("wttc", MetricGroup.UNIVERSAL, Direction.DECREASING, "WTTC", WttcMetric),
    ("distance", MetricGroup.UNIVERSAL, Direction.DECREASING, "Dist", DistanceMetric),
    ("ttc", MetricGroup.FOLLOWING, Direction.DECREASING, "TTC", TtcMetric),
]

DEFAULT_AXIS_ORDER = [name for name, *_ in _DEFAULT_METRICS]


def build_default_registry(config: Optional[EvaluationConfig] = None) -> List[Metric]:
    """Instantiate the default metric set, honoring per-metric overrides."""
    config = config or EvaluationConfig()
    registry = []
    for name, group, direction, label, cls in _DEFAULT_METRICS:
        if config.enabled is not None and name not in config.enabled:
            continue
        descriptor = MetricDescriptor(
            name=name, group=group, direction=direction, label=label,
            alpha=config.alpha.get(name, 1.0),
            aggregation=config.aggregation.get(name, "max"),
        )
        registry.append(cls(descriptor))
    return registry


def _key_text(key) -> str:
    if isinstance(key, tuple):
        return "|".join(str(k) for k in key)
    return str(key)


def evaluate_scene(scenario: Scenario, t: float,
                   registry: Optional[List[Metric]] = None,
                   config: Optional[EvaluationConfig] = None) -> SceneEvaluation:
    """Evaluate every registered metric for the scene at t.

    Each metric lands in the result exactly once, possibly undefined. The
    evaluation is pure: identical inputs produce an identical result.
    """
    config = config or EvaluationConfig()
    if registry is None:
        registry = build_default_registry(config)
    ctx = SceneContext(scenario, t, config)

    values: Dict[str, MetricValue] = {}
    per_pair: Dict[str, Dict[tuple, float]] = {}
    per_agent: Dict[str, Dict[str, float]] = {}
    for metric in registry:
        desc = metric.descriptor
        if metric.scope == "scene":
            raw = metric.compute(ctx)
            values[desc.name] = MetricValue(desc, raw, normalize(raw, desc))
            continue

        results = metric.compute(ctx) or {}
        items = sorted(results.items(), key=lambda kv: _key_text(kv[0]))
        if metric.scope == "pair":
            per_pair[desc.name] = dict(items)
        else:
            per_agent[desc.name] = dict(items)

        if not items:
            values[desc.name] = MetricValue(desc, None, None)
            continue
        norms = [(key, normalize(raw, desc)) for key, raw in items]
        if desc.aggregation == "mean":
            raw_scene = math.fsum(raw for _, raw in items) / len(items)
            norm_scene = math.fsum(n for _, n in norms) / len(norms)
        else:
            pick = max if desc.aggregation == "max" else min
            best_key, norm_scene = pick(norms, key=lambda kv: kv[1])
            raw_scene = dict(items)[best_key]
        values[desc.name] = MetricValue(desc, raw_scene, norm_scene)

    return SceneEvaluation(t=ctx.t, values=values, per_pair=per_pair, per_agent=per_agent)
