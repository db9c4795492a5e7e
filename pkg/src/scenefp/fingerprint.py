"""Scene fingerprints: radar polygons over metric axes and their areas.

The normalized metric values of one scene become radii on equally spaced
axes. The polygon area, normalized by the area of the all-ones polygon,
is a holistic criticality score in [0, 1]; per-group partial areas keep the
contribution of each metric family separate. A threshold circle drawn from
per-metric critical raw values gives the score a comparison baseline.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ConfigError
from .framework import (Direction, MetricDescriptor, MetricGroup,
                        SceneEvaluation, normalize)

DEFAULT_RAW_THRESHOLD = 1.5                    # s (or m), critical boundary for decreasing metrics
DEFAULT_RADIUS_THRESHOLD = math.exp(-1.5)      # direct radius for increasing metrics


def kiviat_area(radii: Sequence[float]) -> float:
    """Normalized area of the radar polygon spanned by the radii.

    The raw polygon area is 0.5*sin(2*pi/n) * sum(r_i * r_{i+1}) over the
    cyclic axis pairs; dividing by the all-ones polygon area (n/2)*sin(2*pi/n)
    leaves sum(r_i * r_{i+1}) / n. Radii are expected in [0, 1]; requires at
    least 3 axes.
    """
    n = len(radii)
    if n < 3:
        raise ValueError(f"a radar polygon needs at least 3 axes, got {n}")
    terms = [radii[i] * radii[(i + 1) % n] for i in range(n)]
    return math.fsum(terms) / n


@dataclass(frozen=True)
class FingerprintAxis:
    name: str
    group: MetricGroup
    radius: float


@dataclass
class Fingerprint:
    t: float
    axes: List[FingerprintAxis]
    area_total: float
    area_by_group: Dict[MetricGroup, float]


def _group_spans(axes: Sequence[FingerprintAxis]) -> Dict[MetricGroup, range]:
    """Contiguous index span per group; groups must not interleave."""
    spans: Dict[MetricGroup, range] = {}
    i = 0
    n = len(axes)
    while i < n:
        group = axes[i].group
        if group in spans:
            raise ConfigError(f"axis group {group.value} is not contiguous in the layout")
        j = i
        while j < n and axes[j].group is group:
            j += 1
        spans[group] = range(i, j)
        i = j
    return spans


def _group_area_from_axes(axes: Sequence[FingerprintAxis], span: range) -> float:
    """Partial normalized area from axis pairs that lie within one group."""
    n = len(axes)
    if len(span) < 2:
        return 0.0
    terms = [axes[i].radius * axes[i + 1].radius for i in span[:-1]]
    if len(span) == n:  # single group over the whole circle keeps the wrap pair
        terms.append(axes[span[-1]].radius * axes[span[0]].radius)
    return math.fsum(terms) / n


def group_area(fingerprint: Fingerprint, group: MetricGroup) -> float:
    """Normalized partial area contributed by one metric family."""
    spans = _group_spans(fingerprint.axes)
    if group not in spans:
        return 0.0
    return _group_area_from_axes(fingerprint.axes, spans[group])


def build_fingerprint(evaluation: SceneEvaluation,
                      axis_order: Optional[Sequence[str]] = None) -> Fingerprint:
    """Turn one scene evaluation into its radar fingerprint.

    Undefined metric values render as radius 0 (only here; the evaluation
    keeps them undefined). The axis order defaults to the evaluation's own
    metric order; groups must be contiguous.
    """
    if axis_order is None:
        axis_order = list(evaluation.values.keys())
    axes = []
    for name in axis_order:
        if name not in evaluation.values:
            raise ConfigError(f"axis {name!r} is not part of the evaluation")
        value = evaluation.values[name]
        radius = value.normalized if value.normalized is not None else 0.0
        axes.append(FingerprintAxis(name=name, group=value.descriptor.group, radius=radius))
    spans = _group_spans(axes)
    radii = [a.radius for a in axes]
    return Fingerprint(
        t=evaluation.t,
        axes=axes,
        area_total=kiviat_area(radii),
        area_by_group={g: _group_area_from_axes(axes, span) for g, span in spans.items()},
    )


@dataclass
class ThresholdCircle:
    """Per-axis critical radii plus the area they span."""

    axes: List[FingerprintAxis]
    area: float

    def radius_of(self, name: str) -> Optional[float]:
        for axis in self.axes:
            if axis.name == name:
                return axis.radius
        return None


def threshold_circle(descriptors: Sequence[MetricDescriptor],
                     raw_threshold: float = DEFAULT_RAW_THRESHOLD,
                     radius_threshold: float = DEFAULT_RADIUS_THRESHOLD,
                     raw_overrides: Optional[Dict[str, float]] = None) -> ThresholdCircle:
    """Critical-boundary polygon over the given axis layout.

    Decreasing metrics map the raw threshold through their own
    normalization; increasing metrics take the direct radius (the default
    keeps all axes uniform).
    """
    raw_overrides = raw_overrides or {}
    axes = []
    for desc in descriptors:
        if desc.direction is Direction.DECREASING:
            radius = normalize(raw_overrides.get(desc.name, raw_threshold), desc)
        else:
            radius = radius_threshold
        axes.append(FingerprintAxis(name=desc.name, group=desc.group, radius=radius))
    return ThresholdCircle(axes=axes, area=kiviat_area([a.radius for a in axes]))


def threshold_group_area(circle: ThresholdCircle, group: MetricGroup) -> float:
    spans = _group_spans(circle.axes)
    if group not in spans:
        return 0.0
    return _group_area_from_axes(circle.axes, spans[group])


# ---------------------------------------------------------------------------
# Classification against ground truth

def classify_scene(evaluation: SceneEvaluation,
                   ground_truth: Iterable[str] = ("ttc", "pet"),
                   threshold_raw: float = DEFAULT_RAW_THRESHOLD) -> bool:
    """Ground-truth criticality: any reference metric at or below threshold.

    Uses scene-level raw values of the selected metrics (by default the
    established time-based references). Scenes where none of them are
    defined are non-critical.
    """
    for name in ground_truth:
        value = evaluation.values.get(name)
        if value is not None and value.raw is not None and value.raw <= threshold_raw:
            return True
    return False


def predict_from_metric(evaluation: SceneEvaluation, metric_name: str,
                        radius_threshold: float = DEFAULT_RADIUS_THRESHOLD) -> bool:
    """Single-metric prediction: normalized value at or above the radius."""
    value = evaluation.values.get(metric_name)
    if value is None or value.normalized is None:
        return False
    return value.normalized >= radius_threshold


@dataclass
class ConfusionCounts:
    """Confusion fractions plus the derived rates (None when undefined)."""

    tp: float
    tn: float
    fp: float
    fn: float

    @property
    def sensitivity(self) -> Optional[float]:
        denom = self.tp + self.fn
        return self.tp / denom if denom > 0 else None

    @property
    def specificity(self) -> Optional[float]:
        denom = self.tn + self.fp
        return self.tn / denom if denom > 0 else None

    @property
    def critical_fraction(self) -> float:
        return self.tp + self.fn

    @property
    def non_critical_fraction(self) -> float:
        return self.tn + self.fp


def confusion(predicted: Sequence[bool], actual: Sequence[bool]) -> ConfusionCounts:
    """Confusion fractions of a prediction series against ground truth."""
    if len(predicted) != len(actual) or not predicted:
        raise ValueError("predicted and actual must be equally sized and non-empty")
    n = len(predicted)
    tp = sum(1 for p, a in zip(predicted, actual) if p and a)
    tn = sum(1 for p, a in zip(predicted, actual) if not p and not a)
    fp = sum(1 for p, a in zip(predicted, actual) if p and not a)
    fn = sum(1 for p, a in zip(predicted, actual) if not p and a)
    return ConfusionCounts(tp / n, tn / n, fp / n, fn / n)


# ---------------------------------------------------------------------------
# Report serialization

def scene_report(evaluation: SceneEvaluation, fingerprint: Fingerprint,
                 threshold: Optional[ThresholdCircle] = None,
                 ground_truth: Iterable[str] = ("ttc", "pet"),
                 threshold_raw: float = DEFAULT_RAW_THRESHOLD) -> dict:
    """JSON-ready per-scene report (undefined values stay null)."""
    axes = []
    for axis in fingerprint.axes:
        value = evaluation.values[axis.name]
        axes.append({
            "name": axis.name,
            "group": axis.group.value,
            "raw": value.raw,
            "normalized": value.normalized,
        })
    if threshold is None:
        descriptors = [evaluation.values[a.name].descriptor for a in fingerprint.axes]
        threshold = threshold_circle(descriptors, raw_threshold=threshold_raw)
    return {
        "t": evaluation.t,
        "axes": axes,
        "area_total": fingerprint.area_total,
        "area_by_group": {g.value: a for g, a in fingerprint.area_by_group.items()},
        "threshold_area": threshold.area,
        "critical_prediction": fingerprint.area_total >= threshold.area,
        "ground_truth": classify_scene(evaluation, ground_truth, threshold_raw),
    }
