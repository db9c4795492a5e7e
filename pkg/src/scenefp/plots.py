"""Radar-chart rendering for scene fingerprints.

Figures are written as SVG with pinned hash salt and stripped timestamps so
identical inputs produce byte-identical files.
"""

import math
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .fingerprint import ConfusionCounts, Fingerprint, ThresholdCircle
from .framework import MetricGroup

MAX_OVERLAY = 3

_LINE_COLORS = ["#0057b8", "#d62728", "#2ca02c"]
_GROUP_FILLS = {
    MetricGroup.TRAFFIC_QUALITY: "#9ecae1",
    MetricGroup.INTERSECTION: "#fdd0a2",
    MetricGroup.UNIVERSAL: "#c7e9c0",
    MetricGroup.FOLLOWING: "#dadaeb",
}

_RC = {
    "svg.hashsalt": "scenefp",
    "svg.fonttype": "none",
    "figure.figsize": (6.0, 6.0),
    "figure.dpi": 100,
    "font.size": 9.0,
}


def _save(fig, path: str) -> None:
    # metadata Date=None keeps reruns byte-identical
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _closed(values: Sequence[float]) -> List[float]:
    return list(values) + [values[0]]


def render_fingerprints(fingerprints: Sequence[Fingerprint], path: str,
                        threshold: Optional[ThresholdCircle] = None,
                        labels: Optional[Dict[str, str]] = None,
                        legend: Optional[Sequence[str]] = None,
                        title: Optional[str] = None) -> None:
    """Render up to three fingerprints overlaid on one radar chart.

    All fingerprints must share the axis layout of the first one. The
    threshold polygon, when given, is drawn dashed; group membership shows
    as shaded angular sectors behind the polygons.
    """
    if not fingerprints:
        raise ValueError("nothing to render")
    if len(fingerprints) > MAX_OVERLAY:
        raise ValueError(f"at most {MAX_OVERLAY} fingerprints per chart, got {len(fingerprints)}")
    base = fingerprints[0]
    names = [axis.name for axis in base.axes]
    for other in fingerprints[1:]:
        if [axis.name for axis in other.axes] != names:
            raise ValueError("overlaid fingerprints must share the axis layout")
    labels = labels or {}
    n = len(names)
    angles = [2.0 * math.pi * i / n for i in range(n)]

    with plt.rc_context(_RC):
        fig = plt.figure()
        ax = fig.add_subplot(projection="polar")
        ax.set_theta_zero_location("N")
        ax.set_theta_direction(-1)
        ax.set_ylim(0.0, 1.0)
        ax.set_rlabel_position(90.0 / n)
        ax.set_yticks([0.25, 0.5, 0.75, 1.0])
        ax.set_yticklabels(["0.25", "0.5", "0.75", "1"])
        ax.set_xticks(angles)
        ax.set_xticklabels([labels.get(name, name) for name in names])

        # group sectors, half an axis spacing beyond the outer members
        half = math.pi / n
        start = 0
        while start < n:
            group = base.axes[start].group
            end = start
            while end < n and base.axes[end].group is group:
                end += 1
            lo = angles[start] - half
            hi = angles[end - 1] + half
            theta = [lo + (hi - lo) * k / 40.0 for k in range(41)]
            ax.fill_between(theta, 0.0, 1.0,
                            color=_GROUP_FILLS.get(group, "#eeeeee"),
                            alpha=0.25, linewidth=0.0, zorder=0)
            start = end

        if threshold is not None:
            radii = [threshold.radius_of(name) for name in names]
            if any(r is None for r in radii):
                raise ValueError("threshold circle does not cover the axis layout")
            ax.plot(_closed(angles), _closed(radii), color="#444444",
                    linestyle="--", linewidth=1.0, zorder=2,
                    label="critical threshold")

        for i, fp in enumerate(fingerprints):
            color = _LINE_COLORS[i % len(_LINE_COLORS)]
            radii = [axis.radius for axis in fp.axes]
            name = legend[i] if legend and i < len(legend) else f"t={fp.t:g}s"
            ax.plot(_closed(angles), _closed(radii), color=color,
                    linewidth=1.5, zorder=3, label=name)
            ax.fill(_closed(angles), _closed(radii), color=color,
                    alpha=0.15, zorder=3)

        if title:
            ax.set_title(title, pad=18.0)
        ax.legend(loc="upper right", bbox_to_anchor=(1.25, 1.1), fontsize=8.0)
        _save(fig, path)


def render_confusion(counts_by_metric: Dict[str, ConfusionCounts], path: str,
                     title: Optional[str] = None) -> None:
    """Grouped bar chart of sensitivity and specificity per metric."""
    if not counts_by_metric:
        raise ValueError("nothing to render")
    names = list(counts_by_metric.keys())
    sens = [counts_by_metric[n].sensitivity for n in names]
    spec = [counts_by_metric[n].specificity for n in names]

    with plt.rc_context(_RC):
        fig = plt.figure(figsize=(max(4.0, 0.9 * len(names) + 2.0), 4.0))
        ax = fig.add_subplot()
        xs = range(len(names))
        width = 0.38
        ax.bar([x - width / 2 for x in xs],
               [s if s is not None else 0.0 for s in sens],
               width=width, color="#0057b8", label="sensitivity")
        ax.bar([x + width / 2 for x in xs],
               [s if s is not None else 0.0 for s in spec],
               width=width, color="#d62728", label="specificity")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(names, rotation=30.0, ha="right")
        ax.set_ylim(0.0, 1.05)
        ax.grid(axis="y", linewidth=0.4, alpha=0.5)
        ax.legend(fontsize=8.0)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
