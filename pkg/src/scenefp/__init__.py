"""Criticality metrics and radar fingerprints for recorded traffic scenes.

Typical use: parse a recording, evaluate the metric registry at a scene
time, and consolidate the normalized values into a fingerprint whose area
scores the scene.

    import scenefp

    scenario = scenefp.parse_tracks("recording.csv", schema="interaction")
    evaluation = scenefp.evaluate_scene(scenario, t=12.4)
    fp = scenefp.build_fingerprint(evaluation)
    print(fp.area_total)
"""

from .errors import ConfigError, InputError, SchemaError
from .fingerprint import (ConfusionCounts, Fingerprint, FingerprintAxis,
                          ThresholdCircle, build_fingerprint, classify_scene,
                          confusion, group_area, kiviat_area,
                          predict_from_metric, scene_report, threshold_circle)
from .framework import (DEFAULT_AXIS_ORDER, Direction, EvaluationConfig,
                        MetricDescriptor, MetricGroup, MetricValue,
                        SceneEvaluation, aggregate, build_default_registry,
                        evaluate_scene, normalize)
from .pairwise import PairwiseConfig, conflict_zone, euclidean_distance, ttc, wttc
from .safety_potential import SafetyProcedureParams, claimed_set, rho, rho_norm
from .scene import (AgentClass, AgentState, Scenario, Scene, Track,
                    parse_tracks, scene_at, write_tracks)
from .traffic_quality import TqConfig, tq_indi, tq_macro, tq_micro, tq_nano

__version__ = "0.1.0"

__all__ = [
    "AgentClass", "AgentState", "ConfigError", "ConfusionCounts",
    "DEFAULT_AXIS_ORDER", "Direction", "EvaluationConfig", "Fingerprint",
    "FingerprintAxis", "InputError", "MetricDescriptor", "MetricGroup",
    "MetricValue", "PairwiseConfig", "SafetyProcedureParams", "Scenario",
    "Scene", "SceneEvaluation", "SchemaError", "ThresholdCircle",
    "TqConfig", "Track", "aggregate", "build_default_registry",
    "build_fingerprint", "claimed_set", "classify_scene", "conflict_zone",
    "confusion", "euclidean_distance", "evaluate_scene", "group_area",
    "kiviat_area", "normalize", "parse_tracks", "predict_from_metric",
    "rho", "rho_norm", "scene_at", "scene_report", "threshold_circle",
    "tq_indi", "tq_macro", "tq_micro", "tq_nano", "ttc", "write_tracks",
    "wttc",
]
