"""Detection stage: the backend contract, the classical detector and tracking."""

from .classical import ClassicalBackend, classify_region, describe_region, merge_regions, region_features
from .rules import DEFAULT_RULES, Rule, apply_rules, make_rule, parse_predicate, rules_from_config
from .tracker import Track, Tracker, greedy_pairs
from .types import (
    EVENT_KINDS,
    LABELS,
    Backend,
    Detection,
    DetectionEvent,
    event_grammar_violations,
    read_event_log,
)

__all__ = [
    "Backend",
    "ClassicalBackend",
    "DEFAULT_RULES",
    "Detection",
    "DetectionEvent",
    "EVENT_KINDS",
    "LABELS",
    "Rule",
    "Track",
    "Tracker",
    "apply_rules",
    "classify_region",
    "describe_region",
    "event_grammar_violations",
    "greedy_pairs",
    "make_rule",
    "merge_regions",
    "parse_predicate",
    "read_event_log",
    "region_features",
    "rules_from_config",
]
