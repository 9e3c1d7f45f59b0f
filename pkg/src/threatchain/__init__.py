"""Markov-chain attack probability analysis for CVSS-weighted threat models."""

from .catalog import (ThreatModel, ThreatRecord, VulnerabilityRecord, builtin_iomt_model,
                      load_model, resolve_scores, validate)
from .cvss import parse_vector, round_up1, score_vector
from .markov import (attack_distribution, absorption_metrics, build_transition_matrix,
                     n_step_matrix, stationary_distribution)

__all__ = [
    "ThreatModel", "ThreatRecord", "VulnerabilityRecord", "builtin_iomt_model", "load_model",
    "resolve_scores", "validate", "parse_vector", "round_up1", "score_vector",
    "attack_distribution", "absorption_metrics", "build_transition_matrix", "n_step_matrix",
    "stationary_distribution",
]
