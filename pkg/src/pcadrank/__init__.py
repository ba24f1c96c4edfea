"""Feature weighting, rank aggregation and with/without-feature ablation for binary clinical cohorts."""

__version__ = "0.1.0"
