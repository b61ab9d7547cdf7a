"""Trajectory influence scores for identified LQR designs."""

from ._core import (
    Config,
    Experiment,
    Report,
    Truth,
    TrajinfError,
    config_keys,
    evaluate,
    generate,
    influence,
    load_dataset,
    loto,
    lqr_gradient,
    solve_dare,
    solve_dlyap,
    solve_dlyap_adj,
)

__all__ = [
    "Config",
    "Experiment",
    "Report",
    "Truth",
    "TrajinfError",
    "config_keys",
    "evaluate",
    "generate",
    "influence",
    "load_dataset",
    "loto",
    "lqr_gradient",
    "solve_dare",
    "solve_dlyap",
    "solve_dlyap_adj",
]
