"""Experiment harness: configs, datasets, BER sweeps, comparison, CLI."""

from linkforge.harness.compare import compare, crossing_snr
from linkforge.harness.config import (
    SEED_ENV_VAR,
    ExperimentConfig,
    effective_seed,
    load_config,
)
from linkforge.harness.dataset import generate_dataset
from linkforge.harness.sweep import (
    BerPoint,
    point_seed,
    read_curve,
    run_adnn_point,
    run_baseline_point,
    run_uncoded_point,
    snr_points,
    sweep,
    write_curve,
)

__all__ = [
    "compare",
    "crossing_snr",
    "SEED_ENV_VAR",
    "ExperimentConfig",
    "effective_seed",
    "load_config",
    "generate_dataset",
    "BerPoint",
    "point_seed",
    "read_curve",
    "run_adnn_point",
    "run_baseline_point",
    "run_uncoded_point",
    "snr_points",
    "sweep",
    "write_curve",
]
