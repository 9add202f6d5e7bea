"""Soft-output MIMO detection via punctured channel factors.

The package builds punctured (and MMSE-augmented punctured) triangular
channel factors without matrix inversion, runs tree / linear / brute-force
soft-output detectors on them, evaluates closed-form and Monte-Carlo
achievable-rate bounds, and drives desk-scale link simulations through the
``mimo`` command line tool.
"""

from .air import (
    AirPoint,
    capacity_awgn,
    gap_awld,
    ilb_awld,
    ilb_monte_carlo,
    ilb_wld,
    lemma2_trace_opt,
    verify_theorem3,
)
from .augment import AugmentedDecomposition, awl_decompose, build_augmented, mmse_filter
from .constellation import Constellation, build_constellation
from .detect import (
    AwldContext,
    DetectionResult,
    TrueContext,
    WldContext,
    bruteforce_maxlog_llr,
    linear_detect,
    metric_eval,
    multi_round_detect,
    select_layers,
    tree_detect,
)
from .errors import GuardExceeded, InvalidPower, MimoError, RankDeficient, SingularPivot
from .linalg import (
    QLFactors,
    gauss_eliminate_lower,
    ql_decompose,
    singular_values,
    tri_solve_lower,
)
from .puncture import PuncturedDecomposition, puncture_matrix, wl_decompose
from .sim import DetectorSpec, ExperimentConfig, gen_channel

__all__ = [
    "AirPoint",
    "AugmentedDecomposition",
    "AwldContext",
    "Constellation",
    "DetectionResult",
    "DetectorSpec",
    "ExperimentConfig",
    "GuardExceeded",
    "InvalidPower",
    "MimoError",
    "PuncturedDecomposition",
    "QLFactors",
    "RankDeficient",
    "SingularPivot",
    "TrueContext",
    "WldContext",
    "awl_decompose",
    "bruteforce_maxlog_llr",
    "build_augmented",
    "build_constellation",
    "capacity_awgn",
    "gap_awld",
    "gauss_eliminate_lower",
    "gen_channel",
    "ilb_awld",
    "ilb_monte_carlo",
    "ilb_wld",
    "lemma2_trace_opt",
    "linear_detect",
    "metric_eval",
    "mmse_filter",
    "multi_round_detect",
    "puncture_matrix",
    "ql_decompose",
    "select_layers",
    "singular_values",
    "tree_detect",
    "tri_solve_lower",
    "verify_theorem3",
    "wl_decompose",
]

__version__ = "0.1.0"
