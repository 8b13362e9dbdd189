"""Sparse functional PCA for longitudinal monitoring series.

The heavy lifting lives in the compiled `_core` module; this package
re-exports its public surface.
"""

from ._core import (  # noqa: F401
    CoastFpcaError,
    ExtremaGroups,
    FpcaModel,
    KlTruth,
    LinRegResult,
    RecoveryReport,
    ScoreVector,
    SpearmanResult,
    WeeklySeries,
    __version__,
    bandwidth_candidates,
    decile_bins,
    extrema_groups,
    fit_fpca,
    linreg_r2,
    local_linear_1d,
    midranks,
    orthonormalize,
    p_value_bin,
    recovery_report,
    score_all,
    select_bandwidth_cv,
    simulate_kl,
    spearman,
    trapezoid_weights,
)

__all__ = [
    "CoastFpcaError",
    "ExtremaGroups",
    "FpcaModel",
    "KlTruth",
    "LinRegResult",
    "RecoveryReport",
    "ScoreVector",
    "SpearmanResult",
    "WeeklySeries",
    "bandwidth_candidates",
    "decile_bins",
    "extrema_groups",
    "fit_fpca",
    "linreg_r2",
    "local_linear_1d",
    "midranks",
    "orthonormalize",
    "p_value_bin",
    "recovery_report",
    "score_all",
    "select_bandwidth_cv",
    "simulate_kl",
    "spearman",
    "trapezoid_weights",
]
