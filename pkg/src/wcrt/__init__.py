"""Worst-case resistance testing for participant nonresponse bias."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, DegenerateInputError, DomainError, WcrtError
from .stats import (
    SampleSummary,
    combine,
    corr_z_statistic,
    cronbach_alpha,
    fisher_z,
    inverse_fisher_z,
    normal_quantile,
    pooled_stats,
    student_t_quantile,
)
from .solver import (
    SCENARIOS,
    SolverConfig,
    TestSpec,
    WcrtResult,
    classify_scenario,
    inverse_corr_threshold,
    solve_corr_n2,
    solve_ttest_n2,
    verify_flip_boundary,
)
from .waves import WaveEstimates, split_waves, wave_estimates, wave_m1, wave_m2, wave_m3
from .ncurve import EffectGrid, NCurve, sweep_corr, sweep_ttest
from .flagger import FlagReport, build_flag_report, summarize_flags
from .dataset import ScaleConfig, build_scales, correlation_matrix, load_csv
