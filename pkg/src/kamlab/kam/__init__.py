"""The counterterm KAM iteration and its audits."""

from .lie import LieSeriesDivergence, lie_series, lie_transform, phi_series
from .pipeline import (
    ConjugacyReport,
    NlsSeed,
    PipelineResult,
    conjugacy_audit,
    decay_exponents,
    draw_frequencies,
    fit_counterterm_constant,
    fit_decay_offset,
    fit_quadratic_constant,
    flow,
    ball_points,
    nls_seed,
    run_kam,
)
from .schedule import KamSchedule
from .step import (
    CounterTermDivergence,
    KamSettings,
    KamState,
    kam_step,
    measure_smallness,
    solve_counterterm,
)
from .frequency import CountertermMap, FrequencyMap, FrequencyMapDivergence, solve_frequency_map
from .verify import HolderFit, NotNormalFormError, holder_diagnostic, sample_trajectory, torus_residual
