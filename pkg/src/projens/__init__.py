"""projens: a numerical laboratory for projected ensembles of bipartite
quantum states and certification of their state-design quality."""

__version__ = "0.1.0"

from .linalg import (
    TOL,
    DimensionSpec,
    PureState,
    SpectralDecomposition,
    Tolerances,
    computational_zero,
    eig_hermitian,
    evolve_state,
    evolve_with_decomposition,
    reduced_density_a,
    trace_distance,
)
from .rmt import (
    GueSample,
    TraceMomentVector,
    bessel_j1,
    bessel_zero_times,
    gue_moment_envelope,
    normalized_trace_moments,
    sample_gue,
)
from .ensembles import (
    GlobalEnsembleSpec,
    SpectrumSpec,
    build_structured_unitary,
    fixed_basis_unitary,
    sample_global_state,
    sample_haar_state,
    sample_haar_unitary,
    sample_spectrum,
)
from .projected import (
    ProjectedEnsemble,
    ProjectedState,
    bath_outcome_gram,
    build_projected_ensemble,
)
from .designs import (
    DesignReport,
    HaarStatistics,
    MomentOperator,
    design_report,
    frame_potential,
    haar_frame_potential,
    haar_moment_operator,
    haar_overlap_moment,
    haar_q_moment,
    haar_statistics,
    jensen_gap,
    moment_operator,
    symmetric_projector,
)
from .weingarten import (
    WeingartenTable,
    all_permutations,
    catalan_number,
    cycle_type,
    expected_projected_f1,
    haar_monomial_expectation,
    haar_twirl_exact,
    permutation_operator,
    weingarten_table,
    wg_leading,
    wg_leading_from_cycle_type,
)
from .experiments import (
    CSV_HEADER,
    EXPERIMENT_NAMES,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    ResultRecord,
    Thresholds,
    load_config,
    parse_config_text,
    run_experiment,
    summarize,
)
