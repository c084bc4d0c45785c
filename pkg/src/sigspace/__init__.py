"""Signal-space greedy sparse recovery over redundant dictionaries.

Recovers signals that are sparse in an overcomplete dictionary directly in
signal space: a CoSaMP-style iteration whose support steps are pluggable
near-optimal selection schemes, plus extension variants that stay robust when
dictionary atoms are strongly correlated. Ships exact small-instance isometry
oracles, the closed-form convergence constants, and a Monte-Carlo harness for
recovery-rate experiments.
"""

from .dictionaries import (
    ContainerMeta,
    Dictionary,
    MeasurementModel,
    coherence,
    gaussian_measurements,
    gram_profile,
    identity_dictionary,
    load_container,
    load_dictionary,
    overcomplete_dft,
    random_orthogonal_dictionary,
    rng_from,
    save_container,
    save_dictionary,
    seed_sequence,
)
from .experiments import (
    CSV_HEADER,
    RecoveryCurve,
    SweepSettings,
    TrialConfig,
    TrialRecord,
    VariantSpec,
    emit_outputs,
    fig_variants,
    gen_sparse_signal,
    read_curves_csv,
    resolve_threads,
    run_sweep,
    run_trial,
    svg_line_chart,
    write_curves_csv,
)
from .linalg import (
    SupportSet,
    captured_and_residual_sq,
    coproject,
    ls_synthesize,
    orthonormal_range,
    project,
    rank_rcond,
    subdict,
    top_k_indices,
)
from .projections import (
    BudgetExceededError,
    NearOptimalityEstimate,
    SelectionScheme,
    cosamp_rep_select,
    eps_extend,
    eps_omp_select,
    eps_threshold_select,
    estimate_near_optimality,
    iht_rep_select,
    omp_select,
    oracle_select,
    oracle_stats,
    select,
    threshold_select,
    zeta_factor,
)
from .recovery import (
    STOP_MAX_ITERS,
    STOP_RESIDUAL,
    STOP_STAGNATION,
    HaltingRule,
    RecoveryReport,
    SSCoSaMPConfig,
    TraceEntry,
    eps_omp_recover,
    iteration_invariant_check,
    sscosamp,
)
from .theory import (
    DripInvariantReport,
    TheoryConstants,
    ck_bound_cosamp_exact,
    ck_bound_generic,
    coherence_rip_bound,
    condition_check,
    convergence_constants,
    ctilde_bound_threshold,
    drip_invariant_suite,
    epsilon_quadratic,
    epsilon_threshold,
    error_budget,
    exact_drip,
    exact_rip,
    theory_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "CSV_HEADER",
    "ContainerMeta",
    "Dictionary",
    "DripInvariantReport",
    "HaltingRule",
    "MeasurementModel",
    "NearOptimalityEstimate",
    "RecoveryCurve",
    "RecoveryReport",
    "SSCoSaMPConfig",
    "STOP_MAX_ITERS",
    "STOP_RESIDUAL",
    "STOP_STAGNATION",
    "SelectionScheme",
    "SupportSet",
    "SweepSettings",
    "TheoryConstants",
    "TraceEntry",
    "TrialConfig",
    "TrialRecord",
    "VariantSpec",
    "__version__",
    "captured_and_residual_sq",
    "ck_bound_cosamp_exact",
    "ck_bound_generic",
    "coherence",
    "coherence_rip_bound",
    "condition_check",
    "convergence_constants",
    "coproject",
    "cosamp_rep_select",
    "ctilde_bound_threshold",
    "drip_invariant_suite",
    "emit_outputs",
    "eps_extend",
    "eps_omp_recover",
    "eps_omp_select",
    "eps_threshold_select",
    "epsilon_quadratic",
    "epsilon_threshold",
    "error_budget",
    "estimate_near_optimality",
    "exact_drip",
    "exact_rip",
    "fig_variants",
    "gaussian_measurements",
    "gen_sparse_signal",
    "gram_profile",
    "identity_dictionary",
    "iht_rep_select",
    "iteration_invariant_check",
    "load_container",
    "load_dictionary",
    "ls_synthesize",
    "omp_select",
    "oracle_select",
    "oracle_stats",
    "orthonormal_range",
    "overcomplete_dft",
    "project",
    "random_orthogonal_dictionary",
    "rank_rcond",
    "read_curves_csv",
    "resolve_threads",
    "rng_from",
    "run_sweep",
    "run_trial",
    "save_container",
    "save_dictionary",
    "seed_sequence",
    "select",
    "sscosamp",
    "subdict",
    "svg_line_chart",
    "theory_bundle",
    "threshold_select",
    "top_k_indices",
    "write_curves_csv",
    "zeta_factor",
]
