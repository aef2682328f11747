"""Exact analysis and seeded simulation of two-station EPR experiments.

The package evaluates the classical instruction-set bound exactly, decides
joint realizability of observed pair statistics with verifiable certificates,
hosts time-and-setting-dependent local models behind a reproducible seeded
harness, and demonstrates the double-counting fallacy that aggregating
mutually exclusive potential outcomes commits.
"""

from .classical import (
    CLASSICAL_BOUND,
    BoundReport,
    average_by_square_sum,
    average_over_table,
    boundary_rows,
    condition_i_holds,
    matches_target,
    row_average,
    square_sum,
)
from .core import (
    INSTRUCTION_SETS,
    OUTCOME_PAIRS,
    OUTCOMES,
    SETTING_PAIRS,
    SETTINGS,
    TIME_TICKS,
    EprSimError,
    InstructionSet,
    NegativeEntryError,
    Outcome,
    ProbabilityVector8,
    Rational,
    RunRecord,
    Setting,
    SettingPair,
    SumNotOneError,
    format_rational,
    parse_instruction_set,
    parse_pair,
    parse_rational,
    parse_setting,
    product_table,
    validate_probability_vector,
)
from .counting import (
    CoinConfig,
    CountAudit,
    CountLedger,
    Magnet,
    TossRecord,
    all_settings_ledger,
    audit_counts,
    honest_frequency,
    naive_double_count,
    potential_outcome_ledger,
    run_coin_experiment,
    run_product_ledger,
    toss_ledger,
)
from .models import (
    BUILTIN_MODELS,
    ExtendedModel,
    MessageFunction,
    ModelEvaluationError,
    ModelReport,
    ParameterProcess,
    PerfectCorrelationReport,
    SettingDependentMessageError,
    SettingIndependenceReport,
    SourceProcess,
    Station,
    TimeLaw,
    check_locality_invariance,
    check_perfect_correlation,
    check_setting_independence,
    desync_time,
    model_report,
    run_once,
    simulate_runs,
    simulate_stats,
    static_classical,
    time_slot,
)
from .realizability import (
    InvalidTablesError,
    MalformedCertificateError,
    MarginalReport,
    NineDistributions,
    PairDistribution,
    RealizabilityResult,
    average_from_nine,
    constraint_rows,
    first_marginal,
    joint_realizability,
    marginal_consistency,
    nine_from_p,
    second_marginal,
    verify_certificate,
)
from .seeding import RunRandomness, Stream, derive_seed
from .stats import (
    EmptyPairError,
    Estimate,
    StatsAccumulator,
    accumulate,
    average_estimate,
    empirical_nine,
    merge,
    product_average,
)

__version__ = "0.1.0"
