"""Matroid secretary toolkit: rank oracles, principal partitions, rank-density
curve algebra, online selection procedures, and a Monte Carlo harness."""

from .bitset import bit, bits, full_mask, mask_of
from .curves import (
    CurveStep,
    GoodCurveBundle,
    RankDensityCurve,
    WeightProfile,
    ZERO_CURVE,
    curve_value_F,
    downshift,
    eta,
    find_good_curves,
    is_approximation,
)
from .harness import (
    InstanceSpec,
    TrialReport,
    build_matroid,
    check_concentration,
    check_good_event,
    check_good_sample,
    check_opt_vs_F,
    default_fixtures,
    estimate_ratio,
    offline_opt,
    random_matroid,
    run_trial,
    run_trials,
    summarize_ratio,
)
from .matroids import (
    DirectSumMatroid,
    ExplicitMatroid,
    GraphicMatroid,
    MinorView,
    ParallelExtension,
    PartitionMatroid,
    RankOracle,
    UniformMatroid,
)
from .online import (
    Arrival,
    ArrivalStream,
    ChainDecomposition,
    ProtocolViolation,
    RevealedGuard,
    SelectionResult,
    adversarial_sample_run,
    aided_run,
    chain_decompose,
    classical_secretary,
    grp_run,
    main_run,
    osp,
)
from .partition import densest_set_integer, escape_set, union_rank
from .principal import (
    PrincipalSequence,
    PrincipalStep,
    brute_force_densest,
    densest_set,
    principal_sequence,
    rank_density_curve,
    upper_envelope,
)
