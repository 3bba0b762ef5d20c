"""Attribute-selection defense games between a learner and a data-tampering adversary."""
__version__ = "0.1.0"

from .game_core import (
    MixedStrategy,
    Partition,
    PayoffMatrix,
    PureStrategy,
    build_indicator_matrix,
    enumerate_pure_strategies,
    expected_payoff,
    indicator_payoff,
)
from .equilibrium import (
    EquilibriumCertificate,
    SolveResult,
    best_response,
    certify_uniform_equilibrium,
    solve_fictitious_play,
    solve_indicator_game,
    solve_lp,
)
from .reward_model import (
    ConfidenceInterval,
    QualityTable,
    attack_succeeds,
    build_reward_matrix,
    normalize_reward,
    validate_quality_table,
)
from .attack_sim import (
    AttackConfig,
    Density,
    LabeledDensityPair,
    corrupt_square,
    estimate_attacked_quality,
    predicted_attacked_mean,
    sample_poisoned_stream,
)
from .abstraction import (
    AbstractionPlan,
    Dataset,
    abstract_dataset,
    make_partition,
    sweep_k,
    train_eval,
)
from .kernels import BACKEND
