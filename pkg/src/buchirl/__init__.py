"""Reward shaping for Buchi objectives on labelled MDPs.

Pipeline: parse a Buchi automaton (HOA subset) and a labelled MDP, build
their product with acceptance on branches, reshape it into reachability,
total-reward or reward-biased-discount form, solve exactly or learn
tabularly, and cross-check the three views against an independent end
component oracle.
"""

from .automata import (
    HoaError,
    HoaSemanticError,
    HoaSyntaxError,
    LassoWord,
    Nba,
    accepts_lasso,
    complete_with_trap,
    is_complete,
    is_deterministic,
    parse_hoa,
    serialize_hoa,
)
from .learn import LearnConfig, QTable, TrainResult, UniformStream, epsilon_at, run_episode, train
from .mdp import (
    Diagnostic,
    Edge,
    Mdp,
    MdpFormatError,
    RunRecord,
    dump_mdp,
    load_mdp,
    mdp_from_json,
    mdp_to_json,
    sample_step,
)
from .mdp import validate as validate_mdp
from .oracle import (
    BuchiResult,
    EndComponent,
    buchi_value,
    mec_decomposition,
    policy_buchi_probability,
)
from .product import (
    AlphabetMismatchError,
    Branch,
    DeadEndError,
    IncompleteAutomatonError,
    MemoryStrategy,
    Pair,
    ProductError,
    ProductMdp,
    Strategy,
    build_product,
    project_strategy,
    random_strategy,
    recompose_strategy,
)
from .shaping import (
    AugBranch,
    AugmentedModel,
    Mode,
    PayoffSpec,
    augment,
    run_payoff,
    simulate_batch,
    simulate_run,
)
from .solvers import (
    ConvergenceError,
    ValueVector,
    bellman_backup,
    evaluate_policy,
    greedy_policy,
    solve_optimal,
)
from .verify import (
    SweepRow,
    TailCheck,
    ThresholdReport,
    VerifyReport,
    tail_check,
    threshold_sweep,
    verify_instance,
)

__version__ = "0.1.0"
