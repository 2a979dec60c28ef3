"""Curriculum scheduling for RL fine-tuning, as a bandit over categories.

The scheduler treats problem categories (difficulty levels, task types,
or success-rate bins) as bandit arms.  After each training batch it
scores every sampled category by the mean absolute advantage of its
rollouts and folds that score into a running value estimate; the next
batch is drawn from a softmax over those estimates.  Easy-saturated and
hopeless categories both produce near-zero advantages, so the schedule
drifts toward whatever the learner can currently almost do.

Entry points:

- `Engine` drives one scheduling loop and writes the step log.
- `run` / `sweep` wire an Engine to the simulated learner for
  reproducible experiments; the `sec-curriculum` CLI wraps them.
- `SidecarServer` / `serve` expose the same Engine over a
  line-delimited protocol (see PROTOCOL.md) for external trainers.
"""

from .advantages import (
    AdvantageVector,
    RolloutGroup,
    batch_mean_abs,
    expected_abs_grpo,
    grpo_advantages,
    rloo_advantages,
)
from .bandit import (
    BanditConfig,
    Batch,
    CategoryReward,
    QTable,
    aggregate_rewards,
    category_distribution,
    init_qtable,
    sample_batch,
    td0_update,
)
from .categories import (
    CategoryKey,
    ProblemRecord,
    Registry,
    bin_by_success_rate,
    build_registry,
    cross_axes,
    load_registry,
    save_registry,
)
from .engine import Engine, SecPolicy, StepRecord, numeric_difficulty
from .errors import (
    BadConfig,
    BadK,
    CorruptFile,
    CurriculumError,
    DuplicateId,
    EmptyCategories,
    EmptyPool,
    GroupTooSmall,
    MissingAdvantage,
    MissingRate,
    NonNumericAxis,
    ProtocolError,
    UnknownCategory,
    UnknownScenario,
    VersionMismatch,
)
from .harness import (
    RandomPolicy,
    RunConfig,
    RunReport,
    SchedulePolicy,
    difficulty_trace,
    run,
    sweep,
)
from .learner import LearnerDynamics, LearnerState, SimulatedLearner
from .rng import DrawStreams
from .scenarios import Scenario, load_scenario, shipped_scenarios
from .server import SidecarServer, serve

__version__ = "0.1.0"

__all__ = [
    "AdvantageVector",
    "BadConfig",
    "BadK",
    "BanditConfig",
    "Batch",
    "CategoryKey",
    "CategoryReward",
    "CorruptFile",
    "CurriculumError",
    "DrawStreams",
    "DuplicateId",
    "EmptyCategories",
    "EmptyPool",
    "Engine",
    "GroupTooSmall",
    "LearnerDynamics",
    "LearnerState",
    "MissingAdvantage",
    "MissingRate",
    "NonNumericAxis",
    "ProblemRecord",
    "ProtocolError",
    "QTable",
    "RandomPolicy",
    "Registry",
    "RolloutGroup",
    "RunConfig",
    "RunReport",
    "SchedulePolicy",
    "Scenario",
    "SecPolicy",
    "SidecarServer",
    "SimulatedLearner",
    "StepRecord",
    "UnknownCategory",
    "UnknownScenario",
    "VersionMismatch",
    "aggregate_rewards",
    "batch_mean_abs",
    "bin_by_success_rate",
    "build_registry",
    "category_distribution",
    "cross_axes",
    "difficulty_trace",
    "expected_abs_grpo",
    "grpo_advantages",
    "init_qtable",
    "load_registry",
    "load_scenario",
    "numeric_difficulty",
    "rloo_advantages",
    "run",
    "sample_batch",
    "save_registry",
    "serve",
    "shipped_scenarios",
    "sweep",
    "td0_update",
]
