import math

import numpy as np
import pytest

from sec_client.example_loop import default_scenario_path
from sec_client.toy import (
    ToyLearner,
    ToyScenario,
    grpo_mean_abs,
    load_toy_scenario,
    logistic,
    rloo_mean_abs,
)


def small_raw(**overrides):
    raw = {
        "name": "t",
        "eta": 0.01,
        "rollouts": 4,
        "reward_scheme": "binary",
        "pool_size": 10,
        "axes": [["difficulty", ["L1", "L2"]]],
        "offsets": {"difficulty=L1": 0.0, "difficulty=L2": 1.0},
        "coupling": {"rho": 0.5},
    }
    raw.update(overrides)
    return raw


def test_packaged_scenario_parses():
    scenario = load_toy_scenario(default_scenario_path())
    assert scenario.training == ["difficulty=L1", "difficulty=L2", "difficulty=L3"]
    assert scenario.held_out == ["difficulty=L4"]
    assert scenario.categories[-1] == "difficulty=L4"
    assert scenario.rollouts == 8


def test_cross_product_order_first_axis_slowest():
    raw = small_raw(
        axes=[["task", ["a", "b"]], ["difficulty", ["L1", "L2"]]],
        offsets={
            "task=a|difficulty=L1": 0.0,
            "task=a|difficulty=L2": 1.0,
            "task=b|difficulty=L1": 0.0,
            "task=b|difficulty=L2": 1.0,
        },
    )
    scenario = ToyScenario(raw)
    assert scenario.training == [
        "task=a|difficulty=L1",
        "task=a|difficulty=L2",
        "task=b|difficulty=L1",
        "task=b|difficulty=L2",
    ]


def test_coupling_decays_with_level_distance_and_task_change():
    raw = small_raw(
        axes=[["task", ["a", "b"]], ["difficulty", ["L1", "L2"]]],
        offsets={
            "task=a|difficulty=L1": 0.0,
            "task=a|difficulty=L2": 1.0,
            "task=b|difficulty=L1": 0.0,
            "task=b|difficulty=L2": 1.0,
        },
        coupling={"rho": 0.5, "cross_task": 0.25},
    )
    scenario = ToyScenario(raw)
    assert scenario.coupling("task=a|difficulty=L1", "task=a|difficulty=L1") == 1.0
    assert scenario.coupling("task=a|difficulty=L1", "task=a|difficulty=L2") == 0.5
    assert scenario.coupling("task=a|difficulty=L1", "task=b|difficulty=L1") == 0.25
    assert scenario.coupling("task=a|difficulty=L1", "task=b|difficulty=L2") == 0.125


def test_scenario_validation():
    with pytest.raises(ValueError):
        ToyScenario(small_raw(reward_scheme="bogus"))
    with pytest.raises(ValueError):
        ToyScenario(small_raw(rollouts=1))
    with pytest.raises(ValueError):
        ToyScenario(small_raw(offsets={"difficulty=L1": 0.0}))
    with pytest.raises(ValueError):
        ToyScenario(
            small_raw(axes=[["task", ["a"]]], offsets={"task=a": 0.0})
        )


def test_logistic_is_overflow_safe_and_symmetric():
    assert logistic(0.0) == 0.5
    assert logistic(800.0) == 1.0
    assert logistic(-800.0) == 0.0
    assert abs(logistic(2.0) + logistic(-2.0) - 1.0) <= 1e-15


def test_grpo_mean_abs_hand_values():
    assert grpo_mean_abs((1.0, 1.0, 1.0, 1.0)) == 0.0
    assert grpo_mean_abs((0.0, 0.0, 0.0, 0.0)) == 0.0
    assert grpo_mean_abs((1.0, 1.0, 0.0, 0.0)) == 1.0
    # one success in four: mean 1/4, std sqrt(3)/4, mean|.| = sqrt(3)/2
    assert abs(grpo_mean_abs((1.0, 0.0, 0.0, 0.0)) - math.sqrt(3.0) / 2.0) <= 1e-15


def test_rloo_mean_abs_hand_values():
    assert abs(rloo_mean_abs((1.0, 1.0, 0.0, 0.0)) - 2.0 / 3.0) <= 1e-15
    assert rloo_mean_abs((1.0, 1.0)) == 0.0


def test_rollout_rewards_come_from_the_success_stream():
    scenario = ToyScenario(small_raw())
    learner = ToyLearner(scenario, seed=11)
    entries = [("a", "difficulty=L1"), ("b", "difficulty=L2")]
    values = learner.batch_advantages(entries)

    # Reproduce by hand: stream (seed, id 2), 4 draws per unique problem,
    # success iff draw < logistic(-offset).
    gen = np.random.Generator(np.random.Philox(key=[11, 2]))
    for category, expected_id in (("difficulty=L1", "a"), ("difficulty=L2", "b")):
        p = logistic(0.0 - scenario.offsets[category])
        rewards = tuple(1.0 if float(u) < p else 0.0 for u in gen.random(4))
        assert values[expected_id] == grpo_mean_abs(rewards)


def test_duplicate_slots_share_one_rollout_group():
    scenario = ToyScenario(small_raw())
    one = ToyLearner(scenario, seed=5)
    twice = ToyLearner(scenario, seed=5)
    single = one.batch_advantages([("a", "difficulty=L1")])
    doubled = twice.batch_advantages([("a", "difficulty=L1"), ("a", "difficulty=L1")])
    assert single == doubled


def test_same_seed_same_draws_different_seed_differs():
    scenario = ToyScenario(small_raw())
    entries = [(f"p{i}", "difficulty=L1") for i in range(12)]
    a = ToyLearner(scenario, seed=3).batch_advantages(entries)
    b = ToyLearner(scenario, seed=3).batch_advantages(entries)
    c = ToyLearner(scenario, seed=4).batch_advantages(entries)
    assert a == b
    assert a != c


def test_shaped_scheme_pays_format_consolation():
    raw = small_raw(
        reward_scheme="shaped",
        format_success_prob=1.0,
        offsets={"difficulty=L1": 800.0, "difficulty=L2": 1.0},
    )
    learner = ToyLearner(ToyScenario(raw), seed=0)
    # The offset makes every rollout fail, so every reward is the 0.1
    # consolation and the group is flat.
    rewards = learner._rollout_rewards("difficulty=L1")
    assert rewards == (0.1, 0.1, 0.1, 0.1)


def test_train_applies_eta_coupling_and_duplicates():
    scenario = ToyScenario(small_raw())
    learner = ToyLearner(scenario, seed=0)
    learner.train(
        [("a", "difficulty=L1"), ("a", "difficulty=L1")],
        {"a": 1.0},
    )
    assert learner.skill["difficulty=L1"] == pytest.approx(2 * 0.01, abs=1e-15)
    assert learner.skill["difficulty=L2"] == pytest.approx(2 * 0.01 * 0.5, abs=1e-15)


def test_training_raises_success_probability():
    scenario = ToyScenario(small_raw())
    learner = ToyLearner(scenario, seed=0)
    before = learner.evaluate()["difficulty=L1"]
    learner.train([("a", "difficulty=L1")], {"a": 1.0})
    assert learner.evaluate()["difficulty=L1"] > before


def test_unknown_estimator_and_category_rejected():
    scenario = ToyScenario(small_raw())
    with pytest.raises(ValueError):
        ToyLearner(scenario, seed=0, estimator="ppo")
    learner = ToyLearner(scenario, seed=0)
    with pytest.raises(ValueError):
        learner.success_probability("difficulty=L9")
