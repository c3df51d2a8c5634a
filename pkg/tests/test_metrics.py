import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dinerbench.env import Action
from dinerbench.metrics import (
    EpisodeResult,
    aggregate_condition,
    deadlock_rate,
    extract_intent,
    fairness,
    gini,
    message_action_consistency,
    starvation_count,
    throughput,
    time_to_deadlock,
)

from helpers import gini_pairwise


def episode(meals, timesteps=30, deadlock_at=None):
    return EpisodeResult(
        deadlocked=deadlock_at is not None,
        deadlock_timestep=deadlock_at,
        meals_per_philosopher=tuple(meals),
        timesteps_used=timesteps,
    )


class TestDeadlockRate:
    def test_five_of_twenty(self):
        results = [episode([1] * 5, deadlock_at=3)] * 5 + [episode([1] * 5)] * 15
        assert deadlock_rate(results) == 0.25

    def test_none(self):
        assert deadlock_rate([episode([1, 1, 1])] * 4) == 0.0

    def test_all(self):
        assert deadlock_rate([episode([0, 0, 0], deadlock_at=1)] * 3) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            deadlock_rate([])


class TestThroughput:
    def test_single_episode(self):
        assert throughput([episode([3, 3, 3], timesteps=30)]) == pytest.approx(0.3)

    def test_two_episodes_hand_arithmetic(self):
        # (10/20 + 0/30) / 2 = 0.25
        results = [episode([5, 5], timesteps=20), episode([0, 0], timesteps=30)]
        assert throughput(results) == pytest.approx(0.25)

    def test_zero_meals(self):
        assert throughput([episode([0, 0, 0])] * 3) == 0.0


class TestGini:
    def test_perfect_equality(self):
        assert gini([1, 1, 1]) == 0.0

    def test_one_hot_three(self):
        # pairwise-difference oracle: 20 / (2*3*5) = 2/3
        assert gini([0, 0, 5]) == pytest.approx(2 / 3)
        assert gini_pairwise([0, 0, 5]) == pytest.approx(2 / 3)

    def test_nearly_equal_five(self):
        assert gini([1, 1, 1, 1, 2]) == pytest.approx(2 / 15)
        assert gini_pairwise([1, 1, 1, 1, 2]) == pytest.approx(2 / 15)

    def test_zero_total(self):
        assert gini([0, 0, 0]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gini([])


class TestFairness:
    def test_perfect_equality(self):
        assert fairness([1, 1, 1, 1, 1]) == 1.0

    def test_one_hot_is_exactly_zero(self):
        assert fairness([0, 0, 5]) == 0.0

    def test_nearly_equal_five(self):
        assert fairness([1, 1, 1, 1, 2]) == pytest.approx(5 / 6)

    def test_zero_total_is_one(self):
        assert fairness([0, 0, 0]) == 1.0

    def test_single_philosopher_rejected(self):
        with pytest.raises(ValueError):
            fairness([3])


meal_vectors = st.lists(st.integers(min_value=0, max_value=50), min_size=2, max_size=10).filter(
    lambda v: sum(v) > 0
)


@given(meal_vectors)
@settings(max_examples=1000)
def test_gini_matches_pairwise_oracle(meals):
    assert math.isclose(gini(meals), gini_pairwise(meals), abs_tol=1e-12)


@given(st.integers(min_value=2, max_value=10), st.integers(min_value=0, max_value=50))
def test_fairness_of_constant_vector_is_one(n, c):
    assert fairness([c] * n) == 1.0


@given(st.integers(min_value=2, max_value=10), st.integers(min_value=1, max_value=50))
def test_fairness_of_one_hot_is_zero(n, c):
    for position in range(n):
        meals = [0] * n
        meals[position] = c
        assert fairness(meals) == 0.0


@given(meal_vectors, st.integers(min_value=1, max_value=7))
def test_fairness_scale_invariant(meals, k):
    assert fairness([k * m for m in meals]) == pytest.approx(fairness(meals))


@given(meal_vectors)
def test_fairness_in_unit_interval(meals):
    assert -1e-12 <= fairness(meals) <= 1 + 1e-12


class TestTimeToDeadlock:
    def test_mean_over_deadlocked(self):
        results = [
            episode([0, 0, 0], deadlock_at=5),
            episode([1, 1, 1]),
            episode([0, 0, 0], deadlock_at=10),
        ]
        assert time_to_deadlock(results) == 7.5

    def test_absent_when_none(self):
        assert time_to_deadlock([episode([1, 1, 1])]) is None

    def test_single(self):
        assert time_to_deadlock([episode([0, 0, 0], deadlock_at=1)]) == 1.0


class TestStarvation:
    def test_two_starved(self):
        assert starvation_count(episode([0, 2, 0, 1, 3])) == 2

    def test_none_starved(self):
        assert starvation_count(episode([1, 2, 3])) == 0

    def test_immediate_deadlock_all_starved(self):
        assert starvation_count(episode([0] * 5, deadlock_at=1, timesteps=1)) == 5


class TestIntentGrammar:
    def test_grab_left(self):
        assert extract_intent("I will grab left") is Action.GRAB_LEFT

    def test_taking_right(self):
        assert extract_intent("taking my right fork") is Action.GRAB_RIGHT

    def test_wait(self):
        assert extract_intent("I'll wait this round") is Action.WAIT

    def test_hold_off(self):
        assert extract_intent("going to hold off") is Action.WAIT

    def test_release(self):
        assert extract_intent("I will put down my fork") is Action.RELEASE

    def test_conflicting_sides_excluded(self):
        assert extract_intent("grabbing left then right") is None

    def test_no_match_excluded(self):
        assert extract_intent("good luck everyone") is None

    def test_conflicting_verbs_excluded(self):
        assert extract_intent("I will grab left or maybe wait") is None


class TestMessageActionConsistency:
    def test_consistent_pair_counts(self):
        assert message_action_consistency([("I will grab left", Action.GRAB_LEFT)]) == 100.0

    def test_absent_messages_excluded(self):
        pairs = [(None, Action.WAIT), ("I will grab left", Action.GRAB_LEFT)]
        assert message_action_consistency(pairs) == 100.0

    def test_inconsistent_pair(self):
        assert message_action_consistency([("taking my right fork", Action.GRAB_LEFT)]) == 0.0

    def test_no_extractable_intent_is_absent(self):
        assert message_action_consistency([("hello", Action.WAIT), (None, Action.WAIT)]) is None

    def test_seven_of_ten(self):
        pairs = [("I will grab left", Action.GRAB_LEFT)] * 7
        pairs += [("I will grab left", Action.GRAB_RIGHT)] * 3
        pairs += [("good luck", Action.WAIT)]  # excluded from the denominator
        assert message_action_consistency(pairs) == 70.0


class TestAggregate:
    def test_identical_episodes_zero_std(self):
        report = aggregate_condition([episode([1, 1, 1, 1, 1])] * 20, "sim5nc")
        assert report.throughput_std == 0.0
        assert report.fairness_std == 0.0
        assert report.episodes == 20

    def test_mean_and_population_std(self):
        results = [episode([3, 3], timesteps=30), episode([6, 6], timesteps=30)]
        report = aggregate_condition(results, "seq3nc")
        assert report.throughput_mean == pytest.approx(0.3)
        assert report.throughput_std == pytest.approx(0.1)

    def test_report_row_shape_without_comms(self):
        report = aggregate_condition(
            [episode([2, 1, 0, 1, 2], deadlock_at=12, timesteps=12)] * 5
            + [episode([2, 2, 2, 2, 2])] * 15,
            "sim5nc",
        )
        assert report.deadlock_rate == 0.25
        assert report.time_to_deadlock == 12.0
        assert report.message_action_consistency is None

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_condition([], "sim5nc")
