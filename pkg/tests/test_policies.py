import random

import pytest

from dinerbench.env import (
    Action,
    Observation,
    PhilosopherStatus,
    apply_simultaneous,
    detect_deadlock,
    new_table,
    observe,
)
from dinerbench.policies import (
    DijkstraPolicy,
    GreedyPolicy,
    PolicyContext,
    PolitePolicy,
    RandomPolicy,
    make_policy,
)


def ctx(n=5, seed=42):
    return PolicyContext(rng=random.Random(seed), n=n)


def obs(self_id=0, holds_left=False, holds_right=False, left_avail=True, right_avail=True):
    return Observation(
        self_id=self_id,
        status=PhilosopherStatus.HUNGRY,
        meals_eaten=0,
        holds_left=holds_left,
        holds_right=holds_right,
        left_fork_available=left_avail,
        right_fork_available=right_avail,
    )


class TestGreedyLeft:
    def test_fresh_table_grabs_left(self):
        assert GreedyPolicy("left").decide(obs(), ctx()).action is Action.GRAB_LEFT

    def test_waits_when_right_taken(self):
        d = GreedyPolicy("left").decide(obs(holds_left=True, left_avail=False, right_avail=False), ctx())
        assert d.action is Action.WAIT

    def test_grabs_right_to_complete(self):
        d = GreedyPolicy("left").decide(obs(holds_left=True, left_avail=False), ctx())
        assert d.action is Action.GRAB_RIGHT

    def test_never_emits_messages(self):
        assert GreedyPolicy("left").decide(obs(), ctx()).message is None


class TestDijkstra:
    def test_wraparound_philosopher_grabs_right_first(self):
        # P4 of N=5: left fork 4, right fork 0; fork 0 is lower.
        d = DijkstraPolicy().decide(obs(self_id=4), ctx(n=5))
        assert d.action is Action.GRAB_RIGHT

    def test_p0_grabs_left_first(self):
        d = DijkstraPolicy().decide(obs(self_id=0), ctx(n=5))
        assert d.action is Action.GRAB_LEFT

    def test_waits_holding_lower_when_higher_taken(self):
        d = DijkstraPolicy().decide(
            obs(self_id=0, holds_left=True, left_avail=False, right_avail=False), ctx(n=5)
        )
        assert d.action is Action.WAIT


def run_simultaneous(policies, n, steps, seed=42):
    context = PolicyContext(rng=random.Random(seed), n=n)
    table = new_table(n)
    states = [table]
    for _ in range(steps):
        decisions = [policies[pid].decide(observe(table, pid), context) for pid in range(n)]
        table, _ = apply_simultaneous(table, decisions)
        states.append(table)
        if detect_deadlock(table):
            break
    return table, states


@pytest.mark.parametrize("n", [3, 5])
def test_dijkstra_never_deadlocks_simultaneous(n):
    policies = [DijkstraPolicy() for _ in range(n)]
    table, states = run_simultaneous(policies, n, steps=30)
    assert not any(detect_deadlock(s) for s in states)
    assert sum(table.meals) > 0


def test_dijkstra_deadlock_free_over_20_episodes_n5():
    for episode in range(20):
        policies = [DijkstraPolicy() for _ in range(5)]
        _, states = run_simultaneous(policies, 5, steps=30, seed=42 + episode)
        assert not any(detect_deadlock(s) for s in states)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_greedy_left_deadlocks_at_timestep_one(n):
    policies = [GreedyPolicy("left") for _ in range(n)]
    table, _ = run_simultaneous(policies, n, steps=30)
    assert detect_deadlock(table)
    assert table.timestep == 1


class TestRandom:
    def test_deterministic_under_seed(self):
        seq1 = [RandomPolicy().decide(obs(), ctx(seed=42)).action for _ in range(1)]
        seq2 = [RandomPolicy().decide(obs(), ctx(seed=42)).action for _ in range(1)]
        assert seq1 == seq2

    def test_identical_seeds_identical_sequences(self):
        c1, c2 = ctx(seed=7), ctx(seed=7)
        p = RandomPolicy()
        seq1 = [p.decide(obs(), c1).action for _ in range(100)]
        seq2 = [p.decide(obs(), c2).action for _ in range(100)]
        assert seq1 == seq2

    def test_uniform_within_four_sigma(self):
        # Binomial(10000, 0.25): sigma = sqrt(n p (1-p)) ~ 43.3
        draws = 10_000
        c = ctx(seed=42)
        p = RandomPolicy()
        counts = {a: 0 for a in Action}
        for _ in range(draws):
            counts[p.decide(obs(), c).action] += 1
        sigma = (draws * 0.25 * 0.75) ** 0.5
        for action, count in counts.items():
            assert abs(count - draws * 0.25) < 4 * sigma, action


class TestPolite:
    def test_releases_lone_fork_when_blocked(self):
        d = PolitePolicy().decide(obs(holds_left=True, left_avail=False, right_avail=False), ctx())
        assert d.action is Action.RELEASE

    def test_fresh_table_grabs_left(self):
        assert PolitePolicy().decide(obs(), ctx()).action is Action.GRAB_LEFT

    def test_structural_deadlock_flagged_despite_politeness(self):
        policies = [PolitePolicy() for _ in range(3)]
        table, _ = run_simultaneous(policies, 3, steps=30)
        assert detect_deadlock(table)
        assert table.timestep == 1


def test_make_policy_names():
    for name in ("greedy-left", "greedy-right", "dijkstra", "random", "polite"):
        assert make_policy(name) is not None
    with pytest.raises(ValueError):
        make_policy("waiter")
