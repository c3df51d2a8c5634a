"""Scripted philosopher policies.

These are deterministic baseline agents used to exercise the environment
and the metrics: they share the decide() seam with the LLM adapter, so the
runner treats scripted and LLM agents identically. Scripted policies never
send messages, even when the condition enables communication.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Protocol

from .env import Action, Decision, Observation


@dataclass
class PolicyContext:
    """Per-episode context handed to every decide() call."""

    rng: random.Random
    n: int
    mode: str = "simultaneous"
    comms: bool = False


class Policy(Protocol):
    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision: ...


class GreedyPolicy:
    """Grab one side first, then the other; never release.

    With direction="left" every philosopher reaches for their left fork
    first, which in simultaneous mode deadlocks a fresh table in one step:
    the convergent strategy every symmetric agent lands on.
    """

    def __init__(self, direction: str = "left"):
        if direction not in ("left", "right"):
            raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")
        self.direction = direction

    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision:
        first_left = self.direction == "left"
        holds_first = obs.holds_left if first_left else obs.holds_right
        first_free = obs.left_fork_available if first_left else obs.right_fork_available
        second_free = obs.right_fork_available if first_left else obs.left_fork_available
        if not holds_first and first_free:
            return Decision(Action.GRAB_LEFT if first_left else Action.GRAB_RIGHT)
        if holds_first and second_free:
            return Decision(Action.GRAB_RIGHT if first_left else Action.GRAB_LEFT)
        return Decision(Action.WAIT)


class DijkstraPolicy:
    """Resource hierarchy: always acquire the lower-numbered adjacent fork first.

    A total order on forks rules out circular wait, so this policy is
    deadlock-free in every mode.
    """

    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision:
        left_id = obs.self_id
        right_id = (obs.self_id + 1) % ctx.n
        lower_is_left = left_id < right_id

        holds_lower = obs.holds_left if lower_is_left else obs.holds_right
        lower_free = obs.left_fork_available if lower_is_left else obs.right_fork_available
        higher_free = obs.right_fork_available if lower_is_left else obs.left_fork_available

        if not holds_lower:
            if lower_free:
                return Decision(Action.GRAB_LEFT if lower_is_left else Action.GRAB_RIGHT)
            return Decision(Action.WAIT)
        if higher_free:
            return Decision(Action.GRAB_RIGHT if lower_is_left else Action.GRAB_LEFT)
        return Decision(Action.WAIT)


class RandomPolicy:
    """Uniform choice over the four actions from the episode's seeded rng."""

    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision:
        return Decision(ctx.rng.choice(list(Action)))


class PolitePolicy:
    """Greedy-left, except it releases a lone fork when the other is taken.

    Exists to pin down the structural deadlock rule: at the end-of-timestep
    check every polite philosopher still holds one fork, so a symmetric
    table is flagged deadlocked even though each would release next turn.
    """

    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision:
        holds_one = obs.holds_left != obs.holds_right
        other_free = obs.right_fork_available if obs.holds_left else obs.left_fork_available
        if holds_one and not other_free:
            return Decision(Action.RELEASE)
        return GreedyPolicy("left").decide(obs, ctx)


POLICY_NAMES = ("greedy-left", "greedy-right", "dijkstra", "random", "polite")


def make_policy(name: str) -> Policy:
    """Instantiate a scripted policy by its CLI name."""
    factories = {
        "greedy-left": lambda: GreedyPolicy("left"),
        "greedy-right": lambda: GreedyPolicy("right"),
        "dijkstra": DijkstraPolicy,
        "random": RandomPolicy,
        "polite": PolitePolicy,
    }
    if name not in factories:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)} or llm")
    return factories[name]()
