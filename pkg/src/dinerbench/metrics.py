"""Coordination metrics and per-condition aggregation.

Six standardized metrics: deadlock rate, throughput (meals per timestep),
fairness (1 minus the max-inequality-normalized Gini coefficient of the
meal distribution), time to deadlock, starvation count, and message-action
consistency. Aggregation reports population standard deviations: the
episode set of a condition is the whole run, not a sample.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .env import Action


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one episode."""

    deadlocked: bool
    deadlock_timestep: Optional[int]
    meals_per_philosopher: tuple[int, ...]
    timesteps_used: int
    transcript_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.deadlocked != (self.deadlock_timestep is not None):
            raise ValueError("deadlocked flag and deadlock_timestep must agree")
        if self.timesteps_used <= 0:
            raise ValueError("timesteps_used must be positive")

    @property
    def meals_total(self) -> int:
        return sum(self.meals_per_philosopher)


@dataclass
class ConditionReport:
    """Aggregate metrics over the episodes of one condition."""

    condition_code: str
    episodes: int
    deadlock_rate: float
    throughput_mean: float
    throughput_std: float
    fairness_mean: float
    fairness_std: float
    time_to_deadlock: Optional[float]
    starvation_mean: float
    message_action_consistency: Optional[float]
    # Episodes where nobody ate: their fairness is defined as 1.0 by fiat
    # (all equal at zero); flagged so readers do not misread the mean.
    zero_meal_episodes: int = 0


def deadlock_rate(results: Sequence[EpisodeResult]) -> float:
    """Fraction of episodes that ended in deadlock."""
    if not results:
        raise ValueError("deadlock_rate needs at least one episode")
    return sum(r.deadlocked for r in results) / len(results)


def throughput(results: Sequence[EpisodeResult]) -> float:
    """Mean over episodes of meals divided by timesteps used."""
    if not results:
        raise ValueError("throughput needs at least one episode")
    return statistics.fmean(episode_throughput(r) for r in results)


def episode_throughput(result: EpisodeResult) -> float:
    if result.timesteps_used <= 0:
        raise ValueError("episode has zero timesteps")
    return result.meals_total / result.timesteps_used


def gini(meals: Sequence[int]) -> float:
    """Gini coefficient of a meal distribution.

    With m sorted ascending and 1-based index i:
        G = 2 * sum(i * m_i) / (N * sum(m)) - (N + 1) / N
    An all-zero distribution has no defined Gini; it is reported as 0
    (callers track the zero-total case explicitly).
    """
    if not meals:
        raise ValueError("gini needs a non-empty vector")
    if any(m < 0 for m in meals):
        raise ValueError("meal counts must be non-negative")
    n = len(meals)
    total = sum(meals)
    if total == 0:
        return 0.0
    ordered = sorted(meals)
    weighted = sum(i * m for i, m in enumerate(ordered, start=1))
    return 2 * weighted / (n * total) - (n + 1) / n


def fairness(meals: Sequence[int]) -> float:
    """1 minus the normalized Gini; 1.0 is perfect equality, 0.0 one-hot.

    Normalizing by N/(N-1) makes a single philosopher eating everything
    score exactly 0 for every table size.
    """
    n = len(meals)
    if n < 2:
        raise ValueError("fairness normalization undefined for fewer than 2 philosophers")
    total = sum(meals)
    if total == 0:
        return 1.0
    # Algebraically 1 - gini(meals) * n / (n - 1), folded into one integer
    # ratio so constant vectors give exactly 1.0 and one-hot vectors exactly 0.0.
    weighted = sum(i * m for i, m in enumerate(sorted(meals), start=1))
    return 2 * (n * total - weighted) / ((n - 1) * total)


def time_to_deadlock(results: Sequence[EpisodeResult]) -> Optional[float]:
    """Mean deadlock timestep over deadlocked episodes; None if none deadlocked."""
    steps = [r.deadlock_timestep for r in results if r.deadlocked]
    if not steps:
        return None
    return statistics.fmean(steps)


def starvation_count(result: EpisodeResult) -> int:
    """Philosophers with zero meals when the episode ended."""
    return sum(1 for m in result.meals_per_philosopher if m == 0)


_GRAB_VERB = re.compile(r"\b(grab|grabbing|take|taking|pick|picking|get|getting)\b", re.I)
_SIDE_LEFT = re.compile(r"\bleft\b", re.I)
_SIDE_RIGHT = re.compile(r"\bright\b", re.I)
_WAIT = re.compile(r"\b(wait|waiting)\b|\bhold(ing)? off\b", re.I)
_RELEASE = re.compile(r"\b(releas(e|ing)|drop(ping)?)\b|\bput(ting)? down\b", re.I)


def extract_intent(message: str) -> Optional[Action]:
    """Parse a stated intention out of a neighbor message.

    Grab verb plus exactly one side word yields a grab intent; standalone
    wait/release vocabulary yields those actions. Anything ambiguous or
    unmatched yields None and is excluded from the consistency denominator.
    """
    candidates: set[Action] = set()
    if _GRAB_VERB.search(message):
        left = bool(_SIDE_LEFT.search(message))
        right = bool(_SIDE_RIGHT.search(message))
        if left and not right:
            candidates.add(Action.GRAB_LEFT)
        elif right and not left:
            candidates.add(Action.GRAB_RIGHT)
        elif left and right:
            return None
    if _WAIT.search(message):
        candidates.add(Action.WAIT)
    if _RELEASE.search(message):
        candidates.add(Action.RELEASE)
    if len(candidates) == 1:
        return candidates.pop()
    return None


def message_action_consistency(
    pairs: Iterable[tuple[Optional[str], Action]]
) -> Optional[float]:
    """Percentage of extractable stated intents that match the executed action.

    Takes (message, action) pairs from a communication-enabled run. Pairs
    without a message, or whose message yields no extractable intent, are
    excluded; None is returned when nothing is extractable.
    """
    matched = 0
    considered = 0
    for message, action in pairs:
        if message is None:
            continue
        intent = extract_intent(message)
        if intent is None:
            continue
        considered += 1
        if intent is action:
            matched += 1
    if considered == 0:
        return None
    return 100.0 * matched / considered


def aggregate_condition(
    results: Sequence[EpisodeResult],
    condition_code: str,
    mac_pairs: Optional[Iterable[tuple[Optional[str], Action]]] = None,
) -> ConditionReport:
    """Roll the episodes of one condition up into a report row."""
    if not results:
        raise ValueError("aggregate_condition needs at least one episode")
    throughputs = [episode_throughput(r) for r in results]
    fairnesses = [fairness(r.meals_per_philosopher) for r in results]
    mac = message_action_consistency(mac_pairs) if mac_pairs is not None else None
    return ConditionReport(
        condition_code=condition_code,
        episodes=len(results),
        deadlock_rate=deadlock_rate(results),
        throughput_mean=statistics.fmean(throughputs),
        throughput_std=statistics.pstdev(throughputs),
        fairness_mean=statistics.fmean(fairnesses),
        fairness_std=statistics.pstdev(fairnesses),
        time_to_deadlock=time_to_deadlock(results),
        starvation_mean=statistics.fmean(starvation_count(r) for r in results),
        message_action_consistency=mac,
        zero_meal_episodes=sum(1 for r in results if r.meals_total == 0),
    )
