"""Shared test instruments: independent oracles and a message-emitting policy.

The oracles here deliberately avoid the implementation paths they check:
the Gini oracle uses the pairwise-difference form, and the deadlock oracle
builds an explicit wait-for graph and searches it for a cycle.
"""

from __future__ import annotations

from typing import Optional, Sequence

from dinerbench.env import (
    Action,
    Decision,
    Observation,
    PhilosopherStatus,
    TableState,
)
from dinerbench.policies import GreedyPolicy, PolicyContext


def gini_pairwise(values: Sequence[int]) -> float:
    """Gini via mean absolute pairwise difference: sum|mi-mj| / (2N * sum(m))."""
    n = len(values)
    total = sum(values)
    if total == 0:
        return 0.0
    diff_sum = sum(abs(a - b) for a in values for b in values)
    return diff_sum / (2 * n * total)


def wait_for_graph_deadlock(table: TableState) -> bool:
    """Brute-force circular-wait check.

    Restricted to states where every philosopher is hungry and holds exactly
    one fork; builds the wait-for graph (each philosopher waits on whoever
    holds their missing fork) and walks it for a cycle.
    """
    n = table.n
    if any(s is not PhilosopherStatus.HUNGRY for s in table.status):
        return False
    held = {pid: [f for f, o in enumerate(table.fork_owner) if o == pid] for pid in range(n)}
    if any(len(forks) != 1 for forks in held.values()):
        return False

    edges: dict[int, Optional[int]] = {}
    for pid in range(n):
        lf, rf = pid, (pid + 1) % n
        missing = rf if held[pid] == [lf] else lf
        edges[pid] = table.fork_owner[missing]

    for start in range(n):
        seen = set()
        node: Optional[int] = start
        while node is not None and node not in seen:
            seen.add(node)
            node = edges[node]
        if node == start:
            return True
    return False


class AnnouncingPolicy:
    """Greedy-left that also announces its chosen action to its neighbors.

    Test instrument for the message-delay and message-action-consistency
    paths; production scripted policies never send messages.
    """

    ANNOUNCEMENTS = {
        Action.GRAB_LEFT: "I will grab left",
        Action.GRAB_RIGHT: "I will grab right",
        Action.WAIT: "I will wait this turn",
        Action.RELEASE: "I will release my fork",
    }

    def __init__(self, inner=None) -> None:
        self._inner = inner if inner is not None else GreedyPolicy("left")

    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision:
        decision = self._inner.decide(obs, ctx)
        return Decision(decision.action, message=self.ANNOUNCEMENTS[decision.action])
