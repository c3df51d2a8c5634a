"""Dining Philosophers state machine.

N philosophers around a circular table, N forks. Fork indexing convention:
philosopher i's left fork is fork i, their right fork is fork (i+1) mod N.
All state transitions go through apply_simultaneous / apply_sequential,
which take a state in and return a new state out, so runs are replayable
from recorded decisions alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence


class ConfigurationError(ValueError):
    """Raised for table configurations the machine is not defined on."""


class Action(Enum):
    GRAB_LEFT = "GRAB_LEFT"
    GRAB_RIGHT = "GRAB_RIGHT"
    RELEASE = "RELEASE"
    WAIT = "WAIT"


class PhilosopherStatus(Enum):
    HUNGRY = "HUNGRY"
    EATING = "EATING"


MAX_MESSAGE_LEN = 240


@dataclass
class Decision:
    """One agent's output for one turn."""

    action: Action
    message: Optional[str] = None
    thinking: str = ""
    parse_ok: bool = True

    def __post_init__(self) -> None:
        if self.message is not None:
            msg = self.message.strip()
            if not msg or msg.lower() == "none":
                self.message = None
            else:
                self.message = msg[:MAX_MESSAGE_LEN]


@dataclass(frozen=True)
class Observation:
    """The local view handed to one philosopher: no global state."""

    self_id: int
    status: PhilosopherStatus
    meals_eaten: int
    holds_left: bool
    holds_right: bool
    left_fork_available: bool
    right_fork_available: bool
    left_message: Optional[str] = None
    right_message: Optional[str] = None


@dataclass(frozen=True)
class PhilosopherEvents:
    """What happened to one philosopher within one applied timestep."""

    action: Action
    grab_result: Optional[str] = None  # "succeeded" | "failed" | "noop" for grabs
    released: tuple[int, ...] = ()     # forks dropped by an explicit RELEASE
    ate: bool = False
    auto_released: tuple[int, ...] = ()


# StepEvents: one PhilosopherEvents per philosopher that acted this timestep.
# In sequential mode only the acting philosopher's slot is populated.
StepEvents = dict[int, PhilosopherEvents]


@dataclass(frozen=True)
class TableState:
    n: int
    fork_owner: tuple[Optional[int], ...]
    status: tuple[PhilosopherStatus, ...]
    meals: tuple[int, ...]
    timestep: int

    def left_fork(self, pid: int) -> int:
        return pid

    def right_fork(self, pid: int) -> int:
        return (pid + 1) % self.n

    def forks_held(self, pid: int) -> tuple[int, ...]:
        return tuple(f for f, owner in enumerate(self.fork_owner) if owner == pid)


def new_table(n: int) -> TableState:
    """Fresh table: all forks free, everyone hungry, no meals, timestep 0."""
    if n < 3:
        raise ConfigurationError(
            f"need at least 3 philosophers, got {n} (n=2 collapses left/right neighbors)"
        )
    return TableState(
        n=n,
        fork_owner=(None,) * n,
        status=(PhilosopherStatus.HUNGRY,) * n,
        meals=(0,) * n,
        timestep=0,
    )


def observe(
    table: TableState,
    pid: int,
    left_message: Optional[str] = None,
    right_message: Optional[str] = None,
) -> Observation:
    """Build philosopher pid's partial observation of the table.

    Message slots are filled by the caller (the runner's message bus) and
    only when communication is enabled; the environment itself never sees
    the bus.
    """
    if not 0 <= pid < table.n:
        raise ValueError(f"philosopher id {pid} out of range for n={table.n}")
    lf, rf = table.left_fork(pid), table.right_fork(pid)
    return Observation(
        self_id=pid,
        status=table.status[pid],
        meals_eaten=table.meals[pid],
        holds_left=table.fork_owner[lf] == pid,
        holds_right=table.fork_owner[rf] == pid,
        left_fork_available=table.fork_owner[lf] is None,
        right_fork_available=table.fork_owner[rf] is None,
        left_message=left_message,
        right_message=right_message,
    )


def _grab_target(table: TableState, pid: int, action: Action) -> int:
    return table.left_fork(pid) if action is Action.GRAB_LEFT else table.right_fork(pid)


def _apply_release(owner: list[Optional[int]], pid: int) -> tuple[int, ...]:
    dropped = tuple(f for f, o in enumerate(owner) if o == pid)
    for f in dropped:
        owner[f] = None
    return dropped


def _apply_grab(owner: list[Optional[int]], fork: int, pid: int) -> str:
    if owner[fork] == pid:
        return "noop"
    if owner[fork] is None:
        owner[fork] = pid
        return "succeeded"
    return "failed"


def _try_eat(
    table: TableState, owner: list[Optional[int]], meals: list[int], pid: int
) -> tuple[int, ...]:
    """Eat-and-auto-release if pid holds both adjacent forks; returns freed forks."""
    lf, rf = table.left_fork(pid), table.right_fork(pid)
    if owner[lf] == pid and owner[rf] == pid:
        meals[pid] += 1
        owner[lf] = None
        owner[rf] = None
        return (lf, rf) if lf != rf else (lf,)
    return ()


def apply_simultaneous(
    table: TableState, decisions: Sequence[Decision]
) -> tuple[TableState, StepEvents]:
    """Apply one lockstep timestep: everyone decided from the same snapshot.

    Phase order is fixed: releases, then grabs (a contested fork goes to the
    lower philosopher id), then eating with automatic release of both forks.
    A grab of a fork already held by self is a recorded no-op; a grab of a
    fork held by someone else is a recorded failure. Pure: same inputs give
    the same outputs.
    """
    if len(decisions) != table.n:
        raise ValueError(f"expected {table.n} decisions, got {len(decisions)}")

    owner = list(table.fork_owner)
    meals = list(table.meals)
    released: dict[int, tuple[int, ...]] = {}
    grab_result: dict[int, str] = {}

    for pid, dec in enumerate(decisions):
        if dec.action is Action.RELEASE:
            released[pid] = _apply_release(owner, pid)

    # Ascending pid order makes the lower id win every contested free fork.
    for pid, dec in enumerate(decisions):
        if dec.action in (Action.GRAB_LEFT, Action.GRAB_RIGHT):
            grab_result[pid] = _apply_grab(owner, _grab_target(table, pid, dec.action), pid)

    events: StepEvents = {}
    for pid, dec in enumerate(decisions):
        auto = _try_eat(table, owner, meals, pid)
        events[pid] = PhilosopherEvents(
            action=dec.action,
            grab_result=grab_result.get(pid),
            released=released.get(pid, ()),
            ate=bool(auto),
            auto_released=auto,
        )

    new_state = TableState(
        n=table.n,
        fork_owner=tuple(owner),
        status=(PhilosopherStatus.HUNGRY,) * table.n,
        meals=tuple(meals),
        timestep=table.timestep + 1,
    )
    return new_state, events


def apply_sequential(
    table: TableState, pid: int, decision: Decision
) -> tuple[TableState, StepEvents]:
    """Apply a single philosopher's action; one action is one timestep.

    Turn order is the fixed round-robin 0..n-1, so the acting philosopher
    must be timestep mod n.
    """
    expected = table.timestep % table.n
    if pid != expected:
        raise ValueError(f"out of turn: philosopher {pid} acted on philosopher {expected}'s turn")

    owner = list(table.fork_owner)
    meals = list(table.meals)
    released: tuple[int, ...] = ()
    grab_result: Optional[str] = None

    if decision.action is Action.RELEASE:
        released = _apply_release(owner, pid)
    elif decision.action in (Action.GRAB_LEFT, Action.GRAB_RIGHT):
        grab_result = _apply_grab(owner, _grab_target(table, pid, decision.action), pid)

    auto = _try_eat(table, owner, meals, pid)
    events: StepEvents = {
        pid: PhilosopherEvents(
            action=decision.action,
            grab_result=grab_result,
            released=released,
            ate=bool(auto),
            auto_released=auto,
        )
    }
    new_state = TableState(
        n=table.n,
        fork_owner=tuple(owner),
        status=(PhilosopherStatus.HUNGRY,) * table.n,
        meals=tuple(meals),
        timestep=table.timestep + 1,
    )
    return new_state, events


def detect_deadlock(table: TableState) -> bool:
    """Structural deadlock: everyone hungry and everyone holds exactly one fork.

    Checked once per fully-applied timestep, after automatic release. The
    rule is structural: it fires even under policies that would later
    release.
    """
    if any(s is not PhilosopherStatus.HUNGRY for s in table.status):
        return False
    held = [0] * table.n
    for owner in table.fork_owner:
        if owner is not None:
            held[owner] += 1
    return all(count == 1 for count in held)
