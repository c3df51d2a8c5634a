"""Condition-matrix orchestration.

Runs episodes under either scheduler, persists one JSONL transcript per
episode, and aggregates per-condition reports. Transcripts are append-only
records (header, one record per applied timestep, footer) that contain
everything needed to re-derive every table state; verify_transcript does
exactly that re-derivation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import metrics
from .env import (
    Action,
    Decision,
    Observation,
    PhilosopherEvents,
    StepEvents,
    TableState,
    apply_sequential,
    apply_simultaneous,
    detect_deadlock,
    new_table,
    observe,
)
from .metrics import ConditionReport, EpisodeResult
from .policies import Policy, PolicyContext

import random

SIMULTANEOUS = "simultaneous"
SEQUENTIAL = "sequential"

STANDARD_CONDITIONS = (
    "sim5nc", "sim5c", "seq5nc", "seq5c",
    "sim3nc", "sim3c", "seq3nc", "seq3c",
)

_CONDITION_RE = re.compile(r"^(sim|seq)(\d+)(nc|c)$")


class RunError(RuntimeError):
    """An episode aborted for a non-coordination reason (e.g. transport failure)."""


@dataclass(frozen=True)
class ConditionCode:
    mode: str  # simultaneous | sequential
    n: int
    comms: bool

    @property
    def code(self) -> str:
        return f"{'sim' if self.mode == SIMULTANEOUS else 'seq'}{self.n}{'c' if self.comms else 'nc'}"


def parse_condition(code: str) -> ConditionCode:
    """Parse a condition code like sim5nc or seq3c."""
    m = _CONDITION_RE.match(code)
    if not m:
        raise ValueError(
            f"malformed condition code {code!r}; expected mode (sim|seq) + "
            f"philosopher count + comms flag (c|nc), e.g. {', '.join(STANDARD_CONDITIONS)}"
        )
    n = int(m.group(2))
    if n < 3:
        raise ValueError(f"condition {code!r} needs at least 3 philosophers")
    return ConditionCode(
        mode=SIMULTANEOUS if m.group(1) == "sim" else SEQUENTIAL,
        n=n,
        comms=m.group(3) == "c",
    )


@dataclass
class RunConfig:
    condition: ConditionCode
    episodes: int = 20
    max_timesteps: int = 30
    seed: int = 42
    policy_name: str = "greedy-left"
    out_dir: Optional[Path] = None


class MessageBus:
    """Delayed neighbor messaging: a message sent at timestep t is visible
    to both neighbors starting at t+1.

    In simultaneous mode a message is visible exactly at t+1 (everyone
    observes every timestep, newer messages replace older ones). In
    sequential mode the recipient may not observe at t+1; the message waits
    for their next observation and is consumed by it.
    """

    def __init__(self, n: int):
        self.n = n
        # slot per (recipient, side): (text, sent_timestep)
        self._slots: dict[tuple[int, str], tuple[str, int]] = {}

    def send(self, sender: int, text: str, timestep: int) -> None:
        right_recipient = (sender + 1) % self.n  # sees sender as its left neighbor
        left_recipient = (sender - 1) % self.n   # sees sender as its right neighbor
        self._slots[(right_recipient, "left")] = (text, timestep)
        self._slots[(left_recipient, "right")] = (text, timestep)

    def collect(
        self, recipient: int, timestep: int, mode: str
    ) -> dict[str, tuple[str, int]]:
        """Messages visible to recipient at this observation, keyed by side."""
        visible: dict[str, tuple[str, int]] = {}
        for side in ("left", "right"):
            entry = self._slots.get((recipient, side))
            if entry is None:
                continue
            text, sent = entry
            if mode == SIMULTANEOUS:
                if sent == timestep - 1:
                    visible[side] = entry
            else:
                if sent < timestep:
                    visible[side] = entry
                    del self._slots[(recipient, side)]
        return visible


def _obs_record(obs: Observation, sent_at: dict[str, int]) -> dict:
    return {
        "self_id": obs.self_id,
        "status": obs.status.value,
        "meals_eaten": obs.meals_eaten,
        "holds_left": obs.holds_left,
        "holds_right": obs.holds_right,
        "left_fork_available": obs.left_fork_available,
        "right_fork_available": obs.right_fork_available,
        "left_message": obs.left_message,
        "right_message": obs.right_message,
        "left_message_sent_at": sent_at.get("left"),
        "right_message_sent_at": sent_at.get("right"),
    }


def _decision_record(dec: Decision) -> dict:
    return {
        "action": dec.action.value,
        "message": dec.message,
        "thinking": dec.thinking,
        "parse_ok": dec.parse_ok,
    }


def _events_record(events: StepEvents) -> dict:
    return {
        str(pid): {
            "action": ev.action.value,
            "grab_result": ev.grab_result,
            "released": list(ev.released),
            "ate": ev.ate,
            "auto_released": list(ev.auto_released),
        }
        for pid, ev in sorted(events.items())
    }


def _state_record(table: TableState) -> dict:
    return {
        "fork_owner": list(table.fork_owner),
        "meals": list(table.meals),
        "timestep": table.timestep,
    }


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def run_episode(
    config: RunConfig,
    episode_index: int,
    policies: Sequence[Policy],
    transcript_path: Optional[Path] = None,
) -> EpisodeResult:
    """Run one episode to deadlock or to the timestep horizon.

    The per-episode rng is seeded seed + episode_index so any episode can
    be reproduced on its own.
    """
    cond = config.condition
    if len(policies) != cond.n:
        raise ValueError(f"need {cond.n} policies, got {len(policies)}")

    ctx = PolicyContext(
        rng=random.Random(config.seed + episode_index),
        n=cond.n,
        mode=cond.mode,
        comms=cond.comms,
    )
    table = new_table(cond.n)
    bus = MessageBus(cond.n)
    lines: list[str] = []
    lines.append(_dump({
        "type": "header",
        "condition": cond.code,
        "mode": cond.mode,
        "n": cond.n,
        "comms": cond.comms,
        "episode": episode_index,
        "seed": config.seed + episode_index,
        "max_timesteps": config.max_timesteps,
        "policy": config.policy_name,
    }))

    deadlock_timestep: Optional[int] = None
    while table.timestep < config.max_timesteps:
        t = table.timestep
        if cond.mode == SIMULTANEOUS:
            observations = []
            sent_ats = []
            for pid in range(cond.n):
                visible = bus.collect(pid, t, cond.mode) if cond.comms else {}
                observations.append(observe(
                    table, pid,
                    left_message=visible.get("left", (None, 0))[0],
                    right_message=visible.get("right", (None, 0))[0],
                ))
                sent_ats.append({s: e[1] for s, e in visible.items()})
            decisions = [policies[pid].decide(observations[pid], ctx) for pid in range(cond.n)]
            table, events = apply_simultaneous(table, decisions)
            if cond.comms:
                for pid, dec in enumerate(decisions):
                    if dec.message is not None:
                        bus.send(pid, dec.message, t)
            lines.append(_dump({
                "type": "step",
                "timestep": t,
                "acting": list(range(cond.n)),
                "observations": [_obs_record(o, s) for o, s in zip(observations, sent_ats)],
                "decisions": [_decision_record(d) for d in decisions],
                "events": _events_record(events),
                "post_state": _state_record(table),
            }))
        else:
            pid = t % cond.n
            visible = bus.collect(pid, t, cond.mode) if cond.comms else {}
            obs = observe(
                table, pid,
                left_message=visible.get("left", (None, 0))[0],
                right_message=visible.get("right", (None, 0))[0],
            )
            decision = policies[pid].decide(obs, ctx)
            table, events = apply_sequential(table, pid, decision)
            if cond.comms and decision.message is not None:
                bus.send(pid, decision.message, t)
            lines.append(_dump({
                "type": "step",
                "timestep": t,
                "acting": [pid],
                "observations": [_obs_record(obs, {s: e[1] for s, e in visible.items()})],
                "decisions": [_decision_record(decision)],
                "events": _events_record(events),
                "post_state": _state_record(table),
            }))

        if detect_deadlock(table):
            deadlock_timestep = table.timestep
            break

    result = EpisodeResult(
        deadlocked=deadlock_timestep is not None,
        deadlock_timestep=deadlock_timestep,
        meals_per_philosopher=table.meals,
        timesteps_used=table.timestep,
        transcript_path=str(transcript_path) if transcript_path else None,
    )
    lines.append(_dump({
        "type": "result",
        "deadlocked": result.deadlocked,
        "deadlock_timestep": result.deadlock_timestep,
        "meals_per_philosopher": list(result.meals_per_philosopher),
        "meals_total": result.meals_total,
        "timesteps_used": result.timesteps_used,
    }))
    if transcript_path is not None:
        transcript_path.parent.mkdir(parents=True, exist_ok=True)
        transcript_path.write_text("\n".join(lines) + "\n")
    return result


def run_condition(config: RunConfig, policies: Sequence[Policy]) -> ConditionReport:
    """Run every episode of a condition, persisting transcripts and a report."""
    if config.episodes < 1:
        raise ValueError("need at least one episode")
    cond = config.condition
    cond_dir = (config.out_dir / cond.code) if config.out_dir else None
    results: list[EpisodeResult] = []
    mac_pairs: list[tuple[Optional[str], Action]] = []
    for k in range(config.episodes):
        path = (cond_dir / f"ep{k}.jsonl") if cond_dir else None
        try:
            result = run_episode(config, k, policies, transcript_path=path)
        except RunError:
            raise
        except Exception as exc:
            raise RunError(f"episode {k} of {cond.code} failed: {exc}") from exc
        results.append(result)
        if cond.comms and path is not None:
            mac_pairs.extend(transcript_mac_pairs(path))
    report = metrics.aggregate_condition(
        results, cond.code, mac_pairs=mac_pairs if cond.comms else None
    )
    if cond_dir is not None:
        report_path = cond_dir / "report.json"
        report_path.write_text(json.dumps(report.__dict__, indent=2, sort_keys=True) + "\n")
    return report


def read_transcript(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def transcript_mac_pairs(path: Path) -> list[tuple[Optional[str], Action]]:
    """(message, executed action) pairs for message-action consistency."""
    pairs: list[tuple[Optional[str], Action]] = []
    for record in read_transcript(path):
        if record.get("type") != "step":
            continue
        for dec in record["decisions"]:
            pairs.append((dec["message"], Action(dec["action"])))
    return pairs


def verify_transcript(path: Path) -> tuple[bool, list[str]]:
    """Replay a transcript: recompute every post-state from the recorded
    decisions and compare. Also checks the message-delay rule for every
    consumed message. Returns (ok, problems)."""
    records = read_transcript(path)
    problems: list[str] = []
    if not records or records[0].get("type") != "header":
        return False, ["transcript missing header"]
    header = records[0]
    mode = header["mode"]
    table = new_table(header["n"])
    final_result: Optional[dict] = None

    for record in records[1:]:
        if record.get("type") == "result":
            final_result = record
            continue
        if record.get("type") != "step":
            problems.append(f"unknown record type {record.get('type')!r}")
            continue
        t = record["timestep"]
        if t != table.timestep:
            problems.append(f"step record at timestep {t}, replay is at {table.timestep}")
            break
        for obs in record["observations"]:
            for side in ("left", "right"):
                if obs[f"{side}_message"] is not None:
                    sent = obs[f"{side}_message_sent_at"]
                    if sent is None or sent >= t:
                        problems.append(
                            f"t={t}: consumed {side} message with bad emission time {sent}"
                        )
        decisions = [
            Decision(
                Action(d["action"]),
                message=d["message"],
                thinking=d["thinking"],
                parse_ok=d["parse_ok"],
            )
            for d in record["decisions"]
        ]
        if mode == SIMULTANEOUS:
            table, _ = apply_simultaneous(table, decisions)
        else:
            table, _ = apply_sequential(table, record["acting"][0], decisions[0])
        recorded = record["post_state"]
        if _state_record(table) != recorded:
            problems.append(f"t={t}: replayed state diverges from recorded post_state")
            break

    if final_result is None:
        problems.append("transcript missing result footer")
    else:
        if final_result["meals_per_philosopher"] != list(table.meals):
            problems.append("footer meal counts do not match replayed state")
        if final_result["timesteps_used"] != table.timestep:
            problems.append("footer timesteps_used does not match replayed state")
        deadlocked = detect_deadlock(table)
        if final_result["deadlocked"] != deadlocked and final_result["deadlocked"]:
            problems.append("footer reports deadlock but replayed final state is not deadlocked")
    return not problems, problems
