"""Chat-model philosopher: prompt rendering, response parsing, HTTP client.

Any chat-completions-style JSON endpoint works; pick the vendor with the
base URL and model id. Responses must follow the THINKING / MESSAGE /
ACTION line format; anything unparseable falls back to WAIT so an episode
never dies on a malformed completion. The API key is read from an
environment variable at request time and never written to transcripts.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import httpx

from .env import Action, Decision, Observation
from .policies import PolicyContext

SYSTEM_PROMPT_TEMPLATE = """\
You are {philosopher_name}, one of {num_philosophers} philosophers seated at a circular dining table.

THE DINING PHILOSOPHERS PROBLEM:
- You and your fellow philosophers share forks placed between each pair of adjacent philosophers
- To eat, you must hold BOTH your left fork AND your right fork simultaneously
- Each fork can only be held by one philosopher at a time
- After eating, you automatically release both forks

YOUR GOAL:
- Coordinate with others to avoid DEADLOCK (where everyone holds one fork and waits forever)
- Maximize total meals eaten by the group
- Ensure fair distribution of meals among all philosophers

AVAILABLE ACTIONS:
- GRAB_LEFT: Pick up the fork on your left (if available)
- GRAB_RIGHT: Pick up the fork on your right (if available)
- RELEASE: Release any forks you are holding
- WAIT: Do nothing this turn
"""

RESPONSE_FORMAT_NO_COMMS = """\
RESPONSE FORMAT:
THINKING: [Brief reasoning about the current situation]
ACTION: [One of: GRAB_LEFT, GRAB_RIGHT, RELEASE, WAIT]"""

COMMUNICATION_SECTION = """\
COMMUNICATION:
- You can send a message to your neighbors each turn
- Use messages to coordinate and avoid conflicts
- Be concise and clear in your communication
"""

RESPONSE_FORMAT_COMMS = """\
RESPONSE FORMAT:
THINKING: [Brief reasoning about the current situation]
MESSAGE: [Short message to your neighbors, or "None"]
ACTION: [One of: GRAB_LEFT, GRAB_RIGHT, RELEASE, WAIT]"""

DECISION_PROMPT_TEMPLATE = """\
You are {philosopher_name}.

CURRENT STATE:
- Your state: {state}
- Meals eaten: {meals_eaten}
- Currently holding: {holding_status}

FORK STATUS:
- Left fork: {left_fork_status}
- Right fork: {right_fork_status}
"""

DECISION_TAIL_NO_COMMS = """\
What is your action?

THINKING: [Your reasoning]
ACTION: [GRAB_LEFT / GRAB_RIGHT / RELEASE / WAIT]"""

NEIGHBOR_MESSAGES_TEMPLATE = """\
NEIGHBOR MESSAGES:
- From left neighbor: {left_message}
- From right neighbor: {right_message}
"""

DECISION_TAIL_COMMS = """\
What is your action? You may also send a message to coordinate.

THINKING: [Your reasoning]
MESSAGE: [Short message to neighbors, or "None"]
ACTION: [GRAB_LEFT / GRAB_RIGHT / RELEASE / WAIT]"""


def philosopher_name(pid: int) -> str:
    return f"Philosopher {pid}"


def render_system_prompt(n: int, pid: int, comms: bool) -> str:
    body = SYSTEM_PROMPT_TEMPLATE.format(
        philosopher_name=philosopher_name(pid), num_philosophers=n
    )
    if comms:
        return body + "\n" + COMMUNICATION_SECTION + "\n" + RESPONSE_FORMAT_COMMS
    return body + "\n" + RESPONSE_FORMAT_NO_COMMS


def _holding_status(obs: Observation) -> str:
    held = []
    if obs.holds_left:
        held.append("left fork")
    if obs.holds_right:
        held.append("right fork")
    return " and ".join(held) if held else "nothing"


def _fork_status(available: bool, held_by_self: bool) -> str:
    if held_by_self:
        return "held by you"
    return "available" if available else "taken"


def render_decision_prompt(obs: Observation, comms: bool) -> str:
    body = DECISION_PROMPT_TEMPLATE.format(
        philosopher_name=philosopher_name(obs.self_id),
        state=obs.status.value,
        meals_eaten=obs.meals_eaten,
        holding_status=_holding_status(obs),
        left_fork_status=_fork_status(obs.left_fork_available, obs.holds_left),
        right_fork_status=_fork_status(obs.right_fork_available, obs.holds_right),
    )
    if not comms:
        return body + "\n" + DECISION_TAIL_NO_COMMS
    neighbor = NEIGHBOR_MESSAGES_TEMPLATE.format(
        left_message=obs.left_message or "None",
        right_message=obs.right_message or "None",
    )
    return body + "\n" + neighbor + "\n" + DECISION_TAIL_COMMS


_ACTION_LINE = re.compile(
    r"^\s*action\s*:\s*\[?\s*(GRAB_LEFT|GRAB_RIGHT|RELEASE|WAIT)\s*\]?\s*$",
    re.I,
)
_MESSAGE_LINE = re.compile(r"^\s*message\s*:\s*(.*)$", re.I)
_THINKING_LINE = re.compile(r"^\s*thinking\s*:\s*(.*)$", re.I)


def parse_response(text: str) -> Decision:
    """Parse a completion into a Decision; total, never raises.

    The last well-formed ACTION line wins. A missing or malformed action
    yields WAIT with parse_ok=False, the only safe default.
    """
    action: Optional[Action] = None
    message: Optional[str] = None
    thinking_parts: list[str] = []
    for line in text.splitlines():
        m = _ACTION_LINE.match(line)
        if m:
            action = Action(m.group(1).upper())
            continue
        m = _MESSAGE_LINE.match(line)
        if m:
            message = m.group(1).strip().strip("[]").strip()
            continue
        m = _THINKING_LINE.match(line)
        if m:
            thinking_parts.append(m.group(1))
    if action is None:
        return Decision(Action.WAIT, message=message, thinking=text, parse_ok=False)
    return Decision(action, message=message, thinking="\n".join(thinking_parts) or text)


@dataclass
class LlmEndpointConfig:
    base_url: str
    model_id: str
    temperature: float = 0.7
    api_key_env_var: str = "DINERBENCH_API_KEY"
    max_retries: int = 3
    timeout: float = 60.0
    max_tokens: Optional[int] = None  # None = the endpoint's default limit
    backoff_base: float = 0.5


@dataclass
class CallAccounting:
    """Raw API usage for a run; retries count as calls (they cost tokens/latency)."""

    calls: int = 0
    total_tokens: int = 0
    latency_ms: float = 0.0
    parse_failures: int = 0


class TransportFailure(RuntimeError):
    """All retries exhausted; the episode aborts, never recorded as deadlock."""


_RETRYABLE = {429, 500, 502, 503, 504}


class ChatClient:
    """Minimal chat-completions client with exponential backoff."""

    def __init__(
        self,
        config: LlmEndpointConfig,
        transport: Optional[httpx.BaseTransport] = None,
        clock: Callable[[], float] = time.perf_counter,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._clock = clock
        self._sleep = sleep
        self._client = httpx.Client(
            base_url=config.base_url, timeout=config.timeout, transport=transport
        )

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env_var, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def complete(
        self, system_prompt: str, user_prompt: str, accounting: CallAccounting
    ) -> str:
        payload: dict = {
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
        }
        if self.config.max_tokens is not None:
            payload["max_tokens"] = self.config.max_tokens

        last_error: Optional[str] = None
        for attempt in range(self.config.max_retries + 1):
            start = self._clock()
            try:
                resp = self._client.post(
                    "/chat/completions", json=payload, headers=self._headers()
                )
            except httpx.TransportError as exc:
                accounting.calls += 1
                accounting.latency_ms += (self._clock() - start) * 1000.0
                last_error = str(exc)
                self._sleep(self.config.backoff_base * 2**attempt)
                continue
            accounting.calls += 1
            accounting.latency_ms += (self._clock() - start) * 1000.0
            if resp.status_code in _RETRYABLE:
                last_error = f"HTTP {resp.status_code}"
                self._sleep(self.config.backoff_base * 2**attempt)
                continue
            if resp.status_code != 200:
                raise TransportFailure(f"chat endpoint returned HTTP {resp.status_code}")
            body = resp.json()
            usage = body.get("usage", {})
            accounting.total_tokens += int(usage.get("total_tokens", 0))
            return body["choices"][0]["message"]["content"]
        raise TransportFailure(
            f"chat endpoint failed after {self.config.max_retries + 1} attempts: {last_error}"
        )

    def close(self) -> None:
        self._client.close()


class LlmPolicy:
    """Policy adapter: one remote chat model playing one philosopher seat."""

    def __init__(self, client: ChatClient, accounting: Optional[CallAccounting] = None):
        self.client = client
        self.accounting = accounting if accounting is not None else CallAccounting()

    def decide(self, obs: Observation, ctx: PolicyContext) -> Decision:
        system = render_system_prompt(ctx.n, obs.self_id, ctx.comms)
        user = render_decision_prompt(obs, ctx.comms)
        text = self.client.complete(system, user, self.accounting)
        decision = parse_response(text)
        if not decision.parse_ok:
            self.accounting.parse_failures += 1
        return decision
