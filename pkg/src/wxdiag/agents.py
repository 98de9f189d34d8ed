"""Multi-agent conversation protocol: roles, messages, routing, execution.

The orchestra has seven specialist roles plus the user.  Who speaks next is
decided by a pure rule table over the transcript, so a conversation is
replayable byte for byte.  The executor role is special: it runs things and
must never open a conversation, never follow itself, and only ever speak
right after a tool call or code block.
"""

from __future__ import annotations

import json
import subprocess
import sys
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Sequence


class AgentError(RuntimeError):
    pass


class RouterError(AgentError):
    pass


class ReasonerError(AgentError):
    pass


class ScriptGapError(ReasonerError):
    """A scripted reasoner was asked for a slot its script does not cover."""


class AgentRole(Enum):
    USER = "user"
    DECOMPOSER = "decomposer"
    DATA_SPECIALIST = "data_specialist"
    CODE_EXECUTOR = "code_executor"
    PLOTTER = "plotter"
    IMAGE_CHECKER = "image_checker"
    DIAGNOSTICIAN = "diagnostician"
    REPORTER = "reporter"


class MessageKind(Enum):
    TEXT = "text"
    PLAN = "plan"
    CODE_BLOCK = "code_block"
    TOOL_CALL = "tool_call"
    EXECUTION_RESULT = "execution_result"
    FIGURE_REF = "figure_ref"
    DATA_REF = "data_ref"
    REPORT = "report"


class TaskKind(Enum):
    INDEX_CALC = "index_calc"
    FIGURE = "figure"
    DIAGNOSIS = "diagnosis"


@dataclass(frozen=True)
class Message:
    seq: int
    sender: AgentRole
    kind: MessageKind
    body: Mapping[str, Any] = field(default_factory=dict)

    def as_mapping(self) -> dict[str, Any]:
        return {"seq": self.seq, "sender": self.sender.value,
                "kind": self.kind.value, "body": dict(self.body)}

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "Message":
        return cls(seq=int(doc["seq"]), sender=AgentRole(doc["sender"]),
                   kind=MessageKind(doc["kind"]), body=dict(doc.get("body", {})))


def messages_to_jsonl(messages: Sequence[Message]) -> str:
    lines = [json.dumps(m.as_mapping(), separators=(",", ":"), sort_keys=False)
             for m in messages]
    return "\n".join(lines) + ("\n" if lines else "")


def messages_from_jsonl(text: str) -> list[Message]:
    messages = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            messages.append(Message.from_mapping(json.loads(line)))
        except (ValueError, KeyError) as exc:
            raise AgentError(f"bad transcript line {lineno}: {exc}")
    for prev, cur in zip(messages, messages[1:]):
        if cur.seq <= prev.seq:
            raise AgentError(f"transcript seq not increasing at {cur.seq}")
    return messages


# ---------------------------------------------------------------------------
# task classification

_FIGURE_WORDS = ("plot", "draw", "chart", "map", "figure", "render", "visuali")
_INDEX_WORDS = ("compute", "calculate", "how much", "how strong", "what is",
                "value of", "index", "intensity")


def classify_scenario(task_text: str) -> TaskKind:
    """Figure wording wins over compute wording; everything else is a
    full event diagnosis."""
    lowered = task_text.lower()
    if any(w in lowered for w in _FIGURE_WORDS):
        return TaskKind.FIGURE
    if any(w in lowered for w in _INDEX_WORDS):
        return TaskKind.INDEX_CALC
    return TaskKind.DIAGNOSIS


# ---------------------------------------------------------------------------
# routing

_EXECUTABLE = (MessageKind.TOOL_CALL, MessageKind.CODE_BLOCK)


def has_prior_success(messages: Sequence[Message]) -> bool:
    return any(m.kind is MessageKind.EXECUTION_RESULT
               and m.body.get("status") == "ok" for m in messages)


def _latest_task_kind(messages: Sequence[Message]) -> TaskKind:
    for m in reversed(messages):
        if m.kind is MessageKind.PLAN:
            try:
                return TaskKind(m.body.get("task_kind"))
            except ValueError:
                break
    return TaskKind.DIAGNOSIS


def _origin_of_last_execution(messages: Sequence[Message]) -> AgentRole | None:
    # the request an executor answered sits immediately before the result
    for m in reversed(messages[:-1]):
        if m.sender is not AgentRole.CODE_EXECUTOR:
            return m.sender
    return None


def route_next(messages: Sequence[Message]) -> AgentRole | None:
    """Next speaker for the transcript; None ends the conversation.

    Hard guarantees, enforced no matter how mangled the transcript is:
    the executor speaks only immediately after a tool call or code block
    from someone else, and the conversation ends only on a final report
    preceded by at least one successful execution.
    """
    if not messages:
        raise RouterError("cannot route an empty transcript")
    last = messages[-1]
    body = last.body

    if last.kind is MessageKind.REPORT:
        if body.get("final", True) and has_prior_success(messages[:-1]):
            return None
        return AgentRole.DECOMPOSER

    if last.kind in _EXECUTABLE and last.sender is not AgentRole.CODE_EXECUTOR:
        return AgentRole.CODE_EXECUTOR

    if last.kind is MessageKind.EXECUTION_RESULT:
        if body.get("status") != "ok":
            return _origin_of_last_execution(messages) or AgentRole.DECOMPOSER
        phase = body.get("phase")
        if phase == "fetch":
            return AgentRole.DATA_SPECIALIST
        if phase == "plot":
            return AgentRole.IMAGE_CHECKER
        if phase == "calc":
            return AgentRole.DIAGNOSTICIAN
        return AgentRole.DECOMPOSER

    if body.get("handoff_to_plotter"):
        return AgentRole.PLOTTER

    if last.kind is MessageKind.FIGURE_REF:
        return AgentRole.IMAGE_CHECKER

    if last.kind is MessageKind.PLAN:
        return AgentRole.DATA_SPECIALIST

    if last.kind is MessageKind.DATA_REF:
        if _latest_task_kind(messages) is TaskKind.FIGURE:
            return AgentRole.PLOTTER
        return AgentRole.DIAGNOSTICIAN

    if last.kind is MessageKind.TEXT:
        if last.sender is AgentRole.USER:
            return AgentRole.DECOMPOSER
        phase = body.get("phase")
        if last.sender is AgentRole.DIAGNOSTICIAN:
            if phase == "hypothesis":
                return AgentRole.DATA_SPECIALIST
            if phase == "answer":
                return AgentRole.REPORTER
            if phase == "verdict":
                if body.get("exhausted") or body.get("verdict") == "Supported":
                    return AgentRole.REPORTER
                return AgentRole.DIAGNOSTICIAN
        if last.sender is AgentRole.IMAGE_CHECKER and phase == "figure_review":
            if body.get("verdict") == "pass":
                if _latest_task_kind(messages) is TaskKind.FIGURE:
                    return AgentRole.REPORTER
                return AgentRole.DIAGNOSTICIAN
            return AgentRole.PLOTTER

    return AgentRole.DECOMPOSER


# ---------------------------------------------------------------------------
# reasoner seam

class ScriptedReasoner:
    """Deterministic reasoner: every completion slot must be pre-scripted."""

    def __init__(self, script: Mapping[str, str] | str):
        if isinstance(script, str):
            with open(script, "r", encoding="utf-8") as fh:
                script = json.load(fh)
        if not isinstance(script, Mapping):
            raise ReasonerError("a script must be a mapping of slot -> text")
        self._script = dict(script)

    def complete(self, slot: str, prompt: str) -> str:
        try:
            return self._script[slot]
        except KeyError:
            raise ScriptGapError(f"script has no entry for slot {slot!r} "
                                 f"(knows {sorted(self._script)})")


class RemoteReasoner:
    """HTTP-backed reasoner: POST {slot, prompt}, read back {text}."""

    def __init__(self, url: str, *, timeout: float = 30.0, max_attempts: int = 3,
                 backoff: float = 0.25):
        self.url = url
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff

    def complete(self, slot: str, prompt: str) -> str:
        import requests
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(self.url, json={"slot": slot, "prompt": prompt},
                                     timeout=self.timeout)
                if resp.status_code >= 500:
                    last_error = ReasonerError(f"server error {resp.status_code}")
                    continue
                resp.raise_for_status()
                text = resp.json().get("text")
                if not isinstance(text, str):
                    raise ReasonerError("reasoner response lacks a text field")
                return text
            except ReasonerError:
                raise
            except Exception as exc:        # connection errors, bad JSON, 4xx
                last_error = exc
        raise ReasonerError(f"reasoner at {self.url} failed after "
                            f"{self.max_attempts} attempts: {last_error}")


def make_reasoner(spec: str):
    """Build a reasoner from a CLI-style spec: scripted:<path> or remote:<url>."""
    scheme, _, rest = spec.partition(":")
    if scheme == "scripted" and rest:
        return ScriptedReasoner(rest)
    if scheme == "remote" and rest:
        return RemoteReasoner(rest)
    raise ReasonerError(f"bad reasoner spec {spec!r}; "
                        "use scripted:<path> or remote:<url>")


# ---------------------------------------------------------------------------
# tool execution

class ToolExecutor:
    """Registry of named operations the executor role can run in-process."""

    def __init__(self):
        self._ops: dict[str, Callable[..., Any]] = {}

    def register(self, op: str, fn: Callable[..., Any]) -> None:
        if op in self._ops:
            raise AgentError(f"op {op!r} already registered")
        self._ops[op] = fn

    def ops(self) -> list[str]:
        return sorted(self._ops)

    def execute(self, request: Mapping[str, Any]) -> dict[str, Any]:
        """Run one tool-call body; failures come back as error results."""
        phase = request.get("phase", "calc")
        result: dict[str, Any] = {"phase": phase}
        for marker in ("final_calc", "step_id"):
            if marker in request:
                result[marker] = request[marker]
        op = request.get("op")
        fn = self._ops.get(op)
        if fn is None:
            result.update(status="error", error=f"unknown op {op!r}")
            return result
        try:
            payload = fn(**request.get("args", {}))
        except Exception as exc:
            result.update(status="error", error=f"{type(exc).__name__}: {exc}")
            return result
        result["status"] = "ok"
        if isinstance(payload, Mapping):
            result.update(payload)
        else:
            result["value"] = payload
        return result


def run_python_snippet(code: str, timeout: float = 30.0) -> dict[str, Any]:
    """Run a short python snippet in a subprocess; used for untrusted code
    paths where in-process dispatch is not appropriate."""
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True,
                          text=True, timeout=timeout)
    return {"status": "ok" if proc.returncode == 0 else "error",
            "returncode": proc.returncode,
            "stdout": proc.stdout, "stderr": proc.stderr}


# ---------------------------------------------------------------------------
# conversation engine

Handler = Callable[["ConversationEngine"], tuple[MessageKind, dict]]


class ConversationEngine:
    """Drives a transcript: the router picks the speaker, handlers speak."""

    def __init__(self, handlers: Mapping[AgentRole, Handler], *, max_turns: int = 200):
        self.handlers = dict(handlers)
        self.max_turns = max_turns
        self.messages: list[Message] = []

    def post(self, sender: AgentRole, kind: MessageKind,
             body: Mapping[str, Any]) -> Message:
        message = Message(seq=len(self.messages), sender=sender, kind=kind,
                          body=dict(body))
        self.messages.append(message)
        return message

    def seed(self, task_text: str) -> Message:
        if self.messages:
            raise AgentError("conversation already seeded")
        return self.post(AgentRole.USER, MessageKind.TEXT, {"text": task_text})

    def step(self) -> AgentRole | None:
        role = route_next(self.messages)
        if role is None:
            return None
        handler = self.handlers.get(role)
        if handler is None:
            raise AgentError(f"no handler for role {role.value!r}")
        kind, body = handler(self)
        self.post(role, kind, body)
        return role

    def run(self) -> list[Message]:
        for _ in range(self.max_turns):
            if self.step() is None:
                return self.messages
        raise AgentError(f"conversation did not finish in {self.max_turns} turns")
