"""High-level planning: prompt assembly, plan-text parsing, plan/replan calls.

The planner assembles provider prompts from task guidelines, the user
request, the running conversation, and the memorized completed steps; it
parses provider output into a Plan of canonicalized steps, or a Refusal when
the provider declines for missing materials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import UnparseablePlan
from .guidelines import TaskGuidelines, normalize_name
from .providers.base import ChatProvider, Message, ProviderResponse
from .steps import Canonical, canonicalize, normalize_step_text


@dataclass
class PlanStep:
    index: int
    text: str
    canonical: Canonical | None = None

    def __post_init__(self) -> None:
        if self.canonical is None:
            self.canonical = canonicalize(self.text)

    def match_key(self) -> tuple:
        """Comparison key: the canonical triple, or normalized text when unparsed."""
        if self.canonical is not None:
            return self.canonical
        return ("unparsed", normalize_step_text(self.text))


@dataclass
class Plan:
    steps: list[PlanStep]
    origin: str  # "initial" | "replan"
    source_request: str

    def texts(self) -> list[str]:
        return [s.text for s in self.steps]


@dataclass
class Refusal:
    """Provider declined: the request needs materials that are unavailable."""

    message: str
    missing: list[str]


@dataclass
class PlanContext:
    """Per-session planning state: guidelines, conversation, memorized steps."""

    guidelines: TaskGuidelines
    system_prompt: str
    history: list[Message] = field(default_factory=list)
    completed: list[PlanStep] = field(default_factory=list)


def format_completed(completed: list[PlanStep]) -> str:
    if not completed:
        return "(none)"
    return "\n".join(f"{i}) {s.text}" for i, s in enumerate(completed, 1))


def build_planner_prompt(ctx: PlanContext, request: str, mode: str = "plan") -> list[Message]:
    """Messages for a plan or replan provider call.

    Plan mode starts a fresh conversation: system prompt plus one user
    message with the guideline text and the request.  Replan mode appends the
    memorized completed steps and the new request to the existing history.
    """
    if mode == "plan":
        user = f"Task guidelines:\n{ctx.guidelines.raw_text}\n\nUser request: {request}"
        return [Message(role="system", content=ctx.system_prompt), Message(role="user", content=user)]
    if mode == "replan":
        if not ctx.history:
            raise ValueError("replan requires prior planning history")
        user = f"Completed steps:\n{format_completed(ctx.completed)}\n\nNew request: {request}"
        return list(ctx.history) + [Message(role="user", content=user)]
    raise ValueError(f"unknown mode {mode!r}")


_STEP_LINE_RE = re.compile(r"^\s*(?:step\s*)?(\d+)\s*[).:]\s*(.+?)\s*$", re.IGNORECASE)
_REFUSAL_RE = re.compile(r"([A-Za-z][A-Za-z ]*?) is not available", re.IGNORECASE)


def parse_plan_text(text: str, origin: str = "initial", source_request: str = "") -> Plan | Refusal:
    """Extract numbered steps from provider output, renumbering from 1.

    Wrapped lines are folded into the preceding step.  Output without steps
    but with refusal phrasing becomes a Refusal; anything else raises
    UnparseablePlan.
    """
    raw_steps: list[str] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _STEP_LINE_RE.match(line)
        if m:
            raw_steps.append(m.group(2))
        elif raw_steps:
            raw_steps[-1] = raw_steps[-1] + " " + line.strip()
    if raw_steps:
        steps = [PlanStep(index=i, text=t) for i, t in enumerate(raw_steps, 1)]
        return Plan(steps=steps, origin=origin, source_request=source_request)
    missing = [normalize_name(m) for m in _REFUSAL_RE.findall(text)]
    if missing:
        return Refusal(message=text.strip(), missing=missing)
    raise UnparseablePlan(f"no steps or refusal in provider output: {text!r}")


def plan(ctx: PlanContext, request: str, provider: ChatProvider) -> Plan | Refusal:
    """Fresh plan for a request; appends the exchange to ctx.history."""
    messages = build_planner_prompt(ctx, request, "plan")
    response = provider.complete(messages, tools=[])
    result = _into_plan(response, origin="initial", source_request=request)
    ctx.history[:] = messages + [_assistant_message(response)]
    return result


def replan(ctx: PlanContext, new_request: str, provider: ChatProvider) -> Plan | Refusal:
    """Plan the remaining steps after an interrupt; extends ctx.history.

    The returned plan contains only not-yet-executed steps; when applied
    effects contradict the new request it begins with discard-and-restart
    steps (see the oracle).  ctx.completed is left untouched.
    """
    messages = build_planner_prompt(ctx, new_request, "replan")
    response = provider.complete(messages, tools=[])
    result = _into_plan(response, origin="replan", source_request=new_request)
    ctx.history[:] = messages + [_assistant_message(response)]
    return result


def _assistant_message(response: ProviderResponse) -> Message:
    if response.text is not None:
        return Message(role="assistant", content=response.text)
    return Message(role="assistant", invocation=response.invocation, tool_call_id="call_plan")


def _into_plan(response: ProviderResponse, origin: str, source_request: str) -> Plan | Refusal:
    if response.text is None:
        raise UnparseablePlan("provider returned a tool invocation instead of a plan")
    return parse_plan_text(response.text, origin=origin, source_request=source_request)
