"""Session state machine: intake, plan, execute step by step, interrupt, replan.

A session owns a world, a plan context with memorized completed steps, and an
interrupt queue.  Interrupts are honored only at step boundaries: advance()
first consumes any pending interrupt (latest wins) by replanning, otherwise it
executes the step under the cursor.  Terminal states absorb everything.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .assets import DomainAssets, load_domain_assets
from .errors import IllegalTransition, SessionTerminal
from .executor import (
    STATUS_COMPLETED,
    ExecutionTrace,
    StepExecution,
    execute_step,
    refresh_scene,
)
from .planner import Plan, PlanContext, PlanStep, Refusal, plan as plan_request, replan
from .providers import ChatProvider, OracleProvider
from .skills import SkillRegistry, ToolInvocation, generate_schema, load_registry, validate_and_dispatch
from .transcript import Clock, TranscriptRecord
from .vision import Calibration, load_calibration
from .world import WorldState, reset


class SessionState(str, Enum):
    IDLE = "idle"
    PLANNING = "planning"
    EXECUTING = "executing"
    REPLANNING = "replanning"
    COMPLETED = "completed"
    REFUSED = "refused"
    FAILED = "failed"


TERMINAL_STATES = (SessionState.COMPLETED, SessionState.REFUSED, SessionState.FAILED)

_LEGAL = {
    SessionState.IDLE: {SessionState.PLANNING},
    SessionState.PLANNING: {SessionState.EXECUTING, SessionState.REFUSED, SessionState.FAILED},
    SessionState.EXECUTING: {
        SessionState.EXECUTING,
        SessionState.REPLANNING,
        SessionState.COMPLETED,
        SessionState.FAILED,
    },
    SessionState.REPLANNING: {SessionState.EXECUTING, SessionState.REFUSED, SessionState.FAILED},
    SessionState.COMPLETED: set(),
    SessionState.REFUSED: set(),
    SessionState.FAILED: set(),
}


@dataclass
class InterruptRequest:
    text: str
    received_at: float


@dataclass
class Session:
    """One interactive task session: state machine plus everything it owns."""

    id: str
    domain: str
    assets: DomainAssets
    provider: ChatProvider
    registry: SkillRegistry
    schemas: list
    cal: Calibration
    queries: list[str]
    world: WorldState
    ctx: PlanContext
    state: SessionState = SessionState.IDLE
    plan: Plan | None = None
    cursor: int = 0
    trace: ExecutionTrace = field(default_factory=ExecutionTrace)
    interrupt_queue: list[InterruptRequest] = field(default_factory=list)
    events: list[TranscriptRecord] = field(default_factory=list)
    hooks: list[Callable[[TranscriptRecord], None]] = field(default_factory=list)
    clock: Clock = field(default_factory=Clock)
    refusal_message: str | None = None
    failure_reason: str | None = None

    def emit(self, event_type: str, payload: dict) -> None:
        record = TranscriptRecord(
            timestamp=self.clock.next_ms(),
            session_id=self.id,
            event_type=event_type,
            payload=payload,
        )
        self.events.append(record)
        for hook in self.hooks:
            hook(record)

    def transition(self, new_state: SessionState) -> None:
        if new_state is self.state:
            return
        if new_state not in _LEGAL[self.state]:
            raise IllegalTransition(f"{self.state.value} -> {new_state.value}")
        self.state = new_state

    def is_terminal(self) -> bool:
        return self.state in TERMINAL_STATES


def create_session(
    domain: str,
    provider: ChatProvider | None = None,
    seed: int = 0,
    session_id: str | None = None,
    assets: DomainAssets | None = None,
    world: WorldState | None = None,
    world_items: dict[str, int] | None = None,
) -> Session:
    """Build a ready-to-use session; defaults to the oracle provider."""
    assets = assets or load_domain_assets(domain)
    registry = load_registry(assets.skills_path)
    cal = load_calibration(assets.calibration_path)
    if world is None:
        world = reset(domain, seed, config=assets.world_config_path, items=world_items)
    return Session(
        id=session_id or uuid.uuid4().hex[:12],
        domain=domain,
        assets=assets,
        provider=provider or OracleProvider(assets.lexicon),
        registry=registry,
        schemas=generate_schema(registry, domain),
        cal=cal,
        queries=sorted(world.config.vocabulary),
        world=world,
        ctx=PlanContext(guidelines=assets.guidelines, system_prompt=assets.planner_prompt),
    )


def submit_request(session: Session, text: str) -> SessionState:
    """Fresh request on an idle session plans immediately; otherwise it queues
    as an interrupt honored at the next step boundary."""
    if session.is_terminal():
        raise SessionTerminal(f"session {session.id} is {session.state.value}")
    if session.state is not SessionState.IDLE:
        session.interrupt_queue.append(InterruptRequest(text=text, received_at=time.monotonic()))
        session.emit("interrupt", {"text": text})
        return session.state

    session.emit("request", {"text": text})
    session.transition(SessionState.PLANNING)
    try:
        result = plan_request(session.ctx, text, session.provider)
    except Exception as exc:  # provider/parse failures end the session
        session.failure_reason = str(exc)
        session.transition(SessionState.FAILED)
        session.emit("failed", {"reason": str(exc)})
        return session.state
    if isinstance(result, Refusal):
        session.refusal_message = result.message
        session.transition(SessionState.REFUSED)
        session.emit("refused", {"message": result.message, "missing": result.missing})
        return session.state
    session.plan = result
    session.cursor = 0
    session.transition(SessionState.EXECUTING)
    session.emit("plan", {"origin": result.origin, "steps": result.texts(), "request": text})
    return session.state


def advance(session: Session) -> SessionState:
    """One scheduler turn: consume a pending interrupt (replan), or execute the
    next step.  No-op on terminal sessions."""
    if session.is_terminal():
        return session.state
    if session.state is not SessionState.EXECUTING:
        raise IllegalTransition(f"cannot advance a session in state {session.state.value}")

    if session.interrupt_queue:
        return _consume_interrupt(session)

    step = session.plan.steps[session.cursor]
    scene = refresh_scene(session.world, session.cal, session.queries)
    session.emit("step_started", {"index": step.index, "text": step.text})
    execution = execute_step(
        step,
        session.world,
        scene,
        session.ctx.completed,
        session.provider,
        session.registry,
        session.schemas,
        session.assets.executor_prompt,
        on_event=lambda kind, payload: session.emit(kind, payload),
    )
    session.trace.append(execution)
    if execution.status != STATUS_COMPLETED:
        session.failure_reason = execution.failure_reason or f"step {step.index} {execution.status}"
        session.transition(SessionState.FAILED)
        session.emit("failed", {"reason": session.failure_reason, "step": step.text})
        return session.state
    session.ctx.completed.append(step)
    session.cursor += 1
    session.emit("step_completed", {"index": step.index, "text": step.text})
    if session.cursor >= len(session.plan.steps):
        session.transition(SessionState.COMPLETED)
        session.emit("completed", {})
    return session.state


def _consume_interrupt(session: Session) -> SessionState:
    pending = session.interrupt_queue
    session.interrupt_queue = []
    chosen = pending[-1]
    superseded = [p.text for p in pending[:-1]]
    session.transition(SessionState.REPLANNING)
    try:
        result = replan(session.ctx, chosen.text, session.provider)
    except Exception as exc:
        session.failure_reason = str(exc)
        session.transition(SessionState.FAILED)
        session.emit("failed", {"reason": str(exc)})
        return session.state
    if isinstance(result, Refusal):
        _discard_working_cup(session)
        session.refusal_message = result.message
        session.transition(SessionState.REFUSED)
        session.emit("refused", {"message": result.message, "missing": result.missing})
        return session.state
    session.plan = result
    session.cursor = 0
    session.transition(SessionState.EXECUTING)
    session.emit(
        "replanned",
        {"origin": result.origin, "steps": result.texts(), "request": chosen.text, "superseded": superseded},
    )
    return session.state


def _discard_working_cup(session: Session) -> None:
    """On a refused replan, dump the started drink so the workspace is clean."""
    if session.domain != "drink":
        return
    cup = session.world.find_cup_at("working_area")
    if cup is None or not session.world.cup_contents.get(cup.id):
        return
    step = PlanStep(index=0, text="discard the current cup")
    execution = StepExecution(step=step)
    for call in (
        ToolInvocation("grasp_cup", {"x": cup.pose[0], "y": cup.pose[1]}),
        ToolInvocation("place_cup", {"location": "discard"}),
    ):
        outcome = validate_and_dispatch(call, session.registry, session.world)
        execution.invocations.append((call, outcome))
        session.emit("invocation", {"name": call.name, "arguments": call.arguments})
        session.emit("outcome", {"ok": outcome.ok, "observation": outcome.observation})
    execution.status = STATUS_COMPLETED
    execution.turns_used = len(execution.invocations)
    session.trace.append(execution)


def run(session: Session) -> SessionState:
    """Advance until the session reaches a terminal state."""
    while session.state is SessionState.EXECUTING:
        advance(session)
    return session.state


def completed_steps(session: Session) -> list[PlanStep]:
    """All successfully executed steps so far, across every plan, in order."""
    return list(session.ctx.completed)


def session_view(session: Session) -> dict:
    """JSON-ready snapshot of the session for the service and for replay checks."""
    plan_view = None
    if session.plan is not None:
        steps = []
        for i, step in enumerate(session.plan.steps):
            if i < session.cursor:
                status = "done"
            elif i == session.cursor and session.state is SessionState.EXECUTING:
                status = "active"
            else:
                status = "pending"
            steps.append({"index": step.index, "text": step.text, "status": status})
        plan_view = {"origin": session.plan.origin, "steps": steps}
    return {
        "session_id": session.id,
        "domain": session.domain,
        "state": session.state.value,
        "plan": plan_view,
        "cursor": session.cursor,
        "completed": [s.text for s in session.ctx.completed],
        "pending_interrupts": len(session.interrupt_queue),
        "refusal_message": session.refusal_message,
        "failure_reason": session.failure_reason,
        "guidelines": session.assets.guidelines.raw_text,
    }
