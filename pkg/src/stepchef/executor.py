"""Low-level execution: the per-step function-calling loop.

For each plan step the executor prompts the provider with the current scene,
the memorized completed steps, and the step text, then loops: provider emits
one tool invocation, the invocation is validated and dispatched against the
simulator, and the outcome is fed back as a tool result.  The loop ends on
step_complete, on a plain-text reply (treated as failure), or at the turn
budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .planner import PlanStep, format_completed
from .providers.base import ChatProvider, Message
from .skills import FunctionSchema, SkillOutcome, SkillRegistry, ToolInvocation, validate_and_dispatch
from .vision import Calibration, SceneDescription, describe_scene, detect
from .world import WorldState

MAX_TURNS = 10

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"
STATUS_ABORTED = "aborted"

EventHook = Callable[[str, dict], None]


@dataclass
class StepExecution:
    """Record of one step's execution: invocations, outcomes, and how it ended."""

    step: PlanStep
    invocations: list[tuple[ToolInvocation, SkillOutcome]] = field(default_factory=list)
    status: str = STATUS_FAILED
    turns_used: int = 0
    failure_reason: str | None = None


@dataclass
class ExecutionTrace:
    """Append-only, per-session list of step executions."""

    steps: list[StepExecution] = field(default_factory=list)

    def append(self, execution: StepExecution) -> None:
        self.steps.append(execution)

    def all_invocations(self) -> list[tuple[ToolInvocation, SkillOutcome]]:
        return [pair for ex in self.steps for pair in ex.invocations]


def refresh_scene(world: WorldState, cal: Calibration, queries: list[str]) -> SceneDescription:
    """Detect everything queryable and render the scene text (run before each step)."""
    return describe_scene(detect(world, queries, cal), cal)


def _executor_messages(
    system_prompt: str, scene: SceneDescription, completed: list[PlanStep], step: PlanStep
) -> list[Message]:
    user = (
        f"Scene:\n{scene.rendered}\n\n"
        f"Completed steps:\n{format_completed(completed)}\n\n"
        f"Current step: {step.text}"
    )
    return [Message(role="system", content=system_prompt), Message(role="user", content=user)]


def execute_step(
    step: PlanStep,
    world: WorldState,
    scene: SceneDescription,
    completed: list[PlanStep],
    provider: ChatProvider,
    registry: SkillRegistry,
    schemas: list[FunctionSchema],
    system_prompt: str,
    max_turns: int = MAX_TURNS,
    on_event: EventHook | None = None,
) -> StepExecution:
    """Run the function-calling loop for one plan step.

    The world is mutated only through validate_and_dispatch.  Status is
    ``completed`` iff the final invocation is an ok step_complete; a plain
    text reply mid-step fails the step; hitting the turn budget aborts it.
    """
    execution = StepExecution(step=step)
    messages = _executor_messages(system_prompt, scene, completed, step)
    for turn in range(1, max_turns + 1):
        execution.turns_used = turn
        response = provider.complete(messages, tools=schemas)
        if response.text is not None:
            execution.status = STATUS_FAILED
            execution.failure_reason = response.text
            return execution
        call = response.invocation
        outcome = validate_and_dispatch(call, registry, world)
        execution.invocations.append((call, outcome))
        if on_event is not None:
            on_event("invocation", {"name": call.name, "arguments": call.arguments})
            on_event("outcome", {"ok": outcome.ok, "observation": outcome.observation})
        call_id = f"call_{turn}"
        messages.append(Message(role="assistant", invocation=call, tool_call_id=call_id))
        messages.append(
            Message(
                role="tool",
                content=json.dumps({"ok": outcome.ok, "observation": outcome.observation}),
                tool_call_id=call_id,
            )
        )
        if call.name == "step_complete" and outcome.ok:
            execution.status = STATUS_COMPLETED
            return execution
    execution.status = STATUS_ABORTED
    execution.failure_reason = f"turn limit ({max_turns}) exceeded"
    return execution
