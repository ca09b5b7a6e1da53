"""Interactive task planning and execution for a simulated kitchen robot.

A chat-completion provider turns natural-language requests into step plans,
executes each step through a function-calling loop against a grounded skill
API on a simulated kitchen, and replans mid-run on user interrupts.  A
deterministic oracle provider makes the whole system testable offline.
"""

from .errors import StepchefError
from .guidelines import TaskGuidelines, check_feasibility, parse_guidelines
from .orchestrator import (
    Session,
    SessionState,
    advance,
    completed_steps,
    create_session,
    run,
    session_view,
    submit_request,
)
from .planner import Plan, PlanStep, Refusal
from .providers import Message, OracleProvider, ProviderResponse, RemoteChatProvider
from .skills import FunctionSchema, SkillSpec, ToolInvocation, generate_schema, load_registry
from .world import SkillOutcome, WorldState, apply_skill, reset, snapshot

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "StepchefError",
    "TaskGuidelines",
    "parse_guidelines",
    "check_feasibility",
    "Session",
    "SessionState",
    "create_session",
    "submit_request",
    "advance",
    "run",
    "completed_steps",
    "session_view",
    "Plan",
    "PlanStep",
    "Refusal",
    "Message",
    "ProviderResponse",
    "OracleProvider",
    "RemoteChatProvider",
    "SkillSpec",
    "FunctionSchema",
    "ToolInvocation",
    "generate_schema",
    "load_registry",
    "WorldState",
    "SkillOutcome",
    "reset",
    "snapshot",
    "apply_skill",
]
