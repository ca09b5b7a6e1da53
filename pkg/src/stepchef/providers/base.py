"""The chat-completion provider contract shared by the oracle and remote client."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..skills import FunctionSchema, ToolInvocation

ROLES = ("system", "user", "assistant", "tool")


@dataclass
class Message:
    """One turn of conversation context.

    Assistant messages may carry a tool invocation; tool messages carry the
    result of the invocation they reference via ``tool_call_id``.
    """

    role: str
    content: str = ""
    invocation: ToolInvocation | None = None
    tool_call_id: str | None = None


@dataclass
class ProviderResponse:
    """Either plain text or a single tool invocation, never both."""

    text: str | None = None
    invocation: ToolInvocation | None = None

    def __post_init__(self) -> None:
        if (self.text is None) == (self.invocation is None):
            raise ValueError("exactly one of text/invocation must be set")


def check_history(history: list[Message]) -> None:
    """Validate basic conversation-shape invariants."""
    if not history:
        raise ValueError("history must be non-empty")
    if history[0].role != "system":
        raise ValueError("first message must be the system prompt")
    invocation_ids = set()
    for msg in history:
        if msg.role not in ROLES:
            raise ValueError(f"unknown role {msg.role!r}")
        if msg.role == "assistant" and msg.invocation is not None:
            invocation_ids.add(msg.tool_call_id)
        if msg.role == "tool" and msg.tool_call_id not in invocation_ids:
            raise ValueError("tool message does not reference a prior assistant invocation")


@runtime_checkable
class ChatProvider(Protocol):
    """Anything that can answer a conversation with text or one tool call."""

    def complete(self, history: list[Message], tools: list[FunctionSchema]) -> ProviderResponse:
        ...
