"""Remote provider speaking the OpenAI-compatible chat-completions wire protocol."""

from __future__ import annotations

import json
import os

import httpx

from ..errors import MalformedProviderReply, ProviderUnavailable
from ..skills import FunctionSchema, ToolInvocation
from .base import Message, ProviderResponse, check_history

DEFAULT_TIMEOUT_S = 60.0


def serialize_messages(history: list[Message]) -> list[dict]:
    """Messages in chat-completions wire form (tool_calls / tool_call_id linkage)."""
    wire = []
    for msg in history:
        if msg.role == "assistant" and msg.invocation is not None:
            wire.append(
                {
                    "role": "assistant",
                    "content": msg.content or None,
                    "tool_calls": [
                        {
                            "id": msg.tool_call_id or "call_0",
                            "type": "function",
                            "function": {
                                "name": msg.invocation.name,
                                "arguments": json.dumps(msg.invocation.arguments),
                            },
                        }
                    ],
                }
            )
        elif msg.role == "tool":
            wire.append({"role": "tool", "tool_call_id": msg.tool_call_id, "content": msg.content})
        else:
            wire.append({"role": msg.role, "content": msg.content})
    return wire


def serialize_tools(tools: list[FunctionSchema]) -> list[dict]:
    return [{"type": "function", "function": schema.as_dict()} for schema in tools]


def build_request_body(model: str, history: list[Message], tools: list[FunctionSchema]) -> dict:
    body: dict = {"model": model, "messages": serialize_messages(history)}
    if tools:
        body["tools"] = serialize_tools(tools)
    return body


def parse_response_body(body: dict) -> ProviderResponse:
    """First choice of a chat-completions response, as text or one invocation."""
    try:
        message = body["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedProviderReply(f"no choices[0].message in reply: {exc}") from exc
    tool_calls = message.get("tool_calls") or []
    if tool_calls:
        function = tool_calls[0].get("function", {})
        name = function.get("name")
        if not name:
            raise MalformedProviderReply("tool call without a function name")
        raw_args = function.get("arguments", "{}")
        try:
            arguments = json.loads(raw_args) if isinstance(raw_args, str) else dict(raw_args)
        except (json.JSONDecodeError, TypeError) as exc:
            raise MalformedProviderReply(f"unparseable tool arguments: {raw_args!r}") from exc
        return ProviderResponse(invocation=ToolInvocation(name=name, arguments=arguments))
    content = message.get("content")
    if not isinstance(content, str) or not content:
        raise MalformedProviderReply("reply has neither tool calls nor text content")
    return ProviderResponse(text=content)


class RemoteChatProvider:
    """HTTP client for a chat-completions endpoint.

    Credentials come from the environment variable named by ``api_key_env``;
    they never appear in config files or transcripts.  A custom
    ``httpx.Client`` (e.g. with a mock transport) can be injected for tests.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "STEPCHEF_API_KEY",
        timeout_s: float = DEFAULT_TIMEOUT_S,
        client: httpx.Client | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self._client = client

    def complete(self, history: list[Message], tools: list[FunctionSchema]) -> ProviderResponse:
        check_history(history)
        body = build_request_body(self.model, history, tools)
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        client = self._client or httpx.Client(timeout=self.timeout_s)
        try:
            response = client.post(self.endpoint, json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"request to {self.endpoint} failed: {exc}") from exc
        finally:
            if client is not self._client:
                client.close()
        if response.status_code in (401, 403):
            raise ProviderUnavailable(f"authentication rejected ({response.status_code})")
        if response.status_code >= 500:
            raise ProviderUnavailable(f"provider error ({response.status_code})")
        if response.status_code != 200:
            raise MalformedProviderReply(f"unexpected status {response.status_code}: {response.text[:200]}")
        try:
            payload = response.json()
        except json.JSONDecodeError as exc:
            raise MalformedProviderReply("response body is not JSON") from exc
        return parse_response_body(payload)
