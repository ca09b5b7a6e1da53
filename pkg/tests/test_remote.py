"""Remote provider: wire serialization against recorded fixtures, no live network."""

import json

import httpx
import pytest

from stepchef.assets import data_path
from stepchef.errors import MalformedProviderReply, ProviderUnavailable
from stepchef.providers.base import Message, ProviderResponse, check_history
from stepchef.providers.remote import (
    RemoteChatProvider,
    build_request_body,
    parse_response_body,
)
from stepchef.skills import ToolInvocation, generate_schema, load_registry

WIRE = data_path("fixtures", "wire")


def recorded(name):
    return json.loads((WIRE / name).read_text(encoding="utf-8"))


def sample_history():
    return [
        Message(
            role="system",
            content="You are the low-level executor for a kitchen robot.\nMODE: EXECUTOR",
        ),
        Message(
            role="user",
            content=(
                "Scene:\nObjects in view:\n- empty cup at (0.05, 0.08)\n\n"
                "Completed steps:\n(none)\n\n"
                "Current step: get an empty cup and bring it to the working area"
            ),
        ),
        Message(
            role="assistant",
            invocation=ToolInvocation("grasp_cup", {"x": 0.05, "y": 0.08}),
            tool_call_id="call_1",
        ),
        Message(
            role="tool",
            content=json.dumps({"ok": True, "observation": "grasped cup (empty cup)"}),
            tool_call_id="call_1",
        ),
    ]


def drink_schemas():
    return generate_schema(load_registry(data_path("skills", "drink.json")), "drink")


def test_request_body_matches_recorded_fixture():
    body = build_request_body("gpt-4", sample_history(), drink_schemas())
    assert body == recorded("chat_request.json")


def test_tools_field_shape():
    body = build_request_body("gpt-4", sample_history(), drink_schemas())
    tool = body["tools"][0]
    assert tool["type"] == "function"
    assert set(tool["function"]) == {"name", "description", "parameters"}
    assert set(tool["function"]["parameters"]) == {"type", "properties", "required"}


def test_parse_recorded_tool_response():
    response = parse_response_body(recorded("chat_response_tool.json"))
    assert response.invocation == ToolInvocation("place_cup", {"location": "working_area"})
    assert response.text is None


def test_parse_recorded_text_response():
    response = parse_response_body(recorded("chat_response_text.json"))
    assert response.invocation is None
    assert response.text.startswith("1) get an empty cup")


def test_parse_malformed_replies():
    with pytest.raises(MalformedProviderReply):
        parse_response_body({"choices": []})
    with pytest.raises(MalformedProviderReply):
        parse_response_body({"choices": [{"message": {"content": None}}]})
    with pytest.raises(MalformedProviderReply):
        parse_response_body(
            {"choices": [{"message": {"tool_calls": [{"function": {"name": "x", "arguments": "{bad"}}]}}]}
        )


def test_provider_response_exactly_one_variant():
    with pytest.raises(ValueError):
        ProviderResponse()
    with pytest.raises(ValueError):
        ProviderResponse(text="hi", invocation=ToolInvocation("x", {}))


def test_check_history_tool_linkage():
    history = sample_history()
    check_history(history)
    broken = history[:2] + [Message(role="tool", content="{}", tool_call_id="call_9")]
    with pytest.raises(ValueError):
        check_history(broken)


def mock_provider(handler):
    transport = httpx.MockTransport(handler)
    return RemoteChatProvider(
        endpoint="https://llm.example/v1/chat/completions",
        model="gpt-4",
        client=httpx.Client(transport=transport),
    )


def test_complete_round_trip_via_mock_transport():
    def handler(request):
        assert json.loads(request.content) == build_request_body(
            "gpt-4", sample_history(), drink_schemas()
        )
        return httpx.Response(200, json=recorded("chat_response_tool.json"))

    provider = mock_provider(handler)
    response = provider.complete(sample_history(), drink_schemas())
    assert response.invocation.name == "place_cup"


def test_invalid_credentials_unavailable():
    provider = mock_provider(lambda request: httpx.Response(401, json={"error": "bad key"}))
    with pytest.raises(ProviderUnavailable):
        provider.complete(sample_history(), drink_schemas())


def test_network_error_unavailable():
    def handler(request):
        raise httpx.ConnectError("no route to host")

    provider = mock_provider(handler)
    with pytest.raises(ProviderUnavailable):
        provider.complete(sample_history(), drink_schemas())


def test_server_error_unavailable():
    provider = mock_provider(lambda request: httpx.Response(503, text="overloaded"))
    with pytest.raises(ProviderUnavailable):
        provider.complete(sample_history(), drink_schemas())
