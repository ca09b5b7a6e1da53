"""Command-line surface: interactive chat, benchmark suites, service, schema dump."""

from __future__ import annotations

import argparse
import json
import select
import sys
from pathlib import Path

from .assets import DOMAINS, load_domain_assets
from .config import load_service_config
from .errors import StepchefError
from .evalharness import SUITES, run_suite
from .orchestrator import SessionState, advance, create_session, submit_request
from .providers import RemoteChatProvider
from .skills import generate_schema, load_registry


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="stepchef", description="Interactive kitchen-task planner")
    sub = parser.add_subparsers(dest="command", required=True)

    chat = sub.add_parser("chat", help="interactive terminal session")
    chat.add_argument("--domain", choices=DOMAINS, default="drink")
    chat.add_argument("--provider", choices=("oracle", "remote"), default="oracle")
    chat.add_argument("--config", type=Path, help="service config (for remote provider settings)")
    chat.add_argument("--seed", type=int, default=0)

    ev = sub.add_parser("eval", help="run a benchmark suite and print the report")
    ev.add_argument("--suite", choices=SUITES, required=True)
    ev.add_argument("--provider", choices=("oracle", "remote"), default="oracle")
    ev.add_argument("--config", type=Path, help="service config (for remote provider settings)")
    ev.add_argument("--report", type=Path, help="also write the machine-readable report here")

    serve_cmd = sub.add_parser("serve", help="run the HTTP gateway")
    serve_cmd.add_argument("--config", type=Path, required=True)

    schema = sub.add_parser("schema", help="print the function-calling schemas for a domain")
    schema.add_argument("--domain", choices=DOMAINS, required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "chat":
            return _chat(args)
        if args.command == "eval":
            return _eval(args)
        if args.command == "serve":
            from .service import serve

            serve(load_service_config(args.config))
            return 0
        if args.command == "schema":
            registry = load_registry(load_domain_assets(args.domain).skills_path)
            schemas = [s.as_dict() for s in generate_schema(registry, args.domain)]
            print(json.dumps(schemas, indent=2))
            return 0
    except (StepchefError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _provider_factory(kind: str, config_path: Path | None):
    if kind == "oracle":
        return None
    if config_path is None:
        raise ValueError("remote provider needs --config with endpoint and model")
    config = load_service_config(config_path)
    if config.provider.kind != "remote":
        raise ValueError("config does not define a remote provider")

    def factory(assets):
        return RemoteChatProvider(
            endpoint=config.provider.endpoint,
            model=config.provider.model,
            api_key_env=config.provider.api_key_env,
        )

    return factory


def _eval(args) -> int:
    factory = _provider_factory(args.provider, args.config)
    result = run_suite(args.suite, provider_factory=factory)
    print(result.report.to_text())
    if args.report:
        args.report.write_text(
            json.dumps(result.report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"report written to {args.report}")
    if args.provider == "remote":
        # remote runs are informational: provider output is nondeterministic
        return 0
    return 0 if result.report.all_pass else 1


def _pending_interrupt_line() -> str | None:
    """Non-blocking read of one stdin line (POSIX only)."""
    if not sys.stdin.isatty():
        return None
    ready, _, _ = select.select([sys.stdin], [], [], 0)
    if ready:
        return sys.stdin.readline().strip()
    return None


def _chat(args) -> int:
    factory = _provider_factory(args.provider, args.config)
    assets = load_domain_assets(args.domain)
    provider = factory(assets) if factory else None
    session = create_session(args.domain, provider=provider, seed=args.seed, assets=assets)
    print(f"session {session.id} ({args.domain}); type a request, or 'quit'.")
    print("while the robot works, typing a line queues it as an interrupt.")
    try:
        request = input("you> ").strip()
    except EOFError:
        return 0
    if not request or request.lower() in ("quit", "exit"):
        return 0
    submit_request(session, request)
    _print_new_events(session, 0)
    shown = len(session.events)
    while session.state is SessionState.EXECUTING:
        line = _pending_interrupt_line()
        if line:
            submit_request(session, line)
        advance(session)
        _print_new_events(session, shown)
        shown = len(session.events)
    print(f"session ended: {session.state.value}")
    return 0 if session.state is not SessionState.FAILED else 1


def _print_new_events(session, start: int) -> None:
    for record in session.events[start:]:
        kind, payload = record.event_type, record.payload
        if kind == "plan" or kind == "replanned":
            print("plan:")
            for i, text in enumerate(payload["steps"], 1):
                print(f"  {i}) {text}")
        elif kind == "step_started":
            print(f"-> step {payload['index']}: {payload['text']}")
        elif kind == "invocation":
            print(f"   call {payload['name']}({json.dumps(payload['arguments'])})")
        elif kind == "outcome":
            mark = "ok" if payload["ok"] else "FAILED"
            print(f"   {mark}: {payload['observation']}")
        elif kind == "step_completed":
            print(f"   step {payload['index']} done")
        elif kind == "refused":
            print(f"robot> {payload['message']}")
        elif kind == "completed":
            print("robot> all done!")
        elif kind == "failed":
            print(f"robot> failed: {payload['reason']}")
        elif kind == "interrupt":
            print(f"(interrupt queued: {payload['text']!r})")


if __name__ == "__main__":
    raise SystemExit(main())
