"""Robot skill grounding: declared skills, function-calling schemas, dispatch.

Skills are declared in a data file per domain (name, documentation, typed
parameters).  From those declarations we generate the function schemas a
chat-completion provider consumes, validate incoming tool invocations, and
forward valid ones to the world simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArgumentValidation, DuplicateSkillName, UnknownSkill
from .world import SkillOutcome, WorldState, apply_skill

_KINDS = ("number", "string", "enum")


@dataclass
class ParamSpec:
    name: str
    kind: str  # number | string | enum
    doc: str
    required: bool = True
    values: list[str] = field(default_factory=list)  # enum only


@dataclass
class SkillSpec:
    """One robot skill: its name, documentation, and typed parameters."""

    name: str
    doc: str
    params: list[ParamSpec]
    domain: str


@dataclass
class FunctionSchema:
    """Provider-facing function schema generated from a SkillSpec."""

    name: str
    description: str
    parameters: dict

    def as_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "parameters": self.parameters}


@dataclass
class ToolInvocation:
    """A provider's request to call one skill with keyword arguments."""

    name: str
    arguments: dict


@dataclass
class SkillRegistry:
    domain: str
    specs: list[SkillSpec]

    def __post_init__(self) -> None:
        self.by_name = {}
        for spec in self.specs:
            if spec.name in self.by_name:
                raise DuplicateSkillName(f"duplicate skill {spec.name!r} in domain {self.domain!r}")
            self.by_name[spec.name] = spec


def load_registry(path: str | Path) -> SkillRegistry:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    domain = data["domain"]
    specs = []
    for entry in data["skills"]:
        params = [
            ParamSpec(
                name=p["name"],
                kind=p["kind"],
                doc=p.get("doc", ""),
                required=p.get("required", True),
                values=[str(v) for v in p.get("values", [])],
            )
            for p in entry.get("params", [])
        ]
        for p in params:
            if p.kind not in _KINDS:
                raise ValueError(f"{entry['name']}.{p.name}: unknown kind {p.kind!r}")
            if p.kind == "enum" and not p.values:
                raise ValueError(f"{entry['name']}.{p.name}: enum without values")
        specs.append(SkillSpec(name=entry["name"], doc=entry["doc"], params=params, domain=domain))
    return SkillRegistry(domain=domain, specs=specs)


def generate_schema(registry: list[SkillSpec] | SkillRegistry, domain: str) -> list[FunctionSchema]:
    """One function schema per skill in the domain, ordered by name.

    The skill documentation is carried verbatim into the schema description;
    generation is deterministic byte-for-byte.
    """
    specs = registry.specs if isinstance(registry, SkillRegistry) else registry
    seen: set[str] = set()
    schemas = []
    for spec in sorted((s for s in specs if s.domain == domain), key=lambda s: s.name):
        if spec.name in seen:
            raise DuplicateSkillName(f"duplicate skill {spec.name!r} in domain {domain!r}")
        seen.add(spec.name)
        properties = {}
        required = []
        for p in spec.params:
            prop: dict = {"description": p.doc}
            if p.kind == "number":
                prop["type"] = "number"
            elif p.kind == "enum":
                prop["type"] = "string"
                prop["enum"] = list(p.values)
            else:
                prop["type"] = "string"
            properties[p.name] = prop
            if p.required:
                required.append(p.name)
        schemas.append(
            FunctionSchema(
                name=spec.name,
                description=spec.doc,
                parameters={"type": "object", "properties": properties, "required": required},
            )
        )
    return schemas


def validate_invocation(call: ToolInvocation, registry: SkillRegistry) -> None:
    """Raise UnknownSkill/ArgumentValidation unless the call conforms to its schema."""
    spec = registry.by_name.get(call.name)
    if spec is None:
        raise UnknownSkill(f"unknown skill {call.name!r}")
    if not isinstance(call.arguments, dict):
        raise ArgumentValidation("arguments", "must be an object")
    params = {p.name: p for p in spec.params}
    for name in call.arguments:
        if name not in params:
            raise ArgumentValidation(name, "unexpected argument")
    for p in spec.params:
        if p.name not in call.arguments:
            if p.required:
                raise ArgumentValidation(p.name, "required")
            continue
        value = call.arguments[p.name]
        if p.kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ArgumentValidation(p.name, "must be a number")
        elif p.kind == "string":
            if not isinstance(value, str):
                raise ArgumentValidation(p.name, "must be a string")
        elif p.kind == "enum":
            if not isinstance(value, str) or value not in p.values:
                raise ArgumentValidation(p.name, f"must be one of {p.values}")


def validate_and_dispatch(
    call: ToolInvocation, registry: SkillRegistry, world: WorldState
) -> SkillOutcome:
    """Validate a tool invocation and forward it to the simulator.

    Validation errors are returned as failed outcomes (the observation is fed
    back to the provider) rather than raised; invalid calls never reach
    apply_skill.
    """
    try:
        validate_invocation(call, registry)
    except UnknownSkill as exc:
        return SkillOutcome(ok=False, observation=f"invalid call: {exc}")
    except ArgumentValidation as exc:
        return SkillOutcome(
            ok=False, observation=f"invalid call to {call.name}: argument {exc.param}: {exc.reason}"
        )
    _, outcome = apply_skill(world, call)
    return outcome
