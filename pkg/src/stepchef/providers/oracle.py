"""Deterministic rule-based provider: offline stand-in for the language model.

The oracle serves both provider roles.  In planner mode it reads the task
guidelines and request chain straight out of the prompt, applies the recipe
templates, and emits a numbered plan (or a refusal naming the unavailable
material).  In executor mode it maps one plan step to its skill invocations,
replaying the conversation so far to find the next call, and retrying or
recovering after failed calls.

Domain knowledge enters only through the prompt and the declared data files:
recipes and rack locations come from the guideline text, colloquial
ingredient names from the lexicon shipped next to it, and the rack numbering
from the documentation of the pull_out_rack skill.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..errors import UnmappableStep
from ..guidelines import Lexicon, TaskGuidelines, check_feasibility, parse_guidelines
from ..steps import canonicalize, normalize_step_text
from ..skills import FunctionSchema, ToolInvocation
from .base import Message, ProviderResponse, check_history

PLANNER_MARKER = "MODE: PLANNER"
EXECUTOR_MARKER = "MODE: EXECUTOR"

_ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth")
_RACK_WORDS = {1: "first", 2: "second", 3: "third"}
_RACK_NUMBERS = {w: n for n, w in _RACK_WORDS.items()}
_WORD_NUMBERS = {
    "a": 1, "an": 1, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}

CUP_STEP = "get an empty cup and bring it to the working area"
MILK_STEP = "pour the milk into the working cup"
PLACE_STEP = "put the working cup in the finished location"
DISCARD_STEP = "discard the current cup"


@dataclass
class OracleRequestParse:
    """What a drink request asks for, in canonical inventory names."""

    base: str = "milk"
    flavors: list[str] = field(default_factory=list)
    wants_boba: bool = False
    unknown_mentions: list[str] = field(default_factory=list)


@dataclass
class DishRequestParse:
    """What a dishwashing request asks for: items per class plus detergent."""

    items: dict[str, int] = field(default_factory=dict)
    flavor: str = "original detergent"
    unknown_mentions: list[str] = field(default_factory=list)


def _normalize_text(text: str) -> str:
    return " ".join(re.sub(r"[^a-z0-9]+", " ", text.lower()).split())


def _find_mentions(norm: str, lexicon: Lexicon) -> list[str]:
    """Canonical names mentioned in the text, in order of first mention."""
    found: dict[str, int] = {}
    for phrase, canonical in lexicon.mentions.items():
        m = re.search(rf"\b{re.escape(phrase)}\b", norm)
        if m and (canonical not in found or m.start() < found[canonical]):
            found[canonical] = m.start()
    return [name for name, _ in sorted(found.items(), key=lambda kv: kv[1])]


def _find_negated(norm: str, lexicon: Lexicon) -> set[str]:
    negated = set()
    for phrase, canonical in lexicon.mentions.items():
        if re.search(rf"\b(?:without|no)\s+(?:the\s+|any\s+)?{re.escape(phrase)}\b", norm):
            negated.add(canonical)
    return negated


def oracle_parse_request(request: str, g: TaskGuidelines, lexicon: Lexicon) -> OracleRequestParse:
    """Map a drink request to inventory names, preserving first-mention order.

    Tokens that look like ingredients (they appear in the lexicon) but are
    not in the inventory land in unknown_mentions; negated mentions
    ("without matcha", "no strawberry") are dropped.
    """
    norm = _normalize_text(request)
    negated = _find_negated(norm, lexicon)
    parse = OracleRequestParse()
    for name in _find_mentions(norm, lexicon):
        if name in negated or name == "milk":
            continue
        if name == "boba":
            parse.wants_boba = True
        elif g.has_material(name):
            parse.flavors.append(name)
        else:
            parse.unknown_mentions.append(name)
    return parse


def fold_drink_request(
    prev: OracleRequestParse, new_request: str, g: TaskGuidelines, lexicon: Lexicon
) -> OracleRequestParse:
    """Merge a mid-execution request into the previous drink target.

    "add X" extends the order, "replace X with Y" substitutes, anything else
    is a fresh order (with negations applied).
    """
    norm = _normalize_text(new_request)
    replace = re.search(r"\breplace (?:the )?(.+?) with (.+)$", norm)
    if replace:
        removed = set(_find_mentions(replace.group(1), lexicon))
        added = _find_mentions(replace.group(2), lexicon)
        merged = OracleRequestParse(
            flavors=[f for f in prev.flavors if f not in removed],
            wants_boba=prev.wants_boba and "boba" not in removed,
        )
        for name in added:
            if name == "milk":
                continue
            if name == "boba":
                merged.wants_boba = True
            elif g.has_material(name):
                if name not in merged.flavors:
                    merged.flavors.append(name)
            else:
                merged.unknown_mentions.append(name)
        return merged
    if re.search(r"\badd\b", norm):
        extra = oracle_parse_request(new_request, g, lexicon)
        return OracleRequestParse(
            flavors=prev.flavors + [f for f in extra.flavors if f not in prev.flavors],
            wants_boba=prev.wants_boba or extra.wants_boba,
            unknown_mentions=extra.unknown_mentions,
        )
    return oracle_parse_request(new_request, g, lexicon)


def parse_dish_request(request: str, g: TaskGuidelines, lexicon: Lexicon) -> DishRequestParse:
    """Extract utensil counts and the detergent flavor from a dishwashing request."""
    norm = _normalize_text(request)
    class_pattern = "|".join(sorted(map(re.escape, lexicon.item_classes), key=len, reverse=True))
    count_pattern = r"\d+|" + "|".join(_WORD_NUMBERS) + r"|all|another|the|some"
    parse = DishRequestParse(items={})
    for m in re.finditer(rf"(?:\b({count_pattern})\s+)?(?:dirty\s+|clean\s+)?\b({class_pattern})\b", norm):
        word, cls_word = m.group(1), m.group(2)
        cls = lexicon.item_classes[cls_word]
        if word is None or word in ("the", "some"):
            count = 1
        elif word == "all":
            trailing = re.search(r"\bthere are (\d+|" + "|".join(_WORD_NUMBERS) + r")\b", norm)
            count = _as_number(trailing.group(1)) if trailing else 1
        elif word == "another":
            count = 1
        else:
            count = _as_number(word)
        parse.items[cls] = parse.items.get(cls, 0) + count

    flavor_match = re.search(r"\b([a-z]+)\s+(?:flavor|flavour|detergent)\b", norm)
    if flavor_match:
        word = flavor_match.group(1)
        canonical = lexicon.mentions.get(word, f"{word} detergent")
        parse.flavor = canonical
        if not g.has_material(canonical):
            parse.unknown_mentions.append(canonical)
    else:
        parse.flavor = "original detergent"
    return parse


def _as_number(token: str) -> int:
    return int(token) if token.isdigit() else _WORD_NUMBERS[token]


def fold_dish_request(
    prev: DishRequestParse, new_request: str, g: TaskGuidelines, lexicon: Lexicon
) -> DishRequestParse:
    """Merge a mid-execution dishwashing request ("can you wash another?")."""
    norm = _normalize_text(new_request)
    fresh = parse_dish_request(new_request, g, lexicon)
    if re.search(r"\banother\b", norm):
        merged = DishRequestParse(items=dict(prev.items), flavor=prev.flavor)
        extra = fresh.items or ({list(prev.items)[-1]: 1} if prev.items else {})
        for cls, count in extra.items():
            merged.items[cls] = merged.items.get(cls, 0) + count
        merged.unknown_mentions = fresh.unknown_mentions
        return merged
    if re.search(r"\b(?:also|add)\b", norm) and fresh.items:
        merged = DishRequestParse(items=dict(prev.items), flavor=prev.flavor)
        for cls, count in fresh.items.items():
            merged.items[cls] = merged.items.get(cls, 0) + count
        merged.unknown_mentions = fresh.unknown_mentions
        return merged
    if not fresh.items:
        fresh.items = dict(prev.items)
    return fresh


@dataclass
class RackRule:
    """Which rack takes which utensil class."""

    explicit: dict[str, int] = field(default_factory=dict)
    small_rack: int | None = None
    big_rack: int | None = None

    def rack_for(self, cls: str, lexicon: Lexicon) -> int:
        if cls in self.explicit:
            return self.explicit[cls]
        size = lexicon.class_sizes.get(cls, "big")
        if size == "small" and self.small_rack:
            return self.small_rack
        return self.big_rack or 3


def _rack_rule_from_clauses(clauses: list[tuple[int, str]], lexicon: Lexicon) -> RackRule:
    rule = RackRule()
    for rack, desc in clauses:
        d = desc.lower()
        for phrase, cls in lexicon.item_classes.items():
            if re.search(rf"\b{re.escape(phrase)}\b", d):
                rule.explicit.setdefault(cls, rack)
        if "small" in d:
            rule.small_rack = rack
        if "big" in d or "large" in d:
            rule.big_rack = rack
    return rule


def rack_rule_from_guidelines(g: TaskGuidelines, lexicon: Lexicon) -> RackRule:
    clauses = []
    for name, desc in (g.locations or {}).items():
        first = name.split()[0] if name.split() else ""
        if first in _RACK_NUMBERS:
            clauses.append((_RACK_NUMBERS[first], desc))
    return _rack_rule_from_clauses(clauses, lexicon)


def rack_rule_from_tools(tools: list[FunctionSchema], lexicon: Lexicon) -> RackRule:
    """Recover the rack rule from the pull_out_rack parameter documentation."""
    doc = ""
    for schema in tools:
        if schema.name == "pull_out_rack":
            doc = schema.parameters.get("properties", {}).get("rack", {}).get("description", "")
    clauses = []
    for segment in re.split(r"[,.;]", doc.lower()):
        m = re.search(r"\b([123])\b", segment)
        if m:
            clauses.append((int(m.group(1)), segment))
    return _rack_rule_from_clauses(clauses, lexicon)


def _pluralize(cls: str, count: int) -> str:
    if count <= 1:
        return cls
    if cls.endswith("fe"):
        return cls[:-2] + "ves"
    return cls + "s"


def drink_plan_steps(parse: OracleRequestParse) -> list[str]:
    """The drink template: cup, boba, flavors in mention order, milk, place."""
    steps = [CUP_STEP]
    if parse.wants_boba:
        steps.append("add boba to the working cup")
    steps.extend(f"add {flavor} to the working cup" for flavor in parse.flavors)
    steps.append(MILK_STEP)
    steps.append(PLACE_STEP)
    return steps


def dish_plan_steps(parse: DishRequestParse, rule: RackRule, lexicon: Lexicon) -> list[str]:
    """The dishwashing template: 5 steps for the first item, 3 per further item,
    then the 6-step closing block; 3n+8 steps for n items."""
    instances = [
        (cls, i, count)
        for cls, count in parse.items.items()
        for i in range(1, count + 1)
    ]
    steps: list[str] = []
    for idx, (cls, i, count) in enumerate(instances):
        name = f"the dirty {cls}" if count == 1 else f"the {_ORDINALS[i - 1]} dirty {cls}"
        steps.append(f"grasp {name}")
        steps.append(f"remove large particle from the {cls}")
        if idx == 0:
            steps.append("open the dishwasher")
            steps.append("pull out the rack")
        steps.append(f"put the {cls} on the {_RACK_WORDS[rule.rack_for(cls, lexicon)]} rack")
    flavor_word = parse.flavor.replace(" detergent", "")
    steps.append(f"add {flavor_word} detergent into the detergent dispenser")
    steps.append("close the dishwasher")
    steps.append("select the cycle and start dishwasher")
    steps.append(
        "after the dishwasher cycle is complete and the dishwasher has stopped, "
        "wait a few minutes for the dishes to cool down"
    )
    wait_number = len(steps)
    names = [_pluralize(cls, count) for cls, count in parse.items.items()]
    if len(names) > 1:
        listed = ", ".join(names[:-1]) + " and " + names[-1]
    else:
        listed = names[0] if names else "items"
    verb = "is" if len(instances) == 1 else "are"
    steps.append(f"make sure the {listed} {verb} clean and dry, otherwise go into step {wait_number})")
    if len(instances) == 1:
        steps.append(f"return the clean {instances[0][0]} to the finished location")
    else:
        steps.append("return all clean utensils to the finished location")
    return steps


@dataclass
class _DrinkEffects:
    fetched: bool = False
    added: list[str] = field(default_factory=list)
    milk: bool = False
    placed: bool = False


def _drink_effects(completed: list[str]) -> _DrinkEffects:
    eff = _DrinkEffects()
    for text in completed:
        c = canonicalize(text)
        if c is None:
            continue
        verb = c[0]
        if verb == "get":
            eff.fetched = True
        elif verb == "add":
            eff.added.append(c[1])
        elif verb == "pour":
            eff.milk = True
        elif verb == "put":
            eff.placed = True
        elif verb == "discard":
            eff = _DrinkEffects()
    return eff


def drink_remaining_steps(parse: OracleRequestParse, completed: list[str]) -> list[str]:
    """Steps still needed given what already happened.

    When an already-added ingredient is absent from the new target (or the
    cup was already delivered), the only physically sound continuation is to
    discard the cup and start over.
    """
    eff = _drink_effects(completed)
    target = (["boba"] if parse.wants_boba else []) + parse.flavors
    contradiction = eff.placed or any(a not in target for a in eff.added)
    steps: list[str] = []
    if contradiction:
        steps.append(DISCARD_STEP)
        eff = _DrinkEffects()
    if not eff.fetched:
        steps.append(CUP_STEP)
    for name in target:
        if name not in eff.added:
            steps.append(f"add {name} to the working cup")
    if not eff.milk:
        steps.append(MILK_STEP)
    steps.append(PLACE_STEP)
    return steps


def dish_remaining_steps(
    parse: DishRequestParse, completed: list[str], rule: RackRule, lexicon: Lexicon
) -> list[str]:
    """Remaining dishwashing steps: the merged template minus the completed prefix."""
    merged = dish_plan_steps(parse, rule, lexicon)
    k = 0
    while k < len(completed) and k < len(merged) and _same_step(completed[k], merged[k]):
        k += 1
    return merged[k:]


def _same_step(a: str, b: str) -> bool:
    ca, cb = canonicalize(a), canonicalize(b)
    if ca is not None or cb is not None:
        return ca == cb
    return normalize_step_text(a) == normalize_step_text(b)


def _number_steps(steps: list[str]) -> str:
    return "\n".join(f"{i}) {s}" for i, s in enumerate(steps, 1))


# --- executor-side step mapping --------------------------------------------


def _entry_position(scene: list[tuple[str, float, float]], label: str) -> tuple[float, float]:
    for entry_label, x, y in scene:
        if entry_label == label:
            return (x, y)
    raise UnmappableStep(f"no {label} visible in the scene")


def _class_in(text: str, lexicon: Lexicon) -> str | None:
    for word in _normalize_text(text).split():
        if word in lexicon.item_classes:
            return lexicon.item_classes[word]
    return None


def _classes_in(text: str, lexicon: Lexicon) -> list[str]:
    classes = []
    for word in _normalize_text(text).split():
        cls = lexicon.item_classes.get(word)
        if cls and cls not in classes:
            classes.append(cls)
    return classes


def oracle_execute(
    step: str,
    scene: list[tuple[str, float, float]],
    tools: list[FunctionSchema],
    lexicon: Lexicon,
    completed: list[str] | None = None,
) -> list[ToolInvocation]:
    """The full invocation sequence realizing one plan step (ends with step_complete).

    Raises UnmappableStep for text outside the step grammar or when a needed
    object is not visible in the scene.
    """
    c = canonicalize(step)
    if c is None:
        raise UnmappableStep(f"cannot map step: {step!r}")
    verb, obj, dest = c
    done = ToolInvocation("step_complete", {})

    if verb == "get":
        x, y = _entry_position(scene, "empty cup")
        return [
            ToolInvocation("grasp_cup", {"x": x, "y": y}),
            ToolInvocation("place_cup", {"location": "working_area"}),
            done,
        ]
    if verb == "add" and dest == "working cup":
        return [ToolInvocation("scoop_to_location", {"ingredient": obj, "location": "working_area"}), done]
    if verb == "pour":
        return [ToolInvocation("pour", {"ingredient": "milk", "location": "working_area"}), done]
    if verb == "put" and obj == "working cup":
        x, y = _entry_position(scene, "working cup")
        return [
            ToolInvocation("grasp_cup", {"x": x, "y": y}),
            ToolInvocation("place_cup", {"location": "finished_location"}),
            done,
        ]
    if verb == "discard":
        x, y = _entry_position(scene, "working cup")
        return [
            ToolInvocation("grasp_cup", {"x": x, "y": y}),
            ToolInvocation("place_cup", {"location": "discard"}),
            done,
        ]
    if verb == "grasp":
        cls = _class_in(obj, lexicon)
        if cls is None:
            raise UnmappableStep(f"cannot tell what to grasp in {step!r}")
        return [ToolInvocation("grasp_item", {"label": f"dirty {cls}"}), done]
    if verb == "remove":
        return [ToolInvocation("remove_particles", {}), done]
    if verb == "open":
        return [ToolInvocation("open_dishwasher", {}), done]
    if verb == "pull":
        rule = rack_rule_from_tools(tools, lexicon)
        cls = None
        for text in reversed(completed or []):
            cc = canonicalize(text)
            if cc and cc[0] == "grasp":
                cls = _class_in(cc[1], lexicon)
                break
        rack = rule.rack_for(cls, lexicon) if cls else 3
        return [ToolInvocation("pull_out_rack", {"rack": str(rack)}), done]
    if verb == "put" and dest and dest.endswith("rack"):
        rack = _RACK_NUMBERS[dest.split()[0]]
        return [
            ToolInvocation("pull_out_rack", {"rack": str(rack)}),
            ToolInvocation("put_item_on_rack", {"rack": str(rack)}),
            done,
        ]
    if verb == "add" and dest == "detergent dispenser":
        flavor = obj.replace(" detergent", "").strip()
        return [ToolInvocation("add_detergent", {"flavor": flavor}), done]
    if verb == "close":
        return [ToolInvocation("close_dishwasher", {}), done]
    if verb == "start":
        return [ToolInvocation("start_cycle", {}), done]
    if verb == "wait":
        return [ToolInvocation("wait_for_completion", {}), done]
    if verb == "verify":
        calls = [ToolInvocation("inspect_item", {"label": cls}) for cls in _classes_in(obj, lexicon)]
        return (calls or [ToolInvocation("inspect_item", {"label": "item"})]) + [done]
    if verb == "return":
        return [ToolInvocation("return_items", {}), done]
    raise UnmappableStep(f"cannot map step: {step!r}")


# --- prompt parsing ---------------------------------------------------------

_PLAN_PROMPT_RE = re.compile(r"Task guidelines:\n(.*)\n\nUser request: (.*)\s*$", re.DOTALL)
_REPLAN_PROMPT_RE = re.compile(r"Completed steps:\n(.*)\n\nNew request: (.*)\s*$", re.DOTALL)
_EXEC_PROMPT_RE = re.compile(
    r"Scene:\n(.*)\n\nCompleted steps:\n(.*)\n\nCurrent step: (.*)\s*$", re.DOTALL
)
_COMPLETED_LINE_RE = re.compile(r"^\s*\d+\)\s*(.+?)\s*$")
_SCENE_ENTRY_RE = re.compile(r"^- (.+) at \((-?\d+\.\d+), (-?\d+\.\d+)\)$")


def _parse_completed_block(block: str) -> list[str]:
    steps = []
    for line in block.splitlines():
        m = _COMPLETED_LINE_RE.match(line)
        if m:
            steps.append(m.group(1))
    return steps


def _parse_scene_block(block: str) -> list[tuple[str, float, float]]:
    entries = []
    for line in block.splitlines():
        m = _SCENE_ENTRY_RE.match(line.strip())
        if m:
            entries.append((m.group(1), float(m.group(2)), float(m.group(3))))
    return entries


class OracleProvider:
    """Rule-based ChatProvider; dispatches on the mode marker in the system prompt."""

    def __init__(self, lexicon: Lexicon) -> None:
        self.lexicon = lexicon

    def complete(self, history: list[Message], tools: list[FunctionSchema]) -> ProviderResponse:
        check_history(history)
        system = history[0].content
        if PLANNER_MARKER in system:
            return self._plan(history)
        if EXECUTOR_MARKER in system:
            return self._execute(history, tools)
        raise ValueError("oracle needs a planner or executor mode marker in the system prompt")

    # planner mode

    def _plan(self, history: list[Message]) -> ProviderResponse:
        user_msgs = [m for m in history if m.role == "user"]
        first = _PLAN_PROMPT_RE.search(user_msgs[0].content)
        if first is None:
            raise ValueError("planner prompt lacks guidelines/request sections")
        guidelines = parse_guidelines(first.group(1))
        requests = [first.group(2).strip()]
        completed: list[str] = []
        for msg in user_msgs[1:]:
            m = _REPLAN_PROMPT_RE.search(msg.content)
            if m is None:
                continue
            completed = _parse_completed_block(m.group(1))
            requests.append(m.group(2).strip())

        if self.lexicon.item_classes:
            parse = parse_dish_request(requests[0], guidelines, self.lexicon)
            for text in requests[1:]:
                parse = fold_dish_request(parse, text, guidelines, self.lexicon)
            if parse.unknown_mentions:
                return ProviderResponse(
                    text=check_feasibility(guidelines, parse.unknown_mentions).message
                )
            rule = rack_rule_from_guidelines(guidelines, self.lexicon)
            steps = dish_remaining_steps(parse, completed, rule, self.lexicon)
        else:
            parse = oracle_parse_request(requests[0], guidelines, self.lexicon)
            for text in requests[1:]:
                parse = fold_drink_request(parse, text, guidelines, self.lexicon)
            if parse.unknown_mentions:
                return ProviderResponse(
                    text=check_feasibility(guidelines, parse.unknown_mentions).message
                )
            steps = drink_remaining_steps(parse, completed)
        return ProviderResponse(text=_number_steps(steps))

    # executor mode

    def _execute(self, history: list[Message], tools: list[FunctionSchema]) -> ProviderResponse:
        prompt = next(m for m in history if m.role == "user")
        m = _EXEC_PROMPT_RE.search(prompt.content)
        if m is None:
            raise ValueError("executor prompt lacks scene/completed/step sections")
        scene = _parse_scene_block(m.group(1))
        completed = _parse_completed_block(m.group(2))
        step = m.group(3).strip()
        try:
            sequence = oracle_execute(step, scene, tools, self.lexicon, completed)
        except UnmappableStep as exc:
            return ProviderResponse(text=f"cannot execute this step: {exc}")

        # Replay the conversation to find the next invocation: failed calls are
        # retried, and a put refused because its rack is in gets a recovery pull.
        pairs: list[tuple[ToolInvocation, bool, str]] = []
        pending: ToolInvocation | None = None
        for msg in history:
            if msg.role == "assistant" and msg.invocation is not None:
                pending = msg.invocation
            elif msg.role == "tool" and pending is not None:
                ok, observation = _parse_tool_result(msg.content)
                pairs.append((pending, ok, observation))
                pending = None

        cursor = 0
        last_ok, last_obs = True, ""
        for call, ok, observation in pairs:
            expected = sequence[cursor] if cursor < len(sequence) else None
            injected_pull = (
                expected is not None
                and call.name == "pull_out_rack"
                and expected.name == "put_item_on_rack"
            )
            if ok and not injected_pull:
                cursor += 1
            last_ok, last_obs = ok, observation
        if cursor >= len(sequence):
            return ProviderResponse(text="this step appears to be complete already")
        nxt = sequence[cursor]
        if not last_ok and nxt.name == "put_item_on_rack" and "not pulled out" in last_obs:
            return ProviderResponse(
                invocation=ToolInvocation("pull_out_rack", {"rack": nxt.arguments["rack"]})
            )
        return ProviderResponse(invocation=nxt)


def _parse_tool_result(content: str) -> tuple[bool, str]:
    try:
        data = json.loads(content)
        return bool(data.get("ok")), str(data.get("observation", ""))
    except (json.JSONDecodeError, AttributeError):
        return False, content
