"""Parse, render, and query the natural-text task guideline documents.

A guideline document is line oriented: an ``Options:`` section naming the
known recipes, an ``Instructions:`` section with one block per recipe
(``Material:`` line, optional ``Steps:`` header, numbered ``N)`` steps), an
optional ``Available location we have now:`` section, and an
``Available material we have now:`` inventory section.  Long steps may wrap:
any line that is neither a header, a recipe name, nor a numbered step is
appended to the previous step.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedGuidelines

OPTIONS_HEADER = "Options:"
INSTRUCTIONS_HEADER = "Instructions:"
STEPS_HEADER = "Steps:"
MATERIAL_PREFIX = "Material:"
MATERIALS_HEADER = "Available material we have now:"
LOCATIONS_HEADER = "Available location we have now:"

_STEP_RE = re.compile(r"^(\d+)\)\s*(.*)$")


def normalize_name(name: str) -> str:
    """Lowercase and collapse whitespace, for case/space-insensitive matching."""
    return " ".join(name.strip().lower().split())


@dataclass
class Recipe:
    """One named recipe: its materials and ordered steps (0-indexed as printed)."""

    name: str
    materials: list[str]
    steps: list[str]


@dataclass
class TaskGuidelines:
    """Structured form of a guideline document.

    ``inventory`` holds normalized material names; ``locations`` is present
    only for documents that declare an available-location section.
    """

    options: list[str]
    recipes: dict[str, Recipe]
    inventory: set[str]
    locations: dict[str, str] | None
    raw_text: str

    def canonical_form(self) -> tuple:
        """Structure-only view used for round-trip comparisons (ignores raw_text)."""
        recipes = {
            name: (tuple(r.materials), tuple(r.steps)) for name, r in self.recipes.items()
        }
        locations = tuple(self.locations.items()) if self.locations is not None else None
        return (tuple(self.options), recipes, frozenset(self.inventory), locations)

    def has_material(self, name: str) -> bool:
        return normalize_name(name) in self.inventory


@dataclass
class FeasibilityResult:
    """Whether required materials are all in stock, and a refusal message if not."""

    feasible: bool
    missing: list[str]
    message: str


@dataclass
class Lexicon:
    """Mention tables declared alongside a guidelines file.

    ``mentions`` maps colloquial ingredient phrases to canonical material
    names (which may be absent from the inventory: that is how unknown
    requests like "passion fruit" are recognized at all).  ``item_classes``
    maps utensil words, singular and plural, to their class name.
    """

    mentions: dict[str, str] = field(default_factory=dict)
    item_classes: dict[str, str] = field(default_factory=dict)
    class_sizes: dict[str, str] = field(default_factory=dict)


def load_lexicon(path: str | Path) -> Lexicon:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return Lexicon(
        mentions={normalize_name(k): normalize_name(v) for k, v in data.get("mentions", {}).items()},
        item_classes={
            normalize_name(k): normalize_name(v) for k, v in data.get("item_classes", {}).items()
        },
        class_sizes={
            normalize_name(k): v for k, v in data.get("class_sizes", {}).items()
        },
    )


class _RecipeBuilder:
    def __init__(self, name: str, lineno: int) -> None:
        self.name = name
        self.lineno = lineno
        self.materials: list[str] = []
        self.steps: list[str] = []

    def finish(self) -> Recipe:
        if not self.steps:
            raise MalformedGuidelines(self.lineno, f"recipe {self.name!r} has no steps")
        return Recipe(name=self.name, materials=self.materials, steps=self.steps)


def _split_csv(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def parse_guidelines(text: str) -> TaskGuidelines:
    """Parse a guideline document into its structured form.

    Raises MalformedGuidelines when the Options header or the
    available-material section is missing, on a recipe without steps, or on
    non-contiguous step numbering.
    """
    options: list[str] = []
    recipes: dict[str, Recipe] = {}
    inventory_names: list[str] = []
    locations: dict[str, str] = {}
    saw_options = False
    saw_materials = False
    saw_locations = False
    section = "preamble"
    current: _RecipeBuilder | None = None
    option_keys: dict[str, str] = {}

    def finish_current() -> None:
        nonlocal current
        if current is not None:
            recipes[current.name] = current.finish()
            current = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == OPTIONS_HEADER:
            saw_options = True
            section = "options"
            continue
        if line == INSTRUCTIONS_HEADER:
            option_keys = {normalize_name(o): o for o in options}
            section = "instructions"
            continue
        if line == MATERIALS_HEADER:
            finish_current()
            saw_materials = True
            section = "materials"
            continue
        if line == LOCATIONS_HEADER:
            finish_current()
            saw_locations = True
            section = "locations"
            continue

        if section in ("materials", "locations") and line.endswith(":"):
            section = "unknown"  # trailing sections stay in raw_text only
            continue
        if section in ("preamble", "unknown"):
            continue
        if section == "options":
            options.extend(_split_csv(line))
        elif section == "instructions":
            key = normalize_name(line)
            step_match = _STEP_RE.match(line)
            if key in option_keys and step_match is None:
                finish_current()
                current = _RecipeBuilder(option_keys[key], lineno)
            elif current is None:
                raise MalformedGuidelines(lineno, f"recipe body before any recipe name: {line!r}")
            elif line.startswith(MATERIAL_PREFIX):
                current.materials = _split_csv(line[len(MATERIAL_PREFIX):])
            elif line == STEPS_HEADER or line == STEPS_HEADER.rstrip(":"):
                continue
            elif step_match is not None:
                index = int(step_match.group(1))
                if index != len(current.steps):
                    raise MalformedGuidelines(
                        lineno, f"step index {index} not contiguous (expected {len(current.steps)})"
                    )
                current.steps.append(step_match.group(2).strip())
            elif current.steps:
                current.steps[-1] = current.steps[-1] + " " + line
            else:
                raise MalformedGuidelines(lineno, f"unexpected line in recipe block: {line!r}")
        elif section == "materials":
            inventory_names.extend(_split_csv(line))
        elif section == "locations":
            content = line.lstrip("*").strip()
            if not content:
                continue
            if " for " in content:
                name, desc = content.split(" for ", 1)
            else:
                name, desc = content, ""
            locations[name.strip()] = desc.strip()

    finish_current()

    if not saw_options:
        raise MalformedGuidelines(0, "missing Options header")
    if not saw_materials:
        raise MalformedGuidelines(0, "missing available-material section")
    for option in options:
        if option not in recipes:
            raise MalformedGuidelines(0, f"option {option!r} has no recipe")

    return TaskGuidelines(
        options=options,
        recipes=recipes,
        inventory={normalize_name(n) for n in inventory_names},
        locations=locations if saw_locations else None,
        raw_text=text,
    )


def render_guidelines(g: TaskGuidelines) -> str:
    """Render guidelines back to canonical document text.

    parse_guidelines(render_guidelines(g)) reproduces g's canonical form.
    """
    lines = [OPTIONS_HEADER, ", ".join(g.options), INSTRUCTIONS_HEADER]
    for option in g.options:
        recipe = g.recipes[option]
        lines.append(recipe.name)
        lines.append(f"{MATERIAL_PREFIX} {', '.join(recipe.materials)}")
        lines.append(STEPS_HEADER)
        for i, step in enumerate(recipe.steps):
            lines.append(f"{i}) {step}")
    if g.locations is not None:
        lines.append(LOCATIONS_HEADER)
        for name, desc in g.locations.items():
            lines.append(f" * {name} for {desc}" if desc else f" * {name}")
    lines.append(MATERIALS_HEADER)
    lines.append(", ".join(sorted(g.inventory)))
    return "\n".join(lines) + "\n"


def load_guidelines(path: str | Path) -> TaskGuidelines:
    return parse_guidelines(Path(path).read_text(encoding="utf-8"))


def check_feasibility(g: TaskGuidelines, required: list[str]) -> FeasibilityResult:
    """Check required materials against the inventory.

    Matching is case- and whitespace-insensitive.  The refusal message names
    each missing material as "<Name> is not available".
    """
    missing = [normalize_name(name) for name in required if not g.has_material(name)]
    if not missing:
        return FeasibilityResult(feasible=True, missing=[], message="")
    message = "; ".join(f"{m[:1].upper()}{m[1:]} is not available" for m in missing)
    return FeasibilityResult(feasible=False, missing=missing, message=message)
