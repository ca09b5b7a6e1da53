"""Deterministic simulated kitchen: ground-truth state and skill semantics.

Two domains share one state type.  Drink making deals in cups, ingredient
stocks, and pour/scoop volumes; dishwashing deals in dirty utensils, a
three-rack dishwasher, and a wash cycle.  Skills are transactional: every
precondition is checked before any field changes, so a failed skill leaves
the state exactly as it was.
"""

from __future__ import annotations

import copy
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import yaml

from .errors import PreconditionFailed, UnknownDomain

if TYPE_CHECKING:  # ToolInvocation is only needed for annotations
    from .skills import ToolInvocation

_ZONE_SPREAD_M = 0.03  # x offset between items sharing a zone


@dataclass
class Item:
    """One physical object: where it is and what a detector would call it."""

    id: str
    label: str
    kind: str  # cup | container | utensil
    pose: tuple[float, float]
    zone: str  # zone name, "gripper", or "rack:<k>"
    ingredient: str | None = None  # containers: the stock they hold
    cls: str | None = None  # utensils: plate, fork, ...
    dirty: bool = False
    dry: bool = True
    has_particles: bool = False


@dataclass
class DishwasherState:
    door_open: bool = False
    racks: dict[int, list[str]] = field(default_factory=lambda: {1: [], 2: [], 3: []})
    pulled: set[int] = field(default_factory=set)
    detergent: str | None = None
    phase: str = "idle"  # idle | running | done


@dataclass
class WorldConfig:
    domain: str
    constants: dict[str, float]
    zones: dict[str, tuple[float, float]]
    stocks: dict[str, float] = field(default_factory=dict)
    viscosity: dict[str, str] = field(default_factory=dict)
    items: list[dict] = field(default_factory=list)
    detergents: list[str] = field(default_factory=list)
    default_items: dict[str, int] = field(default_factory=dict)
    item_layout: dict = field(default_factory=dict)
    vocabulary: list[str] = field(default_factory=list)
    pose_jitter_m: float = 0.0
    default_seed: int = 0


def load_world_config(path: str | Path) -> WorldConfig:
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    return WorldConfig(
        domain=raw["domain"],
        constants={k: float(v) for k, v in raw.get("constants", {}).items()},
        zones={name: (float(p[0]), float(p[1])) for name, p in raw.get("zones", {}).items()},
        stocks={k: float(v) for k, v in raw.get("stocks", {}).items()},
        viscosity=raw.get("viscosity", {}),
        items=raw.get("items", []),
        detergents=list(raw.get("detergents", [])),
        default_items={k: int(v) for k, v in raw.get("default_items", {}).items()},
        item_layout=raw.get("item_layout", {}),
        vocabulary=list(raw.get("vocabulary", [])),
        pose_jitter_m=float(raw.get("pose_jitter_m", 0.0)),
        default_seed=int(raw.get("default_seed", 0)),
    )


@dataclass
class SkillOutcome:
    """Result of one skill application; state_delta is empty when nothing changed."""

    ok: bool
    observation: str
    state_delta: dict = field(default_factory=dict)


@dataclass
class WorldState:
    """Complete simulated kitchen state for one session."""

    domain: str
    config: WorldConfig
    objects: dict[str, Item]
    cup_contents: dict[str, list[tuple[str, float]]]
    gripper: str | None
    dishwasher: DishwasherState
    stocks: dict[str, float]
    initial_stocks: dict[str, float]
    rng_seed: int
    revision: int = 0
    slip_probability: float = 0.0
    _slip_rng: random.Random = field(default_factory=random.Random, compare=False, repr=False)

    def items(self) -> list[Item]:
        return list(self.objects.values())

    def items_in_zone(self, zone: str) -> list[Item]:
        return sorted((i for i in self.objects.values() if i.zone == zone), key=lambda i: i.id)

    def cup_volume(self, cup_id: str) -> float:
        return sum(ml for _, ml in self.cup_contents.get(cup_id, []))

    def cup_amount(self, cup_id: str, ingredient: str) -> float:
        return sum(ml for ing, ml in self.cup_contents.get(cup_id, []) if ing == ingredient)

    def find_cup_at(self, zone: str) -> Item | None:
        cups = [i for i in self.items_in_zone(zone) if i.kind == "cup"]
        return cups[0] if cups else None

    def held_item(self) -> Item | None:
        return self.objects.get(self.gripper) if self.gripper else None

    def _zone_pose(self, zone: str) -> tuple[float, float]:
        anchor = self.config.zones[zone]
        occupied = len(self.items_in_zone(zone))
        return (anchor[0] + _ZONE_SPREAD_M * occupied, anchor[1])

    def _refresh_cup_label(self, cup: Item) -> None:
        if cup.zone == "discard":
            cup.label = "discarded cup"
        elif self.cup_contents.get(cup.id):
            cup.label = "working cup"
        else:
            cup.label = "empty cup"


def snapshot(w: WorldState) -> WorldState:
    """Deep, independent copy of the world."""
    return copy.deepcopy(w)


def _slug(label: str) -> str:
    return re.sub(r"\W+", "_", label.strip()).strip("_")


def reset(
    domain: str,
    seed: int | None = 0,
    config: WorldConfig | str | Path | None = None,
    items: dict[str, int] | None = None,
) -> WorldState:
    """Build the canonical starting world for a domain.

    The same seed always yields the identical layout (poses get a small
    deterministic jitter).  For dishwashing, ``items`` overrides the
    configured dirty-utensil counts, e.g. ``{"plates": 2, "forks": 1}``.
    """
    if domain not in ("drink", "dishwash"):
        raise UnknownDomain(f"unknown domain {domain!r}")
    if config is None or isinstance(config, (str, Path)):
        from .assets import default_paths

        config = load_world_config(config or default_paths(domain)["world"])
    if config.domain != domain:
        raise UnknownDomain(f"config is for domain {config.domain!r}, not {domain!r}")
    if seed is None:
        seed = config.default_seed

    rng = random.Random(seed)
    jitter = config.pose_jitter_m
    objects: dict[str, Item] = {}
    cup_contents: dict[str, list[tuple[str, float]]] = {}

    def place(label: str, kind: str, zone: str, pose: tuple[float, float], **extra) -> Item:
        base = _slug(label)
        n = sum(1 for i in objects.values() if i.id.startswith(base + "_")) + 1
        jittered = (
            pose[0] + rng.uniform(-jitter, jitter),
            pose[1] + rng.uniform(-jitter, jitter),
        )
        item = Item(id=f"{base}_{n}", label=label, kind=kind, pose=jittered, zone=zone, **extra)
        objects[item.id] = item
        return item

    if domain == "drink":
        for entry in config.items:
            item = place(
                entry["label"],
                entry.get("kind", "container"),
                entry["zone"],
                (float(entry["pose"][0]), float(entry["pose"][1])),
                ingredient=entry.get("ingredient"),
            )
            if item.kind == "cup":
                cup_contents[item.id] = []
    else:
        counts = dict(config.default_items)
        if items is not None:
            counts = {_singular(k): int(v) for k, v in items.items()}
        start = config.item_layout.get("start", [0.06, 0.15])
        dx = float(config.item_layout.get("dx", 0.06))
        index = 0
        for cls, count in counts.items():
            for _ in range(count):
                pose = (float(start[0]) + dx * index, float(start[1]))
                place(
                    f"dirty {cls}",
                    "utensil",
                    "dirty_area",
                    pose,
                    cls=cls,
                    dirty=True,
                    dry=False,
                    has_particles=True,
                )
                index += 1

    slip_rng = random.Random(seed + 1)
    return WorldState(
        domain=domain,
        config=config,
        objects=objects,
        cup_contents=cup_contents,
        gripper=None,
        dishwasher=DishwasherState(),
        stocks=dict(config.stocks),
        initial_stocks=dict(config.stocks),
        rng_seed=seed,
        _slip_rng=slip_rng,
    )


def _singular(name: str) -> str:
    n = name.strip().lower()
    if n.endswith("ves"):
        return n[:-3] + "fe"  # knives -> knife
    if n.endswith("s") and not n.endswith("ss"):
        return n[:-1]
    return n


def conservation_ok(w: WorldState) -> bool:
    """Every ingredient: initial stock == remaining stock + amounts in cups."""
    in_cups: dict[str, float] = {}
    for contents in w.cup_contents.values():
        for ingredient, ml in contents:
            in_cups[ingredient] = in_cups.get(ingredient, 0.0) + ml
    for ingredient, initial in w.initial_stocks.items():
        total = w.stocks.get(ingredient, 0.0) + in_cups.get(ingredient, 0.0)
        if abs(total - initial) > 1e-9:
            return False
    return all(v >= -1e-9 for v in w.stocks.values())


def check_integrity(w: WorldState) -> list[str]:
    """Structural invariants: single locations, gripper and rack consistency."""
    problems = []
    for item in w.objects.values():
        if item.zone == "gripper":
            if w.gripper != item.id:
                problems.append(f"{item.id} claims gripper but gripper holds {w.gripper}")
        elif item.zone.startswith("rack:"):
            k = int(item.zone.split(":", 1)[1])
            if item.id not in w.dishwasher.racks.get(k, []):
                problems.append(f"{item.id} claims rack {k} but rack list disagrees")
        elif item.zone not in w.config.zones:
            problems.append(f"{item.id} in unknown zone {item.zone!r}")
    if w.gripper is not None and w.objects.get(w.gripper, Item("", "", "", (0, 0), "")).zone != "gripper":
        problems.append(f"gripper holds {w.gripper} but item zone disagrees")
    rack_members = [i for ids in w.dishwasher.racks.values() for i in ids]
    if len(rack_members) != len(set(rack_members)):
        problems.append("an item appears on two racks")
    for cup_id in w.cup_contents:
        cap = w.config.constants.get("cup_capacity_ml", float("inf"))
        if w.cup_volume(cup_id) > cap + 1e-9:
            problems.append(f"{cup_id} over capacity")
    if any(v < -1e-9 for v in w.stocks.values()):
        problems.append("negative stock")
    return problems


# --- skill handlers -------------------------------------------------------
#
# Each handler validates all preconditions first (raising PreconditionFailed),
# then commits with plain assignments and returns (observation, state_delta).


def _check_slip(w: WorldState, skill: str) -> None:
    if w.slip_probability > 0 and w._slip_rng.random() < w.slip_probability:
        raise PreconditionFailed(skill, "the gripper slipped and lost its grasp")


def _grasp_cup(w: WorldState, args: dict) -> tuple[str, dict]:
    x, y = float(args["x"]), float(args["y"])
    if w.gripper is not None:
        raise PreconditionFailed("grasp_cup", "gripper is already holding something")
    radius = w.config.constants["grasp_radius_m"]
    cups = [
        (((i.pose[0] - x) ** 2 + (i.pose[1] - y) ** 2) ** 0.5, i)
        for i in w.objects.values()
        if i.kind == "cup" and i.zone != "gripper"
    ]
    cups = [(d, i) for d, i in cups if d <= radius]
    if not cups:
        raise PreconditionFailed("grasp_cup", f"no cup within {radius} m of ({x:.2f}, {y:.2f})")
    _check_slip(w, "grasp_cup")
    cups.sort(key=lambda pair: (pair[0], pair[1].id))
    cup = cups[0][1]
    cup.zone = "gripper"
    w.gripper = cup.id
    return f"grasped cup ({cup.label})", {"gripper": cup.id}


def _place_cup(w: WorldState, args: dict) -> tuple[str, dict]:
    location = args["location"]
    held = w.held_item()
    if held is None or held.kind != "cup":
        raise PreconditionFailed("place_cup", "gripper is not holding a cup")
    if location not in w.config.zones:
        raise PreconditionFailed("place_cup", f"unknown location {location!r}")
    pose = w._zone_pose(location)
    held.zone = location
    held.pose = pose
    w.gripper = None
    w._refresh_cup_label(held)
    return f"placed {held.label} at {location}", {f"{held.id}.zone": location}


def _dispense(w: WorldState, skill: str, ingredient: str, location: str, amount: float) -> tuple[str, dict]:
    if ingredient not in w.stocks:
        raise PreconditionFailed(skill, f"no such ingredient {ingredient!r}")
    if location not in w.config.zones:
        raise PreconditionFailed(skill, f"unknown location {location!r}")
    cup = w.find_cup_at(location)
    if cup is None:
        raise PreconditionFailed(skill, f"no cup at {location}")
    if w.stocks[ingredient] < amount:
        raise PreconditionFailed(skill, f"not enough {ingredient} left")
    capacity = w.config.constants["cup_capacity_ml"]
    if w.cup_volume(cup.id) + amount > capacity + 1e-9:
        raise PreconditionFailed(skill, f"cup at {location} would overflow")
    w.stocks[ingredient] -= amount
    w.cup_contents.setdefault(cup.id, []).append((ingredient, amount))
    w._refresh_cup_label(cup)
    return (
        f"added {amount:.0f} ml of {ingredient} to the cup at {location}",
        {f"stocks.{ingredient}": w.stocks[ingredient], f"cup.{cup.id}": f"+{amount:.0f} ml {ingredient}"},
    )


def _scoop_to_location(w: WorldState, args: dict) -> tuple[str, dict]:
    return _dispense(
        w, "scoop_to_location", args["ingredient"], args["location"], w.config.constants["scoop_unit_ml"]
    )


def _pour(w: WorldState, args: dict) -> tuple[str, dict]:
    ingredient = args["ingredient"]
    viscosity = w.config.viscosity.get(ingredient, w.config.viscosity.get("default", "thick"))
    key = "pour_thin_ml" if viscosity == "thin" else "pour_thick_ml"
    return _dispense(w, "pour", ingredient, args["location"], w.config.constants[key])


def _grasp_item(w: WorldState, args: dict) -> tuple[str, dict]:
    label = " ".join(str(args["label"]).lower().split())
    if w.gripper is not None:
        raise PreconditionFailed("grasp_item", "gripper is already holding something")
    candidates = [
        i
        for i in w.objects.values()
        if label in i.label and i.zone in w.config.zones
    ]
    if not candidates:
        raise PreconditionFailed("grasp_item", f"no reachable item matching {label!r}")
    _check_slip(w, "grasp_item")
    item = sorted(candidates, key=lambda i: i.id)[0]
    item.zone = "gripper"
    w.gripper = item.id
    return f"grasped {item.label}", {"gripper": item.id}


def _remove_particles(w: WorldState, args: dict) -> tuple[str, dict]:
    held = w.held_item()
    if held is None:
        raise PreconditionFailed("remove_particles", "gripper is not holding anything")
    if not held.has_particles:
        return f"no large particles left on {held.label}", {}
    held.has_particles = False
    return f"removed large particles from {held.label}", {f"{held.id}.has_particles": False}


def _open_dishwasher(w: WorldState, args: dict) -> tuple[str, dict]:
    if w.dishwasher.door_open:
        raise PreconditionFailed("open_dishwasher", "dishwasher is already open")
    w.dishwasher.door_open = True
    return "opened the dishwasher", {"dishwasher.door_open": True}


def _pull_out_rack(w: WorldState, args: dict) -> tuple[str, dict]:
    rack = int(args["rack"])
    if not w.dishwasher.door_open:
        raise PreconditionFailed("pull_out_rack", "dishwasher door is closed")
    if rack not in w.dishwasher.racks:
        raise PreconditionFailed("pull_out_rack", f"no rack {rack}")
    if rack in w.dishwasher.pulled:
        return f"rack {rack} is already pulled out", {}
    w.dishwasher.pulled.add(rack)
    return f"pulled out rack {rack}", {"dishwasher.pulled": sorted(w.dishwasher.pulled)}


def _put_item_on_rack(w: WorldState, args: dict) -> tuple[str, dict]:
    rack = int(args["rack"])
    held = w.held_item()
    if not w.dishwasher.door_open:
        raise PreconditionFailed("put_item_on_rack", "dishwasher door is closed")
    if rack not in w.dishwasher.racks:
        raise PreconditionFailed("put_item_on_rack", f"no rack {rack}")
    if rack not in w.dishwasher.pulled:
        raise PreconditionFailed("put_item_on_rack", f"rack {rack} is not pulled out")
    if held is None:
        raise PreconditionFailed("put_item_on_rack", "gripper is not holding anything")
    held.zone = f"rack:{rack}"
    w.dishwasher.racks[rack].append(held.id)
    w.gripper = None
    return f"put {held.label} on rack {rack}", {f"{held.id}.zone": f"rack:{rack}"}


def _add_detergent(w: WorldState, args: dict) -> tuple[str, dict]:
    flavor = str(args["flavor"]).lower()
    if not w.dishwasher.door_open:
        raise PreconditionFailed("add_detergent", "dishwasher door is closed")
    if flavor not in w.config.detergents:
        raise PreconditionFailed("add_detergent", f"no {flavor} detergent in the dispenser rack")
    if w.dishwasher.detergent is not None:
        raise PreconditionFailed("add_detergent", "detergent dispenser is already filled")
    w.dishwasher.detergent = flavor
    return f"added {flavor} detergent", {"dishwasher.detergent": flavor}


def _close_dishwasher(w: WorldState, args: dict) -> tuple[str, dict]:
    if not w.dishwasher.door_open:
        raise PreconditionFailed("close_dishwasher", "dishwasher is already closed")
    w.dishwasher.door_open = False
    w.dishwasher.pulled.clear()
    return "closed the dishwasher", {"dishwasher.door_open": False}


def _start_cycle(w: WorldState, args: dict) -> tuple[str, dict]:
    if w.dishwasher.door_open:
        raise PreconditionFailed("start_cycle", "dishwasher door is open")
    if w.dishwasher.detergent is None:
        raise PreconditionFailed("start_cycle", "no detergent in the dispenser")
    if w.dishwasher.phase != "idle":
        raise PreconditionFailed("start_cycle", f"cycle already {w.dishwasher.phase}")
    w.dishwasher.phase = "running"
    return "started the wash cycle", {"dishwasher.phase": "running"}


def _wait_for_completion(w: WorldState, args: dict) -> tuple[str, dict]:
    if w.dishwasher.phase != "running":
        raise PreconditionFailed("wait_for_completion", "no cycle is running")
    w.dishwasher.phase = "done"
    cleaned = []
    for ids in w.dishwasher.racks.values():
        for item_id in ids:
            item = w.objects[item_id]
            item.dirty = False
            item.dry = True
            item.has_particles = False
            if item.cls:
                item.label = f"clean {item.cls}"
            cleaned.append(item_id)
    return (
        "cycle finished and the dishes cooled down",
        {"dishwasher.phase": "done", "cleaned": cleaned},
    )


def _inspect_item(w: WorldState, args: dict) -> tuple[str, dict]:
    label = " ".join(str(args["label"]).lower().split())
    matches = sorted((i for i in w.objects.values() if label in i.label), key=lambda i: i.id)
    if not matches:
        raise PreconditionFailed("inspect_item", f"no item matching {label!r}")
    item = matches[0]
    if not item.dirty and item.dry:
        return f"{item.label} is clean and dry", {}
    return f"{item.label} is not clean yet", {}


def _return_items(w: WorldState, args: dict) -> tuple[str, dict]:
    if w.dishwasher.phase != "done":
        raise PreconditionFailed("return_items", "wash cycle has not completed")
    moved = []
    for rack, ids in w.dishwasher.racks.items():
        for item_id in ids:
            item = w.objects[item_id]
            item.zone = "finished_location"
            item.pose = w._zone_pose("finished_location")
            moved.append(item_id)
        w.dishwasher.racks[rack] = []
    if not moved:
        raise PreconditionFailed("return_items", "nothing in the dishwasher to return")
    w.dishwasher.phase = "idle"
    w.dishwasher.detergent = None
    return f"returned {len(moved)} clean items to the finished location", {"returned": moved}


def _respond_to_user(w: WorldState, args: dict) -> tuple[str, dict]:
    return str(args["message"]), {}


def _step_complete(w: WorldState, args: dict) -> tuple[str, dict]:
    return "step complete", {}


_HANDLERS = {
    "drink": {
        "grasp_cup": _grasp_cup,
        "place_cup": _place_cup,
        "scoop_to_location": _scoop_to_location,
        "pour": _pour,
        "respond_to_user": _respond_to_user,
        "step_complete": _step_complete,
    },
    "dishwash": {
        "grasp_item": _grasp_item,
        "remove_particles": _remove_particles,
        "open_dishwasher": _open_dishwasher,
        "pull_out_rack": _pull_out_rack,
        "put_item_on_rack": _put_item_on_rack,
        "add_detergent": _add_detergent,
        "close_dishwasher": _close_dishwasher,
        "start_cycle": _start_cycle,
        "wait_for_completion": _wait_for_completion,
        "inspect_item": _inspect_item,
        "return_items": _return_items,
        "respond_to_user": _respond_to_user,
        "step_complete": _step_complete,
    },
}


def apply_skill(w: WorldState, call: ToolInvocation) -> tuple[WorldState, SkillOutcome]:
    """Apply one validated skill invocation to the world, in place.

    Returns the same world object plus the outcome.  On failure the world is
    untouched and the outcome carries the failure reason.
    """
    handler = _HANDLERS.get(w.domain, {}).get(call.name)
    if handler is None:
        return w, SkillOutcome(
            ok=False, observation=f"skill {call.name!r} is not available in the {w.domain} domain"
        )
    try:
        observation, delta = handler(w, call.arguments)
    except PreconditionFailed as exc:
        return w, SkillOutcome(ok=False, observation=f"{exc.skill} failed: {exc.reason}")
    if delta:
        w.revision += 1
    return w, SkillOutcome(ok=True, observation=observation, state_delta=delta)


def drink_complete(w: WorldState, flavors: list[str], wants_boba: bool) -> bool:
    """Drink success: cup at the finished location with everything requested.

    Requires one scoop unit of every requested flavor (and of boba when
    requested) and at least 100 ml of milk in a cup at finished_location.
    """
    cup = w.find_cup_at("finished_location")
    if cup is None:
        return False
    unit = w.config.constants["scoop_unit_ml"]
    required = list(flavors) + (["boba"] if wants_boba else [])
    for flavor in required:
        if w.cup_amount(cup.id, flavor) < unit:
            return False
    return w.cup_amount(cup.id, "milk") >= 100.0


def cup_ingredients(w: WorldState, cup_id: str) -> set[str]:
    return {ing for ing, _ in w.cup_contents.get(cup_id, [])}


def dishwash_complete(w: WorldState, items: dict[str, int]) -> bool:
    """Dishwashing success: requested counts of each class, clean and dry, returned."""
    finished = w.items_in_zone("finished_location")
    for cls, count in items.items():
        done = [i for i in finished if i.cls == _singular(cls) and not i.dirty and i.dry]
        if len(done) < count:
            return False
    return True
