"""Benchmark suites: plan-accuracy scoring, task success, replan protocol checks.

Three fixture-driven suites mirror the evaluation tables: drinks (10 requests
of graded difficulty), replan (5 request/new-request pairs, each interrupted
before the 1st, 2nd, and 3rd step), and dishwash (10 requests including one
mid-run "wash another" extension).  Ground-truth step lists are pinned in the
fixture files, not regenerated.  A seeded random closure suite drives
generated feasible requests end to end through the simulator.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .assets import data_path, load_domain_assets
from .orchestrator import (
    Session,
    SessionState,
    advance,
    create_session,
    run,
    session_view,
    submit_request,
)
from .planner import PlanStep
from .steps import canonicalize
from .transcript import replay, replayable_view
from .world import (
    check_integrity,
    conservation_ok,
    cup_ingredients,
    dishwash_complete,
    drink_complete,
)

SUITES = ("drinks", "replan", "dishwash")


@dataclass
class BenchmarkCase:
    id: str
    request: str
    difficulty: str = ""
    ground_truth: list[str] | None = None
    refusal_missing: list[str] | None = None
    target: dict | None = None  # drink: {"flavors": [...], "boba": bool}
    items: dict | None = None  # dishwash world contents
    racks: dict | None = None  # dishwash: class -> expected rack number
    interrupt: dict | None = None  # {"boundary": int, "text": str}
    new_request: str | None = None  # replan suite
    new_target: dict | None = None


def load_suite(name: str) -> tuple[list[BenchmarkCase], list[int]]:
    """Load a suite fixture; returns (cases, interrupt boundaries)."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r} (expected one of {SUITES})")
    raw = json.loads(data_path("fixtures", f"{name}_suite.json").read_text(encoding="utf-8"))
    cases = []
    for entry in raw["cases"]:
        cases.append(
            BenchmarkCase(
                id=entry["id"],
                request=entry["request"],
                difficulty=entry.get("difficulty", ""),
                ground_truth=entry.get("ground_truth"),
                refusal_missing=(entry.get("refusal") or {}).get("missing"),
                target=entry.get("target"),
                items=entry.get("items"),
                racks=entry.get("racks"),
                interrupt=entry.get("interrupt"),
                new_request=entry.get("new_request"),
                new_target=entry.get("new_target"),
            )
        )
    return cases, list(raw.get("boundaries", []))


def _keys(steps: list[PlanStep]) -> list[tuple]:
    return [s.match_key() for s in steps]


def score_plan(generated: list[PlanStep], truth: list[PlanStep]) -> tuple[int, int, int]:
    """Count correctly planned steps against the ground truth.

    Steps outside the ground truth entirely (e.g. an inserted stir) are set
    aside as over-generation before the in-order comparison, so one spurious
    insertion costs `extra` rather than misaligning everything after it;
    swapped steps still fail position-wise.
    """
    truth_keys = _keys(truth)
    truth_set = set(truth_keys)
    kept = [k for k in _keys(generated) if k in truth_set]
    matched = sum(
        1 for i, key in enumerate(kept) if i < len(truth_keys) and key == truth_keys[i]
    )
    extra = max(0, len(generated) - len(truth))
    return matched, len(truth), extra


@dataclass
class CaseResult:
    case: BenchmarkCase
    session: Session
    boundary: int | None = None
    matched: int = 0
    total: int = 0
    extra: int = 0
    success: bool = False
    replay_ok: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def planning(self) -> float | None:
        return self.matched / self.total if self.total else None


@dataclass
class ScoreReport:
    suite: str
    rows: list[dict]
    planning_rate: float | None
    success_count: int
    case_count: int

    def to_json_dict(self) -> dict:
        return {
            "suite": self.suite,
            "rows": self.rows,
            "planning_rate": self.planning_rate,
            "success": f"{self.success_count}/{self.case_count}",
        }

    def to_text(self) -> str:
        headers = ["Case", "Request", "Difficulty", "Planning", "Success"]
        table = [headers]
        for row in self.rows:
            planning = row["planning"]
            table.append(
                [
                    row["id"],
                    row["request"][:48],
                    row.get("difficulty", ""),
                    "-" if planning is None else f"{row['matched']}/{row['total']}",
                    "yes" if row["success"] else "NO",
                ]
            )
        widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in table]
        lines.insert(1, "-" * len(lines[0]))
        rate = "-" if self.planning_rate is None else f"{self.planning_rate * 100:.1f}%"
        lines.append(f"Total: planning {rate}, success {self.success_count}/{self.case_count}")
        return "\n".join(lines)

    @property
    def all_pass(self) -> bool:
        return self.success_count == self.case_count


@dataclass
class SuiteResult:
    report: ScoreReport
    results: list[CaseResult]


def _check_replay(session: Session) -> bool:
    return replay(session.events) == replayable_view(session_view(session))


def _truth_steps(case: BenchmarkCase) -> list[PlanStep]:
    return [PlanStep(index=i, text=t) for i, t in enumerate(case.ground_truth, 1)]


def _effective_plan(session: Session) -> list[PlanStep]:
    """The plan a run stands for: for interrupted runs, the steps completed
    before the first replan followed by the replanned steps."""
    replans = [e for e in session.events if e.event_type == "replanned"]
    if not replans:
        return list(session.plan.steps) if session.plan else []
    texts: list[str] = []
    for event in session.events:
        if event.event_type == "replanned":
            texts.extend(event.payload["steps"])
            break
        if event.event_type == "step_completed":
            texts.append(event.payload["text"])
    return [PlanStep(index=i, text=t) for i, t in enumerate(texts, 1)]


def _steps_completed_before_replan(session: Session) -> int:
    count = 0
    for event in session.events:
        if event.event_type == "replanned":
            break
        if event.event_type == "step_completed":
            count += 1
    return count


def _no_reexecution_without_discard(session: Session) -> bool:
    """No executed step's canonical triple repeats unless a discard ran between."""
    executed = [e.payload["text"] for e in session.events if e.event_type == "step_completed"]
    keys = [PlanStep(index=i, text=t).match_key() for i, t in enumerate(executed, 1)]
    discards = [i for i, t in enumerate(executed) if (canonicalize(t) or ("",))[0] == "discard"]
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i] == keys[j] and not any(i < d < j for d in discards):
                return False
    return True


def _drink_final_contents_ok(session: Session, target: dict) -> bool:
    expected = {"milk"} | set(target["flavors"]) | ({"boba"} if target["boba"] else set())
    cup = session.world.find_cup_at("finished_location")
    if cup is None:
        return False
    if cup_ingredients(session.world, cup.id) != expected:
        return False
    return drink_complete(session.world, target["flavors"], target["boba"])


def _run_drink_case(case: BenchmarkCase, provider, seed: int) -> CaseResult:
    session = create_session("drink", provider=provider, seed=seed, session_id=case.id)
    submit_request(session, case.request)
    result = CaseResult(case=case, session=session)
    if case.refusal_missing is not None:
        ok = session.state is SessionState.REFUSED and "is not available" in (
            session.refusal_message or ""
        )
        for name in case.refusal_missing:
            ok = ok and name in (session.refusal_message or "").lower()
        result.success = ok
        if not ok:
            result.notes.append(f"expected refusal of {case.refusal_missing}")
    else:
        run(session)
        result.matched, result.total, result.extra = score_plan(
            _effective_plan(session), _truth_steps(case)
        )
        completed = session.state is SessionState.COMPLETED
        contents_ok = _drink_final_contents_ok(session, case.target)
        result.success = completed and result.matched == result.total and contents_ok
        if not completed:
            result.notes.append(f"ended {session.state.value}: {session.failure_reason}")
        if not conservation_ok(session.world):
            result.success = False
            result.notes.append("conservation violated")
    result.replay_ok = _check_replay(session)
    return result


def _run_dish_case(case: BenchmarkCase, provider, seed: int) -> CaseResult:
    session = create_session(
        "dishwash", provider=provider, seed=seed, session_id=case.id, world_items=case.items
    )
    result = CaseResult(case=case, session=session)
    submit_request(session, case.request)
    if case.refusal_missing is not None:
        ok = session.state is SessionState.REFUSED and "is not available" in (
            session.refusal_message or ""
        )
        result.success = ok
        result.replay_ok = _check_replay(session)
        return result

    if case.interrupt:
        for _ in range(case.interrupt["boundary"]):
            advance(session)
        submit_request(session, case.interrupt["text"])
    run(session)
    result.matched, result.total, result.extra = score_plan(
        _effective_plan(session), _truth_steps(case)
    )
    completed = session.state is SessionState.COMPLETED
    washed = dishwash_complete(session.world, case.items)
    racks_ok = _rack_assignments_ok(session, case)
    result.success = completed and result.matched == result.total and washed and racks_ok
    if not completed:
        result.notes.append(f"ended {session.state.value}: {session.failure_reason}")
    if not racks_ok:
        result.notes.append("rack assignment mismatch")
    result.replay_ok = _check_replay(session)
    return result


_RACK_WORD_NUMBERS = {"first": 1, "second": 2, "third": 3}


def _rack_assignments_ok(session: Session, case: BenchmarkCase) -> bool:
    """Every planned put step must name the rack the fixture expects for its class."""
    if not case.racks:
        return True
    seen = 0
    for step in _effective_plan(session):
        c = canonicalize(step.text)
        if c and c[0] == "put" and c[2] and c[2].endswith("rack"):
            cls, rack_word = c[1], c[2].split()[0]
            if case.racks.get(cls) != _RACK_WORD_NUMBERS.get(rack_word):
                return False
            seen += 1
    return seen == sum(case.items.values())


def _run_replan_case(case: BenchmarkCase, boundary: int, provider, seed: int) -> CaseResult:
    session = create_session(
        "drink", provider=provider, seed=seed, session_id=f"{case.id}_b{boundary}"
    )
    result = CaseResult(case=case, session=session, boundary=boundary)
    submit_request(session, case.request)
    for _ in range(boundary):
        advance(session)
    submit_request(session, case.new_request)
    run(session)

    completed = session.state is SessionState.COMPLETED
    no_reexec = _no_reexecution_without_discard(session)
    contents_ok = _drink_final_contents_ok(session, case.new_target)
    boundary_ok = _steps_completed_before_replan(session) == boundary
    result.success = completed and no_reexec and contents_ok and boundary_ok
    if not completed:
        result.notes.append(f"ended {session.state.value}")
    if not no_reexec:
        result.notes.append("re-executed a completed step without discard")
    if not contents_ok:
        result.notes.append("final cup contents wrong")
    if not boundary_ok:
        result.notes.append("interrupt did not land on the requested boundary")
    result.replay_ok = _check_replay(session)
    return result


def run_suite(name: str, provider_factory=None, seed: int = 0, parallel: bool = False) -> SuiteResult:
    """Run one suite and build its report.

    provider_factory(assets) lets callers swap in a remote provider; by
    default each session uses the deterministic oracle.  Cases run
    sequentially unless ``parallel`` is set (sessions share no world, so they
    are safe to run concurrently; the report order is unchanged).
    """
    cases, boundaries = load_suite(name)

    def provider_for(domain: str):
        if provider_factory is None:
            return None
        return provider_factory(load_domain_assets(domain))

    jobs: list = []
    if name == "drinks":
        jobs = [(lambda c=c: _run_drink_case(c, provider_for("drink"), seed)) for c in cases]
    elif name == "dishwash":
        jobs = [(lambda c=c: _run_dish_case(c, provider_for("dishwash"), seed)) for c in cases]
    else:
        for case in cases:
            for boundary in boundaries:
                jobs.append(
                    lambda c=case, b=boundary: _run_replan_case(c, b, provider_for("drink"), seed)
                )
    if parallel:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda job: job(), jobs))
    else:
        results = [job() for job in jobs]

    rows = []
    for r in results:
        row = {
            "id": r.case.id if r.boundary is None else f"{r.case.id}_b{r.boundary}",
            "request": r.case.request,
            "difficulty": r.case.difficulty,
            "matched": r.matched,
            "total": r.total,
            "extra": r.extra,
            "planning": r.planning,
            "success": r.success,
            "notes": r.notes,
        }
        if r.case.new_request:
            row["new_request"] = r.case.new_request
            row["boundary"] = r.boundary
        rows.append(row)
    scored = [r.planning for r in results if r.planning is not None]
    report = ScoreReport(
        suite=name,
        rows=rows,
        planning_rate=sum(scored) / len(scored) if scored else None,
        success_count=sum(1 for r in results if r.success),
        case_count=len(results),
    )
    return SuiteResult(report=report, results=results)


# --- random closure suite ----------------------------------------------------

DRINK_FLAVORS = ("strawberry jam", "mango jam", "matcha powder", "taro", "blueberry")
DISH_CLASSES = ("plate", "fork", "bowl", "cup", "knife")


def random_drink_request(rng: random.Random) -> tuple[str, list[str], bool]:
    wants_boba = rng.random() < 0.5
    max_flavors = 4 if wants_boba else 5  # keep total additions within cup capacity
    flavors = rng.sample(DRINK_FLAVORS, k=rng.randint(0, max_flavors))
    mentions = list(flavors) + (["boba"] if wants_boba else [])
    if not mentions:
        return "I would like a cup of milk.", [], False
    rng.shuffle(mentions)
    text = "I would like a milk with " + ", ".join(mentions) + "."
    ordered = [m for m in mentions if m != "boba"]
    return text, ordered, wants_boba


def random_dish_request(rng: random.Random) -> tuple[str, dict, str]:
    classes = rng.sample(DISH_CLASSES, k=rng.randint(1, 4))
    items = {cls: rng.randint(1, 3) for cls in classes}
    parts = []
    for cls, count in items.items():
        plural = (cls[:-2] + "ves" if cls.endswith("fe") else cls + "s") if count > 1 else cls
        parts.append(f"{count} {plural}")
    flavor = rng.choice(["rose", "original"])
    text = "Please wash " + ", ".join(parts) + f" with {flavor} flavor."
    return text, items, flavor


def run_closure(count: int = 200, seed: int = 0) -> list[str]:
    """Oracle plan -> execute -> completion predicate for generated requests.

    Returns a list of failure descriptions (empty when the property holds).
    Conservation and world-integrity invariants are checked after every run.
    """
    rng = random.Random(seed)
    failures = []
    for i in range(count):
        if i % 5 < 3:
            text, flavors, boba = random_drink_request(rng)
            session = create_session("drink", seed=i, session_id=f"closure_drink_{i}")
            submit_request(session, text)
            run(session)
            ok = (
                session.state is SessionState.COMPLETED
                and drink_complete(session.world, flavors, boba)
                and conservation_ok(session.world)
                and check_integrity(session.world) == []
            )
            if not ok:
                failures.append(f"drink #{i}: {text!r} ended {session.state.value}")
        else:
            text, items, _ = random_dish_request(rng)
            session = create_session(
                "dishwash", seed=i, session_id=f"closure_dish_{i}", world_items=items
            )
            submit_request(session, text)
            run(session)
            ok = (
                session.state is SessionState.COMPLETED
                and dishwash_complete(session.world, items)
                and check_integrity(session.world) == []
            )
            if not ok:
                failures.append(f"dishwash #{i}: {text!r} ended {session.state.value}")
    return failures
