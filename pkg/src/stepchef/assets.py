"""Locate and load the package's bundled data: guidelines, skills, worlds, prompts."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import UnknownDomain
from .guidelines import Lexicon, TaskGuidelines, load_guidelines, load_lexicon

DATA_DIR = Path(__file__).parent / "data"

DOMAINS = ("drink", "dishwash")


def data_path(*parts: str) -> Path:
    return DATA_DIR.joinpath(*parts)


def _check_domain(domain: str) -> None:
    if domain not in DOMAINS:
        raise UnknownDomain(f"unknown domain {domain!r} (expected one of {DOMAINS})")


@dataclass
class DomainAssets:
    """Everything a session needs for one task domain."""

    domain: str
    guidelines: TaskGuidelines
    lexicon: Lexicon
    skills_path: Path
    world_config_path: Path
    calibration_path: Path
    planner_prompt: str
    executor_prompt: str


def default_paths(domain: str) -> dict[str, Path]:
    _check_domain(domain)
    return {
        "guidelines": data_path("guidelines", f"{domain}.txt"),
        "lexicon": data_path("guidelines", f"{domain}_lexicon.json"),
        "skills": data_path("skills", f"{domain}.json"),
        "world": data_path("world", f"{domain}.yaml"),
        "calibration": data_path("calibration", "overhead.txt"),
        "planner_prompt": data_path("prompts", "planner_system.txt"),
        "executor_prompt": data_path("prompts", "executor_system.txt"),
    }


def load_domain_assets(domain: str, paths: dict[str, Path] | None = None) -> DomainAssets:
    resolved = default_paths(domain)
    if paths:
        resolved.update(paths)
    return DomainAssets(
        domain=domain,
        guidelines=load_guidelines(resolved["guidelines"]),
        lexicon=load_lexicon(resolved["lexicon"]),
        skills_path=resolved["skills"],
        world_config_path=resolved["world"],
        calibration_path=resolved["calibration"],
        planner_prompt=Path(resolved["planner_prompt"]).read_text(encoding="utf-8"),
        executor_prompt=Path(resolved["executor_prompt"]).read_text(encoding="utf-8"),
    )
