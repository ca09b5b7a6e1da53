"""Transcript records: persisted event log per session, with replay.

One JSON object per line; records for a session are strictly
timestamp-ordered and the file is append-only.  Replaying a session's records
reconstructs its final observable state, which the tests compare against the
live session view.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path

EVENT_TYPES = (
    "request",
    "plan",
    "step_started",
    "invocation",
    "outcome",
    "step_completed",
    "interrupt",
    "replanned",
    "refused",
    "completed",
    "failed",
)


@dataclass
class TranscriptRecord:
    timestamp: int  # ms since epoch, strictly increasing per session
    session_id: str
    event_type: str
    payload: dict

    def as_dict(self) -> dict:
        return asdict(self)


class Clock:
    """Millisecond clock that never repeats a value (keeps records ordered)."""

    def __init__(self) -> None:
        self._last = 0
        self._lock = threading.Lock()

    def next_ms(self) -> int:
        with self._lock:
            now = int(time.time() * 1000)
            self._last = max(now, self._last + 1)
            return self._last


class TranscriptWriter:
    """Append-only JSONL writer, one file per session."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path_for(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def append(self, record: TranscriptRecord) -> None:
        line = json.dumps(record.as_dict(), ensure_ascii=False)
        with self._lock:
            with open(self.path_for(record.session_id), "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def read_transcript(path: str | Path) -> list[TranscriptRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        records.append(
            TranscriptRecord(
                timestamp=data["timestamp"],
                session_id=data["session_id"],
                event_type=data["event_type"],
                payload=data["payload"],
            )
        )
    return records


def replay(records: list[TranscriptRecord]) -> dict:
    """Reconstruct the observable session state from its event log.

    Returns the same shape as the replayable subset of a live session view:
    state, current plan step texts, cursor, and completed step texts.
    """
    state = "idle"
    plan_steps: list[str] = []
    cursor = 0
    completed: list[str] = []
    for record in records:
        kind = record.event_type
        if kind == "request":
            state = "planning"
        elif kind in ("plan", "replanned"):
            plan_steps = list(record.payload.get("steps", []))
            cursor = 0
            state = "executing"
        elif kind == "step_completed":
            completed.append(record.payload.get("text", ""))
            cursor += 1
        elif kind == "refused":
            state = "refused"
        elif kind == "completed":
            state = "completed"
        elif kind == "failed":
            state = "failed"
    return {"state": state, "plan_steps": plan_steps, "cursor": cursor, "completed": completed}


def replayable_view(view: dict) -> dict:
    """Project a full session view down to the replay-comparable fields."""
    return {
        "state": view["state"],
        "plan_steps": [s["text"] for s in view["plan"]["steps"]] if view.get("plan") else [],
        "cursor": view["cursor"],
        "completed": list(view["completed"]),
    }
