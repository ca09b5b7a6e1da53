"""Scene grounding: detections to robot-frame positions and scene text.

A planar homography maps pixel coordinates to robot-frame (x, y) in meters.
It is estimated from point correspondences with the normalized Direct Linear
Transform (DLT) and solved via SVD.  The synthetic detector inverts the same
homography to place bounding boxes for the simulated world, so detection
followed by description recovers true object poses up to float error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateConfiguration
from .world import WorldState

_MIN_SINGULAR_RATIO = 1e-9


@dataclass
class Detection:
    """One detected object: label, pixel bounding box, confidence."""

    label: str
    bbox: tuple[float, float, float, float]  # (u_min, v_min, u_max, v_max)
    score: float

    def center(self) -> tuple[float, float]:
        u_min, v_min, u_max, v_max = self.bbox
        return ((u_min + u_max) / 2.0, (v_min + v_max) / 2.0)


@dataclass
class Calibration:
    """Pixel-to-robot planar homography plus the source image size.

    H is 3x3 with H[2, 2] == 1 and maps homogeneous pixel coordinates to
    homogeneous robot-frame coordinates.
    """

    H: np.ndarray
    image_size: tuple[int, int]
    fit_error: float | None = None

    def project(self, u: float, v: float) -> tuple[float, float]:
        """Map a pixel point into the robot frame."""
        x, y, w = self.H @ np.array([u, v, 1.0])
        return (x / w, y / w)

    def unproject(self, x: float, y: float) -> tuple[float, float]:
        """Map a robot-frame point back into pixel coordinates."""
        u, v, w = np.linalg.inv(self.H) @ np.array([x, y, 1.0])
        return (u / w, v / w)


@dataclass
class SceneDescription:
    """Robot-frame entries plus the rendered text consumed by the executor prompt."""

    entries: list[tuple[str, float, float]]
    rendered: str


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hartley normalization: centroid at origin, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    dists = np.linalg.norm(pts - centroid, axis=1)
    mean_dist = dists.mean()
    if mean_dist < 1e-12:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    T = np.array([[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1]])
    homog = np.column_stack([pts, np.ones(len(pts))])
    return (T @ homog.T).T, T


def fit_homography(
    correspondences: list[tuple[tuple[float, float], tuple[float, float]]],
    image_size: tuple[int, int] = (640, 480),
) -> Calibration:
    """Estimate the pixel-to-robot homography from >= 4 correspondences.

    Each correspondence is ((u, v), (x, y)).  Uses the normalized DLT: each
    pair contributes two rows to a homogeneous system solved by SVD; the
    normalizing similarities are undone afterwards.  The returned calibration
    carries the maximum reprojection error over the inputs.

    Raises DegenerateConfiguration when the system is rank-deficient, e.g.
    three collinear pixel points among four.
    """
    if len(correspondences) < 4:
        raise ValueError("need at least 4 correspondences")
    src = np.array([c[0] for c in correspondences], dtype=float)
    dst = np.array([c[1] for c in correspondences], dtype=float)
    src_n, T1 = _normalize_points(src)
    dst_n, T2 = _normalize_points(dst)

    rows = []
    for (u, v, _), (x, y, _) in zip(src_n, dst_n):
        rows.append([-u, -v, -1, 0, 0, 0, x * u, x * v, x])
        rows.append([0, 0, 0, -u, -v, -1, y * u, y * v, y])
    A = np.array(rows)
    _, sing, Vt = np.linalg.svd(A)
    if sing[7] < _MIN_SINGULAR_RATIO * sing[0]:
        raise DegenerateConfiguration("correspondences are rank-deficient")
    Hn = Vt[-1].reshape(3, 3)
    H = np.linalg.inv(T2) @ Hn @ T1
    if abs(H[2, 2]) < 1e-12 or abs(np.linalg.det(H / np.linalg.norm(H))) < 1e-12:
        raise DegenerateConfiguration("estimated homography is singular")
    H = H / H[2, 2]

    projected = (H @ np.column_stack([src, np.ones(len(src))]).T).T
    projected = projected[:, :2] / projected[:, 2:3]
    max_err = float(np.abs(projected - dst).max())
    return Calibration(H=H, image_size=image_size, fit_error=max_err)


def load_calibration(path: str | Path) -> Calibration:
    """Read a calibration file: 9 homography values row-major, then width height."""
    numbers = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            numbers.extend(float(tok) for tok in line.split())
    if len(numbers) != 11:
        raise ValueError(f"calibration file needs 11 numbers, found {len(numbers)}")
    H = np.array(numbers[:9]).reshape(3, 3)
    if abs(np.linalg.det(H)) < 1e-12:
        raise DegenerateConfiguration("calibration homography is singular")
    return Calibration(H=H / H[2, 2], image_size=(int(numbers[9]), int(numbers[10])))


def save_calibration(cal: Calibration, path: str | Path) -> None:
    lines = [" ".join(repr(float(v)) for v in row) for row in cal.H]
    lines.append(f"{cal.image_size[0]} {cal.image_size[1]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# Nominal pixel sizes for synthetic bounding boxes, by label substring.
_DEFAULT_BOX = (40.0, 40.0)
_LABEL_SIZES = {
    "cup": (36.0, 36.0),
    "carton": (48.0, 72.0),
    "container": (50.0, 50.0),
    "jar": (32.0, 44.0),
    "box": (44.0, 44.0),
    "plate": (80.0, 80.0),
    "bowl": (60.0, 60.0),
    "fork": (16.0, 64.0),
    "knife": (14.0, 70.0),
}


def _nominal_size(label: str) -> tuple[float, float]:
    for key, size in _LABEL_SIZES.items():
        if key in label:
            return size
    return _DEFAULT_BOX


class DetectorInterface:
    """Contract for external detectors: labels in, detections out."""

    def detect(self, image_ref: str, queries: list[str]) -> list[Detection]:
        raise NotImplementedError


class SyntheticDetector:
    """Oracle detector that reads the simulated world directly.

    A queried label matches an object when the normalized query is a
    substring of the object's label (open-vocabulary style, so "milk"
    finds the "milk carton").  Boxes are centered on the inverse-homography
    projection of the true pose, with score 1.0.
    """

    def __init__(self, cal: Calibration) -> None:
        self.cal = cal

    def detect(self, world: WorldState, queries: list[str]) -> list[Detection]:
        seen: set[str] = set()
        detections = []
        for query in queries:
            q = " ".join(query.lower().split())
            for item in world.items():
                if item.id in seen or q not in item.label:
                    continue
                if item.zone == "gripper":
                    continue  # occluded by the gripper, not on the table plane
                seen.add(item.id)
                u, v = self.cal.unproject(item.pose[0], item.pose[1])
                w, h = _nominal_size(item.label)
                detections.append(
                    Detection(
                        label=item.label,
                        bbox=(u - w / 2, v - h / 2, u + w / 2, v + h / 2),
                        score=1.0,
                    )
                )
        return detections


def detect(world: WorldState, queries: list[str], cal: Calibration) -> list[Detection]:
    """Synthetic detection over the simulated world (see SyntheticDetector)."""
    return SyntheticDetector(cal).detect(world, queries)


def describe_scene(dets: list[Detection], cal: Calibration) -> SceneDescription:
    """Convert detections to robot-frame entries and render the scene text.

    Entries are sorted by (label, x, y) so the rendering is deterministic;
    positions are printed to 2 decimals while entries keep full precision.
    """
    entries = []
    for det in dets:
        u, v = det.center()
        x, y = cal.project(u, v)
        entries.append((det.label, x, y))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    if not entries:
        rendered = "No objects detected in the scene."
    else:
        lines = ["Objects in view:"]
        lines += [f"- {label} at ({x:.2f}, {y:.2f})" for label, x, y in entries]
        rendered = "\n".join(lines)
    return SceneDescription(entries=entries, rendered=rendered)


_SCENE_LINE_RE = re.compile(r"^- (.+) at \((-?\d+\.\d+), (-?\d+\.\d+)\)$")


def parse_scene_text(rendered: str) -> list[tuple[str, float, float]]:
    """Recover (label, x, y) entries from rendered scene text."""
    entries = []
    for line in rendered.splitlines():
        m = _SCENE_LINE_RE.match(line.strip())
        if m:
            entries.append((m.group(1), float(m.group(2)), float(m.group(3))))
    return entries
