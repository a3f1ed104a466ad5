"""Random deployments: one eBCS AP, I non-eBCS APs and Thomas-clustered STAs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

PLACEMENT_SCHEMES = ("center-farthest",)


class ScenarioError(ValueError):
    pass


def even_split(total: int, parts: int) -> tuple[int, ...]:
    base, extra = divmod(total, parts)
    return tuple(base + (1 if i < extra else 0) for i in range(parts))


@dataclass(frozen=True)
class ScenarioConfig:
    region_side: float = 300.0
    num_bss: int = 2
    total_stas: int = 100
    stas_per_bss: tuple[int, ...] | None = None
    distance_b: float = 40.0
    bss_radius: float = 10.0
    frames_per_step: int = 5
    seed: int = 0
    placement_scheme: str = "center-farthest"

    def __post_init__(self):
        if self.stas_per_bss is None and self.num_bss >= 1 and self.total_stas >= 0:
            object.__setattr__(self, "stas_per_bss", even_split(self.total_stas, self.num_bss))
        elif self.stas_per_bss is not None:
            object.__setattr__(self, "stas_per_bss", tuple(int(n) for n in self.stas_per_bss))
        self.validate()

    def validate(self) -> None:
        if not self.region_side > 0:
            raise ScenarioError("region_side must be positive")
        if self.num_bss < 1:
            raise ScenarioError("num_bss must be at least 1")
        if self.total_stas < 1:
            raise ScenarioError("total_stas must be at least 1")
        if len(self.stas_per_bss) != self.num_bss:
            raise ScenarioError(
                f"stas_per_bss has {len(self.stas_per_bss)} entries, expected num_bss={self.num_bss}"
            )
        if any(n < 0 for n in self.stas_per_bss) or sum(self.stas_per_bss) != self.total_stas:
            raise ScenarioError(
                f"stas_per_bss {self.stas_per_bss} must be non-negative and sum to total_stas={self.total_stas}"
            )
        if not 1 <= self.frames_per_step <= self.total_stas:
            raise ScenarioError(
                f"frames_per_step={self.frames_per_step} must lie in [1, total_stas={self.total_stas}]"
            )
        if self.distance_b < 0 or self.bss_radius < 0:
            raise ScenarioError("distance_b and bss_radius must be non-negative")
        half = self.region_side / 2
        if self.distance_b + self.bss_radius > half:
            raise ScenarioError(
                f"distance_b + bss_radius = {self.distance_b + self.bss_radius} exceeds half the region side ({half})"
            )
        if not 0 <= self.seed < 2**64:
            raise ScenarioError("seed must be an unsigned 64-bit integer")
        if self.placement_scheme not in PLACEMENT_SCHEMES:
            raise ScenarioError(f"unknown placement_scheme {self.placement_scheme!r}")

    def with_geometry(self, distance_b: float, bss_radius: float) -> "ScenarioConfig":
        return replace(self, distance_b=float(distance_b), bss_radius=float(bss_radius))


@dataclass
class Deployment:
    """Node positions in meters. BSS indices are 1-based."""

    region_side: float
    ebcs_ap_position: np.ndarray
    non_ebcs_ap_positions: np.ndarray
    sta_positions: np.ndarray
    sta_bss: np.ndarray
    _distances: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def num_bss(self) -> int:
        return len(self.non_ebcs_ap_positions)

    @property
    def num_stas(self) -> int:
        return len(self.sta_positions)

    def sta_distances(self) -> np.ndarray:
        """Distances from the eBCS AP to every STA (cached)."""
        if self._distances is None:
            self._distances = np.linalg.norm(self.sta_positions - self.ebcs_ap_position, axis=1)
        return self._distances

    def to_dict(self) -> dict:
        return {
            "region_side_m": self.region_side,
            "ebcs_ap": self.ebcs_ap_position.tolist(),
            "non_ebcs_aps": self.non_ebcs_ap_positions.tolist(),
            "stas": [
                {"x": float(p[0]), "y": float(p[1]), "bss": int(b)}
                for p, b in zip(self.sta_positions, self.sta_bss)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Deployment":
        stas = data["stas"]
        return cls(
            region_side=float(data["region_side_m"]),
            ebcs_ap_position=np.asarray(data["ebcs_ap"], dtype=float),
            non_ebcs_ap_positions=np.asarray(data["non_ebcs_aps"], dtype=float).reshape(-1, 2),
            sta_positions=np.asarray([[s["x"], s["y"]] for s in stas], dtype=float).reshape(-1, 2),
            sta_bss=np.asarray([s["bss"] for s in stas], dtype=int),
        )


def _inside(points: np.ndarray, side: float) -> np.ndarray:
    return np.all((points >= 0.0) & (points <= side), axis=-1)


def generate_deployment(config: ScenarioConfig, rng: np.random.Generator) -> Deployment:
    """Place the eBCS AP at the region center and cluster STAs around the APs.

    AP 1 sits exactly ``distance_b`` from the center, the others at uniform
    distances in (0, distance_b]; all angles are uniform. STAs are Gaussian
    daughters (per-axis std ``bss_radius``) of their AP; daughters that
    land outside the region are redrawn.
    """
    config.validate()
    side = config.region_side
    center = np.array([side / 2, side / 2])
    b = config.distance_b

    angles = rng.uniform(0.0, 2 * math.pi, size=config.num_bss)
    # 1 - U(0,1) lies in (0, 1]
    radii = np.concatenate(([b], b * (1.0 - rng.uniform(size=config.num_bss - 1))))
    aps = center + np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))

    bss = np.repeat(np.arange(1, config.num_bss + 1), config.stas_per_bss)
    parents = aps[bss - 1]
    stas = parents + rng.normal(0.0, config.bss_radius, size=parents.shape)
    outside = ~_inside(stas, side)
    while outside.any():
        idx = np.flatnonzero(outside)
        stas[idx] = parents[idx] + rng.normal(0.0, config.bss_radius, size=(len(idx), 2))
        outside[idx] = ~_inside(stas[idx], side)

    return Deployment(side, center, aps, stas, bss)


def distance_b(deployment: Deployment) -> float:
    aps = np.asarray(deployment.non_ebcs_ap_positions, dtype=float).reshape(-1, 2)
    if len(aps) == 0:
        raise ScenarioError("deployment has no non-eBCS APs")
    return float(np.max(np.linalg.norm(aps - deployment.ebcs_ap_position, axis=1)))


def sample_uplink_stas(deployment: Deployment, m: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of the ``m`` distinct STAs whose uplink frames are overheard this step."""
    n = deployment.num_stas
    if not 1 <= m <= n:
        raise ScenarioError(f"cannot overhear m={m} frames from {n} STAs")
    return rng.choice(n, size=m, replace=False)


def save_deployments(path, deployments: list[Deployment], meta: dict | None = None) -> None:
    doc = {"format": "ebcs-deployments/1", "meta": meta or {}, "deployments": [d.to_dict() for d in deployments]}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_deployments(path) -> list[Deployment]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "ebcs-deployments/1":
        raise ScenarioError(f"{path}: not a deployments file")
    return [Deployment.from_dict(d) for d in doc["deployments"]]
