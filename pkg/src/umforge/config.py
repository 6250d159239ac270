"""Pipeline configuration with canonical JSON serialization.

Defaults reproduce the standard operating point: 512 superpixels, threshold
50, HU window [-1500, 100], the 4-scale metric grid, and single-seed
determinism. to_json is canonical (sorted keys), so round-trips are identity
and the config hash is stable.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import ParameterError
from .metrics.gaussian import SCALES, TASKS

THREADS_ENV_VAR = "UMFORGE_THREADS"


@dataclass(frozen=True)
class PipelineConfig:
    superpixels_m: int = 512
    threshold_t: int = 50
    hu_window: tuple[float, float] = (-1500.0, 100.0)
    seed: int = 0
    scales: tuple[int, ...] = SCALES
    tasks: tuple[str, ...] = TASKS
    parallelism: int = 1
    compactness: float = 10.0
    max_iters: int = 10
    min_lung_fraction: float = 0.10

    def __post_init__(self):
        if self.superpixels_m < 1:
            raise ParameterError("superpixels_m must be >= 1")
        if not 0 < self.threshold_t < 256:
            raise ParameterError("threshold_t must be in (0, 255]")
        if self.hu_window[0] >= self.hu_window[1]:
            raise ParameterError("hu_window must satisfy lo < hi")
        if self.parallelism < 1:
            raise ParameterError("parallelism must be >= 1")
        object.__setattr__(self, "hu_window", tuple(float(v) for v in self.hu_window))
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        object.__setattr__(self, "tasks", tuple(self.tasks))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        data = json.loads(text)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        if "hu_window" in data:
            data["hu_window"] = tuple(data["hu_window"])
        if "scales" in data:
            data["scales"] = tuple(data["scales"])
        if "tasks" in data:
            data["tasks"] = tuple(data["tasks"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def with_overrides(self, **kwargs) -> "PipelineConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def worker_count(config: PipelineConfig, cli_value: int | None = None) -> int:
    """Effective worker count: CLI flag beats UMFORGE_THREADS beats config."""
    if cli_value is not None:
        if cli_value < 1:
            raise ParameterError("parallelism must be >= 1")
        return cli_value
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ParameterError(f"{THREADS_ENV_VAR} must be an integer") from exc
        if value < 1:
            raise ParameterError(f"{THREADS_ENV_VAR} must be >= 1")
        return value
    return config.parallelism
