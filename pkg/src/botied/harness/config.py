"""Run configuration: defaults, validation and YAML round-tripping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import yaml

from ..acquisition import AcquisitionSpec


@dataclass(frozen=True)
class ProblemConfig:
    name: str = "branin_currin"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MetricConfig:
    """Settings of the shared CDF-indicator estimator."""
    family_policy: str = "gaussian"
    mc_samples: int = 10_000
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    metric: MetricConfig = field(default_factory=MetricConfig)
    T: int = 30
    B: int = 4
    N0: Optional[int] = None  # default 2 (d + 1)
    pool_size: Optional[int] = None  # default 100 B
    L: int = 20
    seed: int = 0
    noise_fraction: float = 0.01
    resample_pool: bool = True
    gp_restarts: int = 5
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if self.N0 is not None and self.N0 < 2:
            raise ValueError("N0 must be at least 2")
        if self.pool_size is not None and self.pool_size < self.B:
            raise ValueError("pool_size must be at least B")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.noise_fraction < 0:
            raise ValueError("noise_fraction must be non-negative")

    def resolved(self, d: int) -> "RunConfig":
        """Fill dimension-dependent defaults."""
        return replace(
            self,
            N0=self.N0 if self.N0 is not None else 2 * (d + 1),
            pool_size=self.pool_size if self.pool_size is not None else 100 * self.B,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "RunConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "problem" in data:
            data["problem"] = _section(ProblemConfig, data["problem"], "problem")
        if "acquisition" in data:
            data["acquisition"] = _section(AcquisitionSpec, data["acquisition"], "acquisition")
        if "metric" in data:
            data["metric"] = _section(MetricConfig, data["metric"], "metric")
        return cls(**data)

    def method_key(self) -> str:
        a = self.acquisition
        if a.kind.startswith("botied") and a.copula_family_policy != "gaussian":
            return f"{a.kind}[{a.copula_family_policy}]"
        return a.kind


def _section(cls, value, name):
    if isinstance(value, cls):
        return value
    if isinstance(value, str) and cls is ProblemConfig:
        return ProblemConfig(value)
    if not isinstance(value, dict):
        raise ValueError(f"config section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(value) - known
    if unknown:
        raise ValueError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return cls(**value)


def load_config(path) -> RunConfig:
    with Path(path).open() as fh:
        return RunConfig.from_dict(yaml.safe_load(fh))


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(dump_config(config))
