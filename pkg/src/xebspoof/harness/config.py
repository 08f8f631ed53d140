"""Experiment configuration: a JSON key-value tree with a canonical form.

The committed dialect is JSON (UTF-8, object keys sorted in the canonical
serialization). `load_config` also accepts a run manifest and unwraps the
embedded config, so any finished run can be replayed from its manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

VALID_FAMILIES = ("fbs", "gbs", "fs")
VALID_SAMPLERS_PREFIX = ("uniform", "marginal", "ideal-pow:")
VALID_INDICATORS_PREFIX = ("marginal", "multinomial-mixed", "multinomial-sup", "ideal-pow:")
VALID_XE_VARIANTS = ("log", "linear")


class ConfigError(ValueError):
    """Malformed or unresolvable configuration; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    family: str
    modes: int
    particles: int | None = None
    squeezing: tuple[float, ...] | None = None
    mean_photons: float | None = None
    sectors: tuple[int, ...] | None = None
    rates: tuple[int, ...] = (1,)
    n_samples: int = 1000
    sampler: str = "uniform"
    indicator: str = "marginal"
    variant: str = "batch"
    xe_variants: tuple[str, ...] = ("log",)
    normalize: bool = False
    multisector: bool = False
    trials: int = 1
    particle_grid: tuple[int, ...] | None = None
    modes_factor: int | None = None

    def __post_init__(self):
        if self.family not in VALID_FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if not any(
            self.sampler == p or (p.endswith(":") and self.sampler.startswith(p))
            for p in VALID_SAMPLERS_PREFIX
        ):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if not any(
            self.indicator == p or (p.endswith(":") and self.indicator.startswith(p))
            for p in VALID_INDICATORS_PREFIX
        ):
            raise ConfigError(f"unknown indicator {self.indicator!r}")
        for v in self.xe_variants:
            if v not in VALID_XE_VARIANTS:
                raise ConfigError(f"unknown XE variant {v!r}")
        if self.family in ("fbs", "fs") and self.particles is None and self.particle_grid is None:
            raise ConfigError(f"family {self.family!r} needs `particles` (or a particle grid)")
        if self.family == "gbs" and self.squeezing is None and self.mean_photons is None:
            raise ConfigError("gbs needs `squeezing` or `mean_photons`")
        if any(r < 1 for r in self.rates) or self.n_samples < 1 or self.trials < 1:
            raise ConfigError("rates, n_samples and trials must be >= 1")

    def to_dict(self) -> dict:
        raw = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in raw.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("squeezing", "sectors", "rates", "xe_variants", "particle_grid"):
            if coerced.get(key) is not None:
                coerced[key] = tuple(coerced[key])
        try:
            return cls(**coerced)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig | dict) -> str:
    data = config.to_dict() if isinstance(config, ExperimentConfig) else config
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    if isinstance(data, dict) and data.get("kind") == "xebspoof-manifest":
        data = data["config"]
    return ExperimentConfig.from_dict(data)
