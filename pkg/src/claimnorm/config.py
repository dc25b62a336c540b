"""Pipeline configuration: YAML/JSON file plus CLI flag overrides.

Secrets never live here; the API key and endpoint base URL come from the
environment (CLAIMNORM_API_KEY / CLAIMNORM_BASE_URL, with the OPENAI_*
names accepted as fallbacks).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError


@dataclass
class PipelineConfig:
    language: str = "eng"
    recall_threshold: float = 0.4
    k: int = 5
    embedding_model: str = "text-embedding-3-small"
    embedding_dim: int = 1536
    llm_model: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_tokens: int = 512
    concurrency: int = 4
    batch_size: int = 128
    cache_dir: str = ".claimnorm-cache"
    superset_sim_threshold: float = 0.95
    superset_coverage_threshold: float = 0.9
    most_similar_last: bool = False
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.recall_threshold <= 1.0:
            raise ConfigError(f"recall_threshold must be in [0,1], got {self.recall_threshold}")
        if self.k < 1:
            raise ConfigError(f"k must be ≥ 1, got {self.k}")
        if self.embedding_dim < 1:
            raise ConfigError(f"embedding_dim must be ≥ 1, got {self.embedding_dim}")
        if self.concurrency < 1:
            raise ConfigError(f"concurrency must be ≥ 1, got {self.concurrency}")
        if not 0.0 <= self.superset_sim_threshold <= 1.0:
            raise ConfigError("superset_sim_threshold must be in [0,1]")

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path=None, **overrides) -> PipelineConfig:
    """Build a config from an optional file plus non-None overrides."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid config: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        known = set(PipelineConfig.__dataclass_fields__)
        unknown = set(loaded) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg
