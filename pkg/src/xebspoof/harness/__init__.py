from .config import ExperimentConfig, config_hash, load_config, save_config
from .manifest import RunManifest, load_manifest, write_manifest

__all__ = [
    "ExperimentConfig",
    "RunManifest",
    "config_hash",
    "load_config",
    "load_manifest",
    "save_config",
    "write_manifest",
]
