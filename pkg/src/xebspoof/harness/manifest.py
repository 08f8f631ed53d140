"""Run manifests: everything needed to replay a run byte-for-byte.

A manifest embeds the full config, the command that consumed it, the derived
seed streams, and the list of emitted files. Re-running any command with
`--config <manifest.json>` reproduces identical CSV outputs (timestamps live
only in the manifest, never in data files).
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, ExperimentConfig, config_hash

MANIFEST_KIND = "xebspoof-manifest"
MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    command: str
    config: dict
    config_hash: str
    tool_version: str
    created_utc: str
    seeds: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": MANIFEST_KIND,
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "created_utc": self.created_utc,
            "seeds": self.seeds,
            "outputs": self.outputs,
        }


def new_manifest(command: str, config: ExperimentConfig) -> RunManifest:
    from .. import __version__

    return RunManifest(
        command=command,
        config=config.to_dict(),
        config_hash=config_hash(config),
        tool_version=__version__,
        created_utc=datetime.datetime.now(datetime.timezone.utc)
        .replace(microsecond=0)
        .isoformat(),
    )


def write_manifest(manifest: RunManifest, out_dir: str | Path) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


def load_manifest(path: str | Path) -> RunManifest:
    data = json.loads(Path(path).read_text())
    if data.get("kind") != MANIFEST_KIND:
        raise ConfigError(f"{path} is not a run manifest")
    return RunManifest(
        command=data["command"],
        config=data["config"],
        config_hash=data["config_hash"],
        tool_version=data["tool_version"],
        created_utc=data["created_utc"],
        seeds=data.get("seeds", {}),
        outputs=data.get("outputs", []),
    )
