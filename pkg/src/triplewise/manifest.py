"""Run manifests: every CLI command records its inputs, outputs and seeds."""
from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path: str | Path, command: str, seed: int | None,
                   config_snapshot: dict | None, inputs: list,
                   outputs: list) -> dict:
    manifest = {
        "command": command,
        "config": config_snapshot,
        "inputs": [str(p) for p in inputs],
        "outputs": {str(p): file_sha256(p) for p in outputs},
        "seed": seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest
