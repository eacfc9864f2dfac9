"""Run manifests: config echo, seed, and content hashes of every output.

A run is reconstructible from its manifest: the config echo plus seed
reproduce the outputs byte for byte; the hashes verify them. Timestamps
are metadata about one execution, so the manifest itself is the only
run-varying file in an output directory.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

from . import __version__

MANIFEST_NAME = "run_manifest.json"


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class RunManifest:
    def __init__(self, command: str, config_echo: dict, seed):
        self.command = command
        self.config_echo = config_echo
        self.seed = seed
        self.start = time.time()

    def write(self, out_dir, outputs, diagnostics=()) -> Path:
        out_dir = Path(out_dir)
        entry = {
            "command": self.command,
            "config": self.config_echo,
            "seed": self.seed,
            "code_version": __version__,
            "started_unix": self.start,
            "finished_unix": time.time(),
            "outputs": [
                {"file": Path(p).name, "sha256": file_sha256(p)}
                for p in outputs
            ],
            "diagnostics": [Path(p).name for p in diagnostics],
        }
        path = out_dir / MANIFEST_NAME
        path.write_text(json.dumps(entry, indent=2, sort_keys=True) + "\n")
        return path


def load_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / MANIFEST_NAME).read_text())


def verify_outputs(out_dir) -> bool:
    """Re-hash every listed output against the manifest."""
    entry = load_manifest(out_dir)
    for item in entry["outputs"]:
        if file_sha256(Path(out_dir) / item["file"]) != item["sha256"]:
            return False
    return True
