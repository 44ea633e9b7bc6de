"""Workspace layout, content-hash stage markers, provenance manifest, lock file.

Markers store the producing config hash plus a checksum per output file; a
stage counts as complete only when every recorded checksum still verifies.
Nothing under the workspace carries wall-clock state, so identical runs
produce byte-identical trees.
"""

from __future__ import annotations

import hashlib
import json
import os
from contextlib import contextmanager
from pathlib import Path

from .errors import InvalidState, MissingStage, WorkspaceLocked

STAGES = ("gen_dataset", "curate", "train", "sample", "reconstruct", "eval")

_DIRS = ("assets", "videos", "curation", "checkpoints", "samples", "clouds", "reports", "markers")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def prepare(self) -> None:
        for d in _DIRS:
            (self.root / d).mkdir(parents=True, exist_ok=True)

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def relative(self, path: Path) -> str:
        return str(Path(path).relative_to(self.root))

    # -- locking ------------------------------------------------------------

    @contextmanager
    def lock(self):
        self.root.mkdir(parents=True, exist_ok=True)
        lockfile = self.root / "lock"
        try:
            fd = os.open(lockfile, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WorkspaceLocked(f"workspace {self.root} is locked by another run")
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield self
        finally:
            lockfile.unlink(missing_ok=True)

    # -- stage markers ------------------------------------------------------

    def marker_path(self, stage: str) -> Path:
        return self.root / "markers" / f"{stage}.json"

    def write_marker(self, stage: str, config_hash: str, outputs: list[Path]) -> None:
        if stage not in STAGES:
            raise InvalidState(f"unknown stage {stage!r}")
        payload = {
            "stage": stage,
            "config_hash": config_hash,
            "outputs": {self.relative(p): _sha256(p) for p in sorted(outputs)},
        }
        self.marker_path(stage).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def marker_status(self, stage: str, config_hash: str | None = None) -> str:
        """'complete', 'stale' (hash or checksum mismatch), or 'missing'."""
        path = self.marker_path(stage)
        if not path.exists():
            return "missing"
        payload = json.loads(path.read_text())
        if config_hash is not None and payload.get("config_hash") != config_hash:
            return "stale"
        for rel, digest in payload.get("outputs", {}).items():
            target = self.root / rel
            if not target.exists() or _sha256(target) != digest:
                return "stale"
        return "complete"

    def is_complete(self, stage: str, config_hash: str) -> bool:
        return self.marker_status(stage, config_hash) == "complete"

    def require(self, stage: str, config_hash: str) -> None:
        status = self.marker_status(stage, config_hash)
        if status != "complete":
            raise MissingStage(f"{stage} ({status})")

    # -- provenance manifest --------------------------------------------------

    def record_outputs(self, stage: str, config_hash: str, seed: int, outputs: list[Path]) -> None:
        manifest_path = self.root / "manifest.json"
        entries = {}
        if manifest_path.exists():
            entries = {e["path"]: e for e in json.loads(manifest_path.read_text())["entries"]}
        for p in outputs:
            rel = self.relative(p)
            entries[rel] = {
                "path": rel,
                "stage": stage,
                "config_hash": config_hash,
                "seed": seed,
                "sha256": _sha256(p),
            }
        payload = {"entries": [entries[k] for k in sorted(entries)]}
        manifest_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def manifest_entries(self) -> list[dict]:
        manifest_path = self.root / "manifest.json"
        if not manifest_path.exists():
            return []
        return json.loads(manifest_path.read_text())["entries"]
