"""Project store: a directory of JSON documents plus columnar draw files.

Chosen over a database for inspectability: every song, fit and plan is a
single sorted-key JSON file, draws live in the columnar block format, and
an append-only run log records every mutation with its seed and config
hash so a store can be rebuilt by replaying the log.

Fit and plan ids are content hashes of their canonical request (data
snapshot digest, config, seed), which makes ids and artifacts
reproducible run over run.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path

from .draws import PosteriorDraws
from .errors import StoreError

_KINDS = ("songs", "fits", "plans")


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def content_id(doc, prefix: str = "") -> str:
    digest = hashlib.sha256(canonical_json(doc).encode()).hexdigest()[:12]
    return f"{prefix}{digest}"


class ProjectStore:
    """Single-writer document store with an append-only run log."""

    def __init__(self, root):
        self.root = Path(root)
        for kind in _KINDS:
            (self.root / kind).mkdir(parents=True, exist_ok=True)
        (self.root / "draws").mkdir(exist_ok=True)
        self._lock = threading.Lock()

    # -- documents -----------------------------------------------------------

    def _path(self, kind: str, key: str) -> Path:
        if kind not in _KINDS:
            raise StoreError(f"unknown document kind {kind!r}")
        safe = key.replace(os.sep, "_")
        return self.root / kind / f"{safe}.json"

    def put(self, kind: str, key: str, doc: dict, overwrite: bool = True) -> str:
        path = self._path(kind, key)
        with self._lock:
            if path.exists() and not overwrite:
                raise StoreError(f"{kind}/{key} already exists", conflict=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
            os.replace(tmp, path)
        return key

    def get(self, kind: str, key: str) -> dict:
        path = self._path(kind, key)
        if not path.exists():
            raise StoreError(f"{kind}/{key} not found")
        return json.loads(path.read_text())

    def has(self, kind: str, key: str) -> bool:
        return self._path(kind, key).exists()

    def list(self, kind: str) -> list[str]:
        if kind not in _KINDS:
            raise StoreError(f"unknown document kind {kind!r}")
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))

    # -- draws ----------------------------------------------------------------

    def put_draws(self, key: str, draws: PosteriorDraws) -> str:
        with self._lock:
            draws.save_dir(self.root / "draws" / key)
        return key

    def get_draws(self, key: str) -> PosteriorDraws:
        return PosteriorDraws.load_dir(self.root / "draws" / key)

    def has_draws(self, key: str) -> bool:
        return (self.root / "draws" / key / "index.json").exists()

    # -- run log ---------------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self.root / "runlog.jsonl"

    def log(self, action: str, payload: dict, seed=None, result=None) -> None:
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "action": action,
            "payload": payload,
            "seed": seed,
            "config_hash": content_id(payload),
            "result": result,
        }
        with self._lock:
            with open(self.log_path, "a") as fh:
                fh.write(canonical_json(entry) + "\n")

    def read_log(self) -> list[dict]:
        if not self.log_path.exists():
            return []
        with open(self.log_path) as fh:
            return [json.loads(line) for line in fh if line.strip()]
