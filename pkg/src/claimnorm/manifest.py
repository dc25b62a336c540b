"""Append-only run manifests and the working-directory stage lock."""

from __future__ import annotations

import hashlib
import json
import os
import time
from contextlib import contextmanager
from pathlib import Path

from .errors import ConfigError

MANIFEST_FILE = "manifests.jsonl"
LOCK_FILE = ".claimnorm.lock"
TOOL_VERSION = "0.1.0"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@contextmanager
def stage_lock(workdir):
    """One stage process at a time per working directory."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    lock_path = workdir / LOCK_FILE
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"another stage holds the lock at {lock_path}; "
            "remove it if no run is active"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock_path.unlink(missing_ok=True)


def append_manifest(
    workdir,
    stage: str,
    config: dict,
    inputs: list[str],
    outputs: list[str],
    counts: dict,
    started: float,
) -> dict:
    """Record one successful stage run; output digests imply success."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    entry = {
        "stage": stage,
        "tool_version": TOOL_VERSION,
        "config": config,
        "input_digests": {str(p): file_digest(p) for p in inputs if Path(p).exists()},
        "output_digests": {str(p): file_digest(p) for p in outputs if Path(p).exists()},
        "counts": counts,
        "started": started,
        "finished": time.time(),
    }
    with (workdir / MANIFEST_FILE).open("a", encoding="utf-8") as f:
        f.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return entry


def read_manifests(workdir) -> list[dict]:
    path = Path(workdir) / MANIFEST_FILE
    if not path.exists():
        return []
    entries = []
    with path.open(encoding="utf-8") as f:
        for line in f:
            if line.strip():
                entries.append(json.loads(line))
    return entries
