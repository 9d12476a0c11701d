"""Atomic file writes and record serialization helpers."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import MalformedRecord

__all__ = ["atomic_write_text", "canonical_json", "read_jsonl", "append_jsonl"]


def atomic_write_text(path, text: str):
    """Write text to path via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    """Deterministic one-line JSON (sorted keys, shortest float repr)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def read_jsonl(path):
    """Parse a JSON-lines file; raises MalformedRecord with the line number."""
    records = []
    with open(path) as f:
        for i, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedRecord(i, str(exc)) from exc
    return records


def append_jsonl(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as f:
        f.write(canonical_json(obj) + "\n")
        f.flush()
