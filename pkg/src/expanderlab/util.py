"""Small shared helpers: atomic file output and float formatting."""

from __future__ import annotations

import json
import os


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` atomically.

    The data lands in ``path + ".tmp"`` first and is moved into place with
    ``os.replace``, so readers never observe a half-written file. The temp
    file lives next to the target, hence on the same filesystem.
    """
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def atomic_write_json(path: str, payload: dict) -> None:
    """Serialize ``payload`` deterministically and write it atomically."""
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (lossless round trip)."""
    return f"{x:.17g}"
