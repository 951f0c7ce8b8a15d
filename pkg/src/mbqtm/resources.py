"""Locating bundled machine, IR and instance files."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"


def resolve(path, base=None) -> Path:
    """Return the first existing of ``path``, ``base/path`` and the bundled copy.

    Falls back to ``path`` unchanged so the caller's open() reports the error.
    """
    p = Path(path)
    candidates = [p]
    if base is not None and not p.is_absolute():
        candidates.append(Path(base) / p)
    if not p.is_absolute():
        candidates.append(DATA_DIR / p)
    for c in candidates:
        if c.is_file():
            return c
    return p
