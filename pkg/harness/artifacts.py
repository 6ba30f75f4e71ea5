"""Load and save experiment artifacts (fit data, potential fields) as MessagePack."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Mapping

import msgpack
import numpy as np


def _plain(obj: Any) -> Any:
    """numpy scalars and arrays to msgpack-native values."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def save_artifact(obj: Mapping[str, Any], path: str | Path) -> Path:
    """Persist *obj* to *path* as MessagePack."""
    if not isinstance(obj, Mapping):
        raise TypeError("Artifact object must be a mapping")
    dst = Path(path)
    os.makedirs(dst.parent, exist_ok=True)
    with dst.open("wb") as fh:
        msgpack.dump(_plain(obj), fh, use_bin_type=True)
    return dst


def load_artifact(path: str | Path) -> dict[str, Any]:
    """Load an artifact written by save_artifact."""
    src = Path(path)
    if not src.exists():
        raise FileNotFoundError(f"Artifact not found: {src}")
    with src.open("rb") as fh:
        data = msgpack.load(fh, raw=False)
    if not isinstance(data, dict):
        raise ValueError("Artifact root must be a mapping")
    return data
