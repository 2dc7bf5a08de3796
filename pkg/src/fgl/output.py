"""CSV and JSON writers.  Every file is written to a temporary sibling and
moved into place, so readers never see a partial file."""

from __future__ import annotations

import json
import os
import platform
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["write_csv", "write_json", "write_manifest", "format_value", "versions", "MANIFEST_NAME"]

MANIFEST_NAME = "manifest.json"


def format_value(v) -> str:
    """Integers verbatim, reals with 17 significant digits, ``None`` as empty."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.16e" % float(v)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, data, sort_keys: bool = True) -> None:
    _atomic_write(path, json.dumps(data, indent=2, sort_keys=sort_keys, default=_default) + "\n")


def versions() -> dict:
    import scipy

    from . import __version__

    return {
        "fgl": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_manifest(directory, *, command, config, timings, iterations=None, acceptance=None, extra=None) -> Path:
    """Write the single run manifest of ``directory``."""
    data = {
        "command": list(command),
        "config": config,
        "versions": versions(),
        "timings": timings,
        "iterations": iterations or {},
        "acceptance": acceptance or {},
    }
    if extra:
        data.update(extra)
    path = Path(directory) / MANIFEST_NAME
    write_json(path, data)
    return path
