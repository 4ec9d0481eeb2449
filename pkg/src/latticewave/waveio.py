"""Serialization of waves, tables, and run artifacts.

Numbers are written through ``repr``: Python's shortest-round-trip float
formatting, so every serialized decimal reads back to the identical binary
value.  JSON objects carry sorted keys and a trailing newline; rewriting the
same data therefore reproduces the file byte for byte, which the report
stage relies on.  All writers go through a temp file in the target directory
followed by ``os.replace`` so a crash never leaves a half-written artifact.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Optional, Sequence

import numpy as np

from .profiles import WaveProfile

__all__ = [
    "write_json",
    "read_json",
    "write_csv",
    "wave_to_dict",
    "wave_from_dict",
    "save_wave",
    "load_wave",
    "jsonable",
]


def jsonable(obj):
    """Recursively convert numpy containers to plain JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n")


def read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        # split upstream instead; a bare complex in a table is a bug
        raise TypeError("complex values must be written as separate re/im columns")
    return str(v)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# wave profiles


def wave_to_dict(wave: WaveProfile) -> dict:
    out = {
        "k": wave.k,
        "p": wave.p,
        "N": wave.N,
        "omega": wave.omega,
        "modes": jsonable(wave.modes),
        "residual_sup": wave.residual_sup,
        "iterations": wave.iterations,
        "slack": wave.slack,
    }
    if wave.mass is not None:
        out["mass"] = jsonable(np.asarray(wave.mass, dtype=float))
    if wave.energy is not None:
        out["energy"] = float(wave.energy)
    return out


def wave_from_dict(data: dict) -> WaveProfile:
    modes = np.asarray(data["modes"]["re"], dtype=float) + 1j * np.asarray(
        data["modes"]["im"], dtype=float
    )
    mass = data.get("mass")
    return WaveProfile(
        k=float(data["k"]),
        modes=modes,
        omega=float(data["omega"]),
        p=data["p"],
        N=data["N"],
        mass=None if mass is None else np.asarray(mass, dtype=float),
        energy=data.get("energy"),
        residual_sup=float(data.get("residual_sup", float("nan"))),
        iterations=int(data.get("iterations", 0)),
        slack=float(data.get("slack", 0.0)),
    )


def save_wave(path: str, wave: WaveProfile) -> None:
    write_json(path, wave_to_dict(wave))


def load_wave(path: str) -> WaveProfile:
    return wave_from_dict(read_json(path))
