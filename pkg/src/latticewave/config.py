"""Run configuration: schema, defaults, parsing.

A run is described by one JSON file.  Top-level sections:

``system``   name (one of the registered models) and parameter overrides.
``wave``     target wavenumber ``k`` as "p/N" (or [p, N]), the pinning
             values ``mass`` / ``energy`` / ``amplitude`` the class needs,
             and the truncation ``modes`` (K; the profile carries 2K+1).
``tolerances``  ``profile`` (Newton), ``track`` (monodromy/branches),
             ``ring`` (time integration).
``xi_grid``  exported multiplier table: ``max`` exponent and ``points``
             per sign side.
``validate`` stage toggles: ``jordan``, ``duality``, ``modulation``.
``simulate`` ``ring_periods``, ``n_periods``, ``energy_audit``,
             ``packet``, ``sigma``.
``continuation``  optional; ``parameter`` plus a list of ``values``.
``out``      run directory.  ``seed`` integer.  ``jobs`` worker count.

Everything except ``system.name``, ``wave.k``, and ``out`` has a default;
the filled config is echoed into the run manifest so a report never
depends on implicit state.  Validation collects every violation before
raising, so a bad file is fixed in one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import SchemaError
from .models import MODEL_DEFAULTS

__all__ = ["RunConfig", "parse_config", "config_from_dict", "DEFAULTS"]

DEFAULTS = {
    "tolerances": {"profile": 1e-10, "track": 1e-12, "ring": 1e-10},
    "xi_grid": {"max": 0.01, "points": 8},
    "validate": {"jordan": True, "duality": True, "modulation": True},
    "simulate": {
        "ring_periods": 10,
        "n_periods": 1,
        "energy_audit": True,
        "packet": False,
        "sigma": 30.0,
    },
    "wave": {"modes": 24, "mass": None, "energy": None, "amplitude": None},
    "seed": 0,
    "jobs": 1,
}

_SECTIONS = {
    "system",
    "wave",
    "tolerances",
    "xi_grid",
    "validate",
    "simulate",
    "continuation",
    "out",
    "seed",
    "jobs",
}


@dataclass
class RunConfig:
    """Validated run description; construct via :func:`parse_config`."""

    system: str
    params: dict
    p: int
    N: int
    modes: int
    out: str
    mass: Optional[list] = None
    energy: Optional[float] = None
    amplitude: Optional[float] = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULTS["tolerances"]))
    xi_grid: dict = field(default_factory=lambda: dict(DEFAULTS["xi_grid"]))
    validate: dict = field(default_factory=lambda: dict(DEFAULTS["validate"]))
    simulate: dict = field(default_factory=lambda: dict(DEFAULTS["simulate"]))
    continuation: Optional[dict] = None
    seed: int = 0
    jobs: int = 1

    @property
    def k(self) -> float:
        return self.p / self.N

    def echo(self) -> dict:
        """Fully-resolved config as written into the manifest."""
        return {
            "system": {"name": self.system, "params": self.params},
            "wave": {
                "k": f"{self.p}/{self.N}",
                "modes": self.modes,
                "mass": self.mass,
                "energy": self.energy,
                "amplitude": self.amplitude,
            },
            "tolerances": self.tolerances,
            "xi_grid": self.xi_grid,
            "validate": self.validate,
            "simulate": self.simulate,
            "continuation": self.continuation,
            "out": self.out,
            "seed": self.seed,
            "jobs": self.jobs,
        }


def _parse_k(value, bad):
    if isinstance(value, str):
        try:
            frac = Fraction(value)
        except (ValueError, ZeroDivisionError):
            bad("wave.k", f"not a rational: {value!r}")
            return None
        p, N = frac.numerator, frac.denominator
    elif isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            p, N = int(value[0]), int(value[1])
        except (TypeError, ValueError):
            bad("wave.k", f"pair entries must be integers: {value!r}")
            return None
    else:
        bad("wave.k", f"expected 'p/N' or [p, N], got {value!r}")
        return None
    if p == 0:
        bad("wave.k", "numerator must be nonzero (k = 0 is not a wavetrain)")
        return None
    if N < 2:
        bad("wave.k", f"denominator must be >= 2, got {N}")
        return None
    return p, N


def _merge_section(name, raw, bad, *, numeric=()):
    merged = dict(DEFAULTS[name])
    if raw is None:
        return merged
    if not isinstance(raw, dict):
        bad(name, f"expected an object, got {type(raw).__name__}")
        return merged
    for key, val in raw.items():
        if key not in merged:
            bad(f"{name}.{key}", f"unknown key; known: {sorted(merged)}")
            continue
        merged[key] = val
    for key in numeric:
        val = merged[key]
        if not isinstance(val, (int, float)) or isinstance(val, bool) or val <= 0:
            bad(f"{name}.{key}", f"must be a positive number, got {val!r}")
    return merged


def config_from_dict(raw: dict) -> RunConfig:
    violations: list = []

    def bad(path, msg):
        violations.append((path, msg))

    if not isinstance(raw, dict):
        raise SchemaError([("<root>", "top level must be an object")])
    for key in raw:
        if key not in _SECTIONS:
            bad(key, f"unknown section; known: {sorted(_SECTIONS)}")

    system = raw.get("system")
    name, params = "", {}
    if not isinstance(system, dict) or "name" not in system:
        bad("system", "required object with a 'name' field")
    else:
        name = system["name"]
        if name not in MODEL_DEFAULTS:
            bad("system.name", f"unknown system {name!r}; available: {sorted(MODEL_DEFAULTS)}")
        else:
            params = dict(MODEL_DEFAULTS[name])
            for key, val in system.get("params", {}).items():
                if key not in params:
                    bad(f"system.params.{key}", f"unknown parameter; known: {sorted(params)}")
                elif not isinstance(val, (int, float)) or isinstance(val, bool):
                    bad(f"system.params.{key}", f"must be a number, got {val!r}")
                else:
                    params[key] = float(val)
        for key in system or {}:
            if key not in ("name", "params"):
                bad(f"system.{key}", "unknown key; known: ['name', 'params']")

    wave = raw.get("wave")
    pN = None
    wave_merged = dict(DEFAULTS["wave"])
    if not isinstance(wave, dict) or "k" not in wave:
        bad("wave", "required object with a 'k' field")
    else:
        pN = _parse_k(wave["k"], bad)
        for key, val in wave.items():
            if key == "k":
                continue
            if key not in wave_merged:
                bad(f"wave.{key}", f"unknown key; known: {sorted(wave_merged) + ['k']}")
            else:
                wave_merged[key] = val
        modes = wave_merged["modes"]
        if not isinstance(modes, int) or isinstance(modes, bool) or modes < 4:
            bad("wave.modes", f"must be an integer >= 4, got {modes!r}")
        if wave_merged["mass"] is not None:
            m = wave_merged["mass"]
            if not isinstance(m, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in m
            ):
                bad("wave.mass", f"must be a list of numbers, got {m!r}")
        for key in ("energy", "amplitude"):
            v = wave_merged[key]
            if v is not None and (not isinstance(v, (int, float)) or isinstance(v, bool)):
                bad(f"wave.{key}", f"must be a number, got {v!r}")

    tolerances = _merge_section(
        "tolerances", raw.get("tolerances"), bad, numeric=("profile", "track", "ring")
    )
    xi_grid = _merge_section("xi_grid", raw.get("xi_grid"), bad, numeric=("max",))
    pts = xi_grid["points"]
    if not isinstance(pts, int) or isinstance(pts, bool) or pts < 2:
        bad("xi_grid.points", f"must be an integer >= 2, got {pts!r}")

    val_toggles = _merge_section("validate", raw.get("validate"), bad)
    for key, v in val_toggles.items():
        if not isinstance(v, bool):
            bad(f"validate.{key}", f"must be a boolean, got {v!r}")

    sim = _merge_section("simulate", raw.get("simulate"), bad, numeric=("sigma",))
    for key in ("ring_periods", "n_periods"):
        v = sim[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            bad(f"simulate.{key}", f"must be an integer >= 1, got {v!r}")
    for key in ("energy_audit", "packet"):
        if not isinstance(sim[key], bool):
            bad(f"simulate.{key}", f"must be a boolean, got {sim[key]!r}")

    continuation = raw.get("continuation")
    if continuation is not None:
        if not isinstance(continuation, dict):
            bad("continuation", f"expected an object, got {type(continuation).__name__}")
            continuation = None
        else:
            parameter = continuation.get("parameter")
            values = continuation.get("values")
            for key in continuation:
                if key not in ("parameter", "values"):
                    bad(f"continuation.{key}", "unknown key; known: ['parameter', 'values']")
            if not isinstance(parameter, str):
                bad("continuation.parameter", f"must be a string, got {parameter!r}")
            if not isinstance(values, list) or not values:
                bad("continuation.values", "must be a non-empty list")

    out = raw.get("out")
    if not isinstance(out, str) or not out:
        bad("out", "required non-empty string (run directory)")

    seed = raw.get("seed", DEFAULTS["seed"])
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        bad("seed", f"must be a non-negative integer, got {seed!r}")
    jobs = raw.get("jobs", DEFAULTS["jobs"])
    if not isinstance(jobs, int) or isinstance(jobs, bool) or jobs < 1:
        bad("jobs", f"must be an integer >= 1, got {jobs!r}")

    if violations:
        raise SchemaError(violations)
    assert pN is not None
    return RunConfig(
        system=name,
        params=params,
        p=pN[0],
        N=pN[1],
        modes=wave_merged["modes"],
        out=out,
        mass=wave_merged["mass"],
        energy=wave_merged["energy"],
        amplitude=wave_merged["amplitude"],
        tolerances=tolerances,
        xi_grid=xi_grid,
        validate=val_toggles,
        simulate=sim,
        continuation=continuation,
        seed=seed,
        jobs=jobs,
    )


def parse_config(path: str) -> RunConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError([("<file>", f"not valid JSON: {exc}")]) from exc
    return config_from_dict(raw)
