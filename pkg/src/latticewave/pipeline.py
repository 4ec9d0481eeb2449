"""Run orchestration: stages, artifacts, manifest, report.

A run executes a subset of the stage graph

    profile -> spectrum ---+
            -> whitham ----+--> validate
            -> simulate

inside one output directory.  Requesting a stage pulls in its
dependencies automatically; the manifest notes which stages were
auto-enabled.  Each stage writes its artifacts through the atomic
writers in :mod:`waveio`, the coordinator being the only process that
touches the filesystem; worker fan-out stays inside numerical calls
(monodromy grids).  The pipeline halts at the first stage failure,
records it, and still writes the manifest.

Timestamps exist only in the manifest.  Stage artifacts and the report
are pure functions of the config, so re-running a stage or the report
reproduces its files byte for byte.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import ringsim, waveio
from .config import RunConfig
from .errors import LatticeWaveError, MissingArtifacts
from .linearize import wave_derivatives
from .models import chain_seed, lambda_omega_seed, make_system, mixed_seed
from .branches import track_branches
from .profiles import continue_family, solve_wave
from .validate import duality_audit, jordan_structure, validate_rd, validate_system
from .whitham import (
    averaged_fluxes,
    rd_diffusion,
    rd_group_velocity,
    whitham_jacobian,
)
from . import __version__

__all__ = ["RunManifest", "run_pipeline", "emit_report", "STAGES"]

STAGES = ["profile", "continue", "spectrum", "whitham", "validate", "simulate"]

_DEPS = {
    "profile": [],
    "continue": ["profile"],
    "spectrum": ["profile"],
    "whitham": ["profile"],
    "validate": ["profile", "spectrum", "whitham"],
    "simulate": ["profile"],
}


@dataclass
class RunManifest:
    """Record of one pipeline run; written atomically at run end."""

    config: dict
    config_sha256: str
    version: str
    started: str
    finished: str = ""
    stages: dict = field(default_factory=dict)
    auto_enabled: list = field(default_factory=list)
    files: list = field(default_factory=list)
    validation_passed: Optional[bool] = None

    def to_dict(self) -> dict:
        order = {name: i for i, name in enumerate(STAGES)}
        stages = dict(
            sorted(self.stages.items(), key=lambda kv: order.get(kv[0], 99))
        )
        return {
            "config": self.config,
            "config_sha256": self.config_sha256,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "stages": stages,
            "auto_enabled": self.auto_enabled,
            "files": self.files,
            "validation_passed": self.validation_passed,
        }


def closure(requested) -> list:
    """Requested stages plus dependencies, in canonical order."""
    want = set()

    def pull(name):
        if name in want:
            return
        for dep in _DEPS[name]:
            pull(dep)
        want.add(name)

    for name in requested:
        if name not in _DEPS:
            raise ValueError(f"unknown stage {name!r}; known: {STAGES}")
        pull(name)
    return [s for s in STAGES if s in want]


def _config_hash(echo: dict) -> str:
    blob = json.dumps(waveio.jsonable(echo), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _build_system(cfg: RunConfig):
    return make_system(cfg.system, **cfg.params)


def _seed_wave(cfg: RunConfig, sys):
    if sys.kind == "rd":
        seed, om0 = lambda_omega_seed(sys, cfg.p, cfg.N, cfg.modes)
        return seed, om0, {}
    if sys.kind == "mixed":
        if cfg.amplitude is None:
            raise ValueError(f"{cfg.system} seed needs wave.amplitude")
        seed, om0, _ = mixed_seed(sys, cfg.p, cfg.N, cfg.modes, cfg.amplitude)
        return seed, om0, {"amplitude": cfg.amplitude}
    if cfg.mass is None or cfg.amplitude is None:
        raise ValueError(f"{cfg.system} seed needs wave.mass and wave.amplitude")
    seed, om0, mass = chain_seed(
        sys, cfg.p, cfg.N, cfg.modes, cfg.mass[0], cfg.amplitude
    )
    return seed, om0, {"mass": mass, "amplitude": cfg.amplitude}


class _Run:
    """Mutable state threaded through the stages of one pipeline run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.sys = _build_system(cfg)
        self.wave = None
        self.wd = None
        self.jac = None
        self.files: list = []

    def path(self, name: str) -> str:
        return os.path.join(self.cfg.out, name)

    def emit_json(self, name: str, obj) -> None:
        waveio.write_json(self.path(name), obj)
        self.files.append(name)

    def emit_csv(self, name: str, header, rows) -> None:
        waveio.write_csv(self.path(name), header, rows)
        self.files.append(name)

    def derivatives(self):
        if self.wd is None:
            self.wd = wave_derivatives(self.sys, self.wave)
        return self.wd

    def jacobian(self):
        if self.jac is None:
            self.jac = whitham_jacobian(self.sys, self.wave, self.derivatives())
        return self.jac


def _stage_profile(run: _Run):
    cfg = run.cfg
    seed, om0, pins = _seed_wave(cfg, run.sys)
    run.wave = solve_wave(
        run.sys,
        (cfg.p, cfg.N),
        seed=seed,
        omega_seed=om0,
        tol=cfg.tolerances["profile"],
        **pins,
    )
    doc = waveio.wave_to_dict(run.wave)
    doc["system"] = {"name": cfg.system, "params": cfg.params}
    run.emit_json("profile.json", doc)


def _stage_continue(run: _Run):
    cfg = run.cfg
    if cfg.continuation is None:
        raise ValueError("continue stage requested but config has no 'continuation'")
    parameter = cfg.continuation["parameter"]
    values = [
        tuple(v) if isinstance(v, list) else v for v in cfg.continuation["values"]
    ]
    family = continue_family(
        run.sys, run.wave, parameter, values, tol=cfg.tolerances["profile"]
    )
    rows = []
    for w in family:
        rows.append(
            (
                w.k,
                w.omega,
                w.residual_sup,
                w.energy if w.energy is not None else float("nan"),
            )
        )
    run.emit_csv("family.csv", ("k", "omega", "residual_sup", "energy"), rows)
    run.emit_json(
        "family.json",
        {
            "parameter": parameter,
            "values": [str(v) for v in cfg.continuation["values"]],
            "omegas": [w.omega for w in family],
        },
    )


def _stage_spectrum(run: _Run):
    cfg = run.cfg
    xi_max, points = cfg.xi_grid["max"], cfg.xi_grid["points"]
    mags = [xi_max * (m + 1) / points for m in range(points)]
    xis = [s * m for m in mags for s in (1, -1)]
    track = track_branches(
        run.sys,
        run.wave,
        xis,
        tol=cfg.tolerances["track"],
        wd=run.derivatives(),
        jobs=cfg.jobs,
    )
    rows = []
    for br in track.branches:
        vels = br.velocities(run.wave.omega)
        for xi, lam, v in zip(br.xis, br.multipliers, vels):
            rows.append(
                (br.label, br.side, xi, lam.real, lam.imag, abs(lam), v.real, v.imag)
            )
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    run.emit_csv(
        "branches.csv",
        ("label", "side", "xi", "re_multiplier", "im_multiplier",
         "abs_multiplier", "re_velocity", "im_velocity"),
        rows,
    )
    doc = {
        "n_cluster": track.n_cluster,
        "liouville_max": track.liouville_max,
        "refined_points": track.refined_points,
    }
    if cfg.validate["jordan"]:
        js = jordan_structure(run.sys, run.wave, run.derivatives())
        doc["jordan"] = {
            "multiplicity": js.multiplicity,
            "expected": js.expected,
            "eps0": js.eps0,
            "relation_residuals": js.relation_residuals,
            "block_rank": js.block_rank,
            "kS_residual": js.kS_residual,
            "cluster": waveio.jsonable(js.cluster),
        }
    run.emit_json("spectrum.json", doc)


def _stage_whitham(run: _Run):
    cfg = run.cfg
    jac = run.jacobian()
    variants = jac if isinstance(jac, list) else [jac]
    doc = {
        "parameters": variants[0].params,
        "fluxes": averaged_fluxes(run.sys, run.wave),
        "variants": [
            {
                "sign_variant": J.sign_variant,
                "G": waveio.jsonable(np.asarray(J.G, dtype=float)),
                "speeds": waveio.jsonable(J.speeds),
                "verdict": J.verdict,
            }
            for J in variants
        ],
    }
    if run.sys.kind == "rd":
        doc["group_velocity"] = rd_group_velocity(run.sys, run.wave, run.derivatives())
        doc["diffusion"] = rd_diffusion(run.sys, run.wave, run.derivatives())
    run.emit_json("whitham.json", doc)


def _report_to_dict(report) -> dict:
    return {
        "system": report.system,
        "passed": report.passed,
        "checks": [
            {
                "name": c.name,
                "value": c.value,
                "tol": c.tol,
                "passed": c.passed,
                "detail": c.detail,
            }
            for c in report.checks
        ],
        "data": waveio.jsonable(report.data),
    }


def _stage_validate(run: _Run):
    cfg = run.cfg
    reports = []
    if cfg.validate["modulation"]:
        if run.sys.kind == "rd":
            rep = validate_rd(
                run.sys, run.wave,
                wd=run.derivatives(), tol_track=cfg.tolerances["track"],
            )
        else:
            rep = validate_system(
                run.sys, run.wave, run.jacobian(),
                wd=run.derivatives(), tol_track=cfg.tolerances["track"],
            )
        reports.append(_report_to_dict(rep))
    if cfg.validate["duality"]:
        rng = np.random.default_rng(cfg.seed)
        aud = duality_audit(run.sys, run.wave, run.derivatives(), rng=rng)
        tols = {
            "i_convert": 1e-9,
            "ii_first_moment": 1e-9,
            "iii_pairing_flux": 1e-7,
            "iv_adjoint_constant": 1e-9,
        }
        checks = [
            {
                "name": name,
                "value": val,
                "tol": tols[name],
                "passed": bool(val <= tols[name]),
                "detail": "",
            }
            for name, val in aud.items()
        ]
        reports.append(
            {
                "system": run.sys.name,
                "passed": all(c["passed"] for c in checks),
                "checks": checks,
                "data": {},
            }
        )
    passed = all(r["passed"] for r in reports) if reports else True
    run.emit_json("validation.json", {"passed": passed, "reports": reports})
    return passed


def _stage_simulate(run: _Run):
    cfg = run.cfg
    sim = cfg.simulate
    tol = cfg.tolerances["ring"]
    doc = {}

    drifts = ringsim.wave_recurrence(
        run.sys, run.wave, sim["ring_periods"], sim["n_periods"], tol
    )
    doc["recurrence_drifts"] = waveio.jsonable(drifts)

    need_dense = run.sys.kind == "hamiltonian" and sim["energy_audit"]
    U0 = ringsim.ring_from_wave(run.wave, sim["ring_periods"])
    T = 1.0 / abs(run.wave.omega)
    rec = ringsim.integrate_ring(
        run.sys, U0, sim["n_periods"] * T, tol, dense=need_dense
    )
    doc["integrator"] = rec.stats
    for name, series in rec.conserved.items():
        doc.setdefault("conserved_drift", {})[name] = float(
            np.max(np.abs(series - series[0]))
        )
        run.emit_csv(
            f"conserved_{name}.csv",
            ("t", name),
            list(zip(rec.times, series)),
        )
    if need_dense:
        aud = ringsim.energy_audit(run.sys, rec)
        doc["energy_audit"] = {
            "total_drift": aud.total_drift,
            "local_max": aud.local_max,
            "h": aud.h,
        }
    stride = max(1, len(rec.times) // 9)
    rows = []
    for m in range(0, len(rec.times), stride):
        t = rec.times[m]
        for j in range(rec.L):
            rows.append((t, j) + tuple(rec.states[m, j]))
    run.emit_csv(
        "trajectory.csv",
        ("t", "site") + tuple(f"u{i}" for i in range(rec.d)),
        rows,
    )

    if run.sys.kind == "rd" and sim["packet"]:
        pm = ringsim.wave_packet_velocity(run.sys, run.wave, sigma=sim["sigma"])
        doc["packet"] = {
            "speed_sites_per_time": pm.speed,
            "speed_waves_per_time": pm.speed_per_wavelength,
            "group_velocity": pm.group_velocity,
            "sign_vs_minus_group": pm.sign_vs_minus_group,
            "fit_residual": pm.fit_residual,
        }
        run.emit_csv(
            "centroid.csv",
            ("t", "position", "concentration"),
            list(zip(pm.times, pm.positions, pm.concentration)),
        )
    run.emit_json("simulate.json", doc)


_STAGE_FN = {
    "profile": _stage_profile,
    "continue": _stage_continue,
    "spectrum": _stage_spectrum,
    "whitham": _stage_whitham,
    "validate": _stage_validate,
    "simulate": _stage_simulate,
}


def run_pipeline(cfg: RunConfig, stages=None) -> RunManifest:
    """Execute the requested stages (default: all except ``continue``).

    Artifacts land in ``cfg.out``; the manifest is written last, references
    only files that exist, and records per-stage status.  The first stage
    failure stops execution; later requested stages are marked not-run.
    """
    requested = list(stages) if stages is not None else [
        s for s in STAGES if s != "continue"
    ]
    plan = closure(requested)
    auto = [s for s in plan if s not in requested]
    os.makedirs(cfg.out, exist_ok=True)

    manifest = RunManifest(
        config=cfg.echo(),
        config_sha256=_config_hash(cfg.echo()),
        version=__version__,
        started=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        auto_enabled=auto,
    )
    # same config re-run into the same directory accumulates stages; a
    # different config invalidates prior artifacts and starts clean
    prior_path = os.path.join(cfg.out, "manifest.json")
    if os.path.exists(prior_path):
        try:
            prior = waveio.read_json(prior_path)
        except (OSError, json.JSONDecodeError):
            prior = None
        if prior and prior.get("config_sha256") == manifest.config_sha256:
            manifest.stages.update(
                {k: v for k, v in prior.get("stages", {}).items() if v == "ok"}
            )
            manifest.files = list(prior.get("files", []))
            manifest.validation_passed = prior.get("validation_passed")
    run = _Run(cfg)
    run.files.extend(manifest.files)
    halted = False
    for name in plan:
        if halted:
            manifest.stages[name] = "not-run"
            continue
        try:
            result = _STAGE_FN[name](run)
        except (LatticeWaveError, ValueError, FloatingPointError) as exc:
            manifest.stages[name] = f"failed: {type(exc).__name__}: {exc}"
            halted = True
            continue
        manifest.stages[name] = "ok"
        if name == "validate":
            manifest.validation_passed = bool(result)

    manifest.files = sorted(
        set(f for f in run.files if os.path.exists(run.path(f)))
    )
    manifest.finished = _dt.datetime.now(_dt.timezone.utc).isoformat()
    waveio.write_json(run.path("manifest.json"), manifest.to_dict())
    return manifest


# ---------------------------------------------------------------------------
# report


def _fmt(x, width=13) -> str:
    if isinstance(x, float):
        return f"{x: .6e}".rjust(width)
    return str(x).rjust(width)


def emit_report(run_dir: str) -> dict:
    """Summarize a run directory into report.txt and report.json.

    Pure function of the artifacts on disk: re-running emits byte-identical
    files.  Partial runs are summarized with their missing stages named.
    """
    mpath = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(mpath):
        raise MissingArtifacts(f"no manifest.json under {run_dir!r}")
    manifest = waveio.read_json(mpath)

    def load(name):
        path = os.path.join(run_dir, name)
        return waveio.read_json(path) if os.path.exists(path) else None

    profile = load("profile.json")
    spectrum = load("spectrum.json")
    whitham = load("whitham.json")
    validation = load("validation.json")
    simulate = load("simulate.json")

    lines = []
    push = lines.append
    push("lattice wavetrain run report")
    push(f"config sha256: {manifest['config_sha256']}")
    push(f"artifact version: {manifest['version']}")
    push("")
    push("stages:")
    for name, status in manifest["stages"].items():
        push(f"  {name:<10} {status}")
    missing = [s for s, st in manifest["stages"].items() if st != "ok"]
    if missing:
        push(f"  (incomplete: {', '.join(missing)})")
    push("")

    summary = {"stages": manifest["stages"], "config_sha256": manifest["config_sha256"]}
    if profile is not None:
        push("wave:")
        push(f"  k = {profile['p']}/{profile['N']}   omega = {profile['omega']!r}")
        push(f"  profile residual sup = {profile['residual_sup']:.3e}")
        summary["wave"] = {
            "k": [profile["p"], profile["N"]],
            "omega": profile["omega"],
            "residual_sup": profile["residual_sup"],
        }
        push("")
    if whitham is not None:
        push("modulation system:")
        push(f"  parameters: {', '.join(whitham['parameters'])}")
        for var in whitham["variants"]:
            tag = (
                ""
                if var["sign_variant"] is None
                else f" [sign {var['sign_variant']:+d}]"
            )
            sp = var["speeds"]
            spd = [complex(re, im) for re, im in zip(sp["re"], sp["im"])]
            push(
                f"  speeds{tag}: "
                + ", ".join(f"{s.real:+.6f}{s.imag:+.6f}j" for s in spd)
                + f"   ({var['verdict']})"
            )
        if "group_velocity" in whitham:
            push(f"  group velocity = {whitham['group_velocity']!r}")
            push(f"  effective diffusion = {whitham['diffusion']!r}")
        summary["whitham"] = whitham
        push("")
    if spectrum is not None and "jordan" in spectrum:
        js = spectrum["jordan"]
        push("origin structure:")
        push(
            f"  multiplicity {js['multiplicity']} (expected {js['expected']}),"
            f" block rank {js['block_rank']}, eps0 {js['eps0']:.3e}"
        )
        summary["jordan"] = js
        push("")
    if validation is not None:
        push("validation checks:")
        push(f"  {'check':<32}{'value':>13}{'tol':>13}  verdict")
        for rep in validation["reports"]:
            for c in rep["checks"]:
                verdict = "pass" if c["passed"] else "FAIL"
                push(
                    f"  {c['name']:<32}{_fmt(c['value'])}{_fmt(c['tol'])}  {verdict}"
                )
            data = rep.get("data", {})
            if "sign_variant" in data and data["sign_variant"] is not None:
                push(f"  sign adjudication: variant {data['sign_variant']:+d}")
        push(f"  overall: {'pass' if validation['passed'] else 'FAIL'}")
        summary["validation"] = validation
        push("")
    if whitham is not None and validation is not None and "group_velocity" in whitham:
        for rep in validation["reports"]:
            fit = rep.get("data", {}).get("a_fit")
            if fit is None:
                continue
            a = whitham["group_velocity"]
            push("branch fit vs pairing:")
            push(f"  {'quantity':<18}{'fit':>15}{'pairing':>15}{'abs error':>13}")
            push(
                f"  {'group velocity':<18}{fit: .8e}{a: .8e}"
                f"{abs(fit - a):>13.3e}"
            )
            dfit = rep["data"].get("d_fit")
            if dfit is not None and "diffusion" in whitham:
                d = whitham["diffusion"]
                push(
                    f"  {'diffusion':<18}{dfit: .8e}{d: .8e}"
                    f"{abs(dfit - d):>13.3e}"
                )
            push("")
    if simulate is not None:
        push("ring dynamics:")
        drifts = simulate["recurrence_drifts"]
        push(f"  recurrence drift (per period): {', '.join(f'{d:.3e}' for d in drifts)}")
        for name, drift in simulate.get("conserved_drift", {}).items():
            push(f"  conserved {name} drift: {drift:.3e}")
        if "energy_audit" in simulate:
            ea = simulate["energy_audit"]
            push(
                f"  energy audit: total drift {ea['total_drift']:.3e},"
                f" local residual {ea['local_max']:.3e}"
            )
        if "packet" in simulate:
            pk = simulate["packet"]
            push(
                f"  packet speed: {pk['speed_sites_per_time']:+.6f} sites/time"
                f" = {pk['speed_waves_per_time']:+.6f} wavelengths/time"
            )
            push(
                f"  group velocity {pk['group_velocity']:+.6f};"
                f" sign vs -group: {pk['sign_vs_minus_group']:+d}"
            )
        summary["simulate"] = simulate
        push("")

    text = "\n".join(lines) + "\n"
    waveio._atomic_write(os.path.join(run_dir, "report.txt"), text)
    waveio.write_json(os.path.join(run_dir, "report.json"), summary)
    return summary
