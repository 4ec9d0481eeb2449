"""Shared solved waves and derived objects.

Session scope: the Newton solves and the expensive validation sweeps run
once and are shared between the unit tests and the acceptance suite.
The configurations here are the shipped reference setups; changing one
invalidates frozen oracle decimals in the tests, so treat them as fixed.
"""

from __future__ import annotations

import numpy as np
import pytest

from latticewave.linearize import wave_derivatives
from latticewave.models import chain_seed, lambda_omega_seed, make_system, mixed_seed
from latticewave.profiles import solve_wave
from latticewave.validate import validate_rd, validate_system
from latticewave.whitham import whitham_jacobian


@pytest.fixture(scope="session")
def sys_rd():
    return make_system("lambda_omega", mu=0.5, c0=1.0, c1=-1.0)


@pytest.fixture(scope="session")
def sys_rd_quarter():
    # k = 1/4 needs smaller mu to keep r^2 = 1 - 2 mu > 0 comfortable
    return make_system("lambda_omega", mu=0.25, c0=1.0, c1=-1.0)


@pytest.fixture(scope="session")
def sys_mx():
    return make_system("viscous_balance", eta=1.0, nu=0.5)


@pytest.fixture(scope="session")
def sys_qc():
    return make_system("quartic_chain", eta=0.8, a2=0.5, a4=0.25)


def _rd_wave(sys, p, N, K=24):
    seed, om0 = lambda_omega_seed(sys, p, N, K)
    return solve_wave(sys, (p, N), seed=seed, omega_seed=om0)


@pytest.fixture(scope="session")
def wave_rd16(sys_rd):
    return _rd_wave(sys_rd, 1, 6)


@pytest.fixture(scope="session")
def wave_rd18(sys_rd):
    return _rd_wave(sys_rd, 1, 8)


@pytest.fixture(scope="session")
def wave_rd14(sys_rd_quarter):
    return _rd_wave(sys_rd_quarter, 1, 4)


@pytest.fixture(scope="session")
def wave_mx(sys_mx):
    seed, om0, _ = mixed_seed(sys_mx, 1, 6, 32, 0.2)
    return solve_wave(sys_mx, (1, 6), seed=seed, omega_seed=om0, amplitude=0.2)


@pytest.fixture(scope="session")
def wave_qc(sys_qc):
    seed, om0, mass = chain_seed(sys_qc, 1, 5, 32, 0.4, 0.35)
    return solve_wave(
        sys_qc, (1, 5), seed=seed, omega_seed=om0, mass=mass, amplitude=0.35
    )


@pytest.fixture(scope="session")
def wd_rd16(sys_rd, wave_rd16):
    return wave_derivatives(sys_rd, wave_rd16)


@pytest.fixture(scope="session")
def wd_mx(sys_mx, wave_mx):
    return wave_derivatives(sys_mx, wave_mx)


@pytest.fixture(scope="session")
def wd_qc(sys_qc, wave_qc):
    return wave_derivatives(sys_qc, wave_qc)


@pytest.fixture(scope="session")
def jac_mx(sys_mx, wave_mx, wd_mx):
    return whitham_jacobian(sys_mx, wave_mx, wd_mx)


@pytest.fixture(scope="session")
def jac_qc(sys_qc, wave_qc, wd_qc):
    return whitham_jacobian(sys_qc, wave_qc, wd_qc)


# expensive validation sweeps, shared with the acceptance suite


@pytest.fixture(scope="session")
def report_rd16(sys_rd, wave_rd16, wd_rd16):
    return validate_rd(sys_rd, wave_rd16, wd=wd_rd16)


@pytest.fixture(scope="session")
def report_rd18(sys_rd, wave_rd18):
    return validate_rd(sys_rd, wave_rd18)


@pytest.fixture(scope="session")
def report_rd14(sys_rd_quarter, wave_rd14):
    return validate_rd(sys_rd_quarter, wave_rd14)


@pytest.fixture(scope="session")
def report_mx(sys_mx, wave_mx, jac_mx, wd_mx):
    return validate_system(sys_mx, wave_mx, jac_mx, wd=wd_mx)


@pytest.fixture(scope="session")
def report_qc(sys_qc, wave_qc, jac_qc, wd_qc):
    return validate_system(sys_qc, wave_qc, jac_qc, wd=wd_qc)


def check_value(report, name: str):
    for c in report.checks:
        if c.name == name:
            return c
    raise KeyError(f"no check named {name!r} in {[c.name for c in report.checks]}")
