"""Shared fixtures. The heavy trajectory ensembles are session-scoped and
reused by the module tests and the acceptance suite alike."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

import kposim as kp

# the two parameter sets used throughout: chi/2pi = kappa/2pi = 3 MHz with
# beta = chi (set a) and beta = chi/2 (set b); measured quadrature locked at
# delta_theta = pi/2 from the cat axis
SET_A_MHZ = (3.0, 3.0, 3.0)
SET_B_MHZ = (3.0, 1.5, 3.0)

ENSEMBLE_SEED = 20260808
MINI_SEED = 777001

# Fock truncation for trajectory work: large enough that the coherent pair
# is represented to ~1e-7, small enough that the explicit update is stable
# with an affordable substep (see stable_em_substep)
TRAJ_DIM = 14
ME_DIM = 30


def params_with_quadrature(chi_mhz, beta_mhz, kappa_mhz, delta_theta=math.pi / 2,
                           **kwargs) -> kp.KpoParams:
    base = kp.KpoParams.from_mhz(chi_mhz, beta_mhz, kappa_mhz, **kwargs)
    alpha = kp.alpha_stationary(base)
    return dataclasses.replace(base, theta_lo=float(np.angle(alpha)) - delta_theta)


@pytest.fixture(scope="session")
def set_a() -> kp.KpoParams:
    return params_with_quadrature(*SET_A_MHZ)


@pytest.fixture(scope="session")
def set_b() -> kp.KpoParams:
    return params_with_quadrature(*SET_B_MHZ)


@pytest.fixture(scope="session")
def ensemble_a(set_a):
    """10 x 200 us of monitored evolution at set (a): >= 2000 us of record."""
    space = kp.FockSpace(TRAJ_DIM)
    rho0 = kp.stationary_mixture(set_a, space)
    return kp.simulate_ensemble(set_a, rho0, 200.0, 1e-3,
                                kp.NoiseStream(ENSEMBLE_SEED), 10)


@pytest.fixture(scope="session")
def mini_ensemble_a(set_a):
    """4 x 50 us at a 1e-4 us detector bin, for the shortest averaging times."""
    space = kp.FockSpace(TRAJ_DIM)
    rho0 = kp.stationary_mixture(set_a, space)
    return kp.simulate_ensemble(set_a, rho0, 50.0, 1e-4,
                                kp.NoiseStream(MINI_SEED), 4)


@pytest.fixture(scope="session")
def me_traj_a(set_a):
    """Master-equation decay of <x> from |alpha><alpha| at set (a), dim 30."""
    space = kp.FockSpace(ME_DIM)
    alpha = kp.alpha_stationary(set_a)
    rho0 = kp.dm_from_ket(kp.coherent_ket(space, alpha))
    dt = kp.stable_rk4_dt(set_a, ME_DIM)
    return kp.evolve_me(set_a, rho0, 12.0, dt)


@pytest.fixture(scope="session")
def me_traj_b(set_b):
    space = kp.FockSpace(ME_DIM)
    alpha = kp.alpha_stationary(set_b)
    rho0 = kp.dm_from_ket(kp.coherent_ket(space, alpha))
    dt = kp.stable_rk4_dt(set_b, ME_DIM)
    return kp.evolve_me(set_b, rho0, 2.5, dt)
