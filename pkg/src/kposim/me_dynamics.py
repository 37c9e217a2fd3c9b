"""Deterministic Lindblad evolution of the pumped Kerr resonator.

Provides the fixed-step RK4 integrator for the unmonitored master equation,
the <x>(t) decay trajectories it produces, and the exponential fit that
extracts the coherent-pair jump rate from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (FitWindowError, NonPositiveRate, NonPositiveSignal,
                     StepSizeError)
from .hilbert import DensityMatrix, FockSpace, hermitize_and_renormalize

TWO_PI = 2.0 * math.pi

# fraction of the fastest physical timescale an integration step may take
MAX_STEP_FRACTION = 0.05


@dataclass(frozen=True)
class KpoParams:
    """Physical parameters of the monitored resonator.

    All frequencies are angular, in rad/us. chi is the Kerr anharmonicity,
    beta the two-photon pump amplitude, kappa the decay rate into the
    transmission line, delta the detuning (omega_s - chi - omega_p/2),
    theta_lo the local-oscillator phase, eta the detection efficiency and
    epsilon the detector gain entering the record as 1/epsilon.
    """

    chi: float
    beta: float
    kappa: float
    delta: float = 0.0
    theta_lo: float = 0.0
    eta: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.chi <= 0:
            raise ValueError("chi must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def from_mhz(cls, chi_mhz: float, beta_mhz: float, kappa_mhz: float,
                 delta_mhz: float = 0.0, **kwargs) -> "KpoParams":
        """Build from f/2pi values in MHz (the usual experimental quoting)."""
        return cls(chi=TWO_PI * chi_mhz, beta=TWO_PI * beta_mhz,
                   kappa=TWO_PI * kappa_mhz, delta=TWO_PI * delta_mhz, **kwargs)

    def min_timescale(self) -> float:
        rates = [r for r in (self.chi, self.beta, self.kappa) if r > 0]
        return 1.0 / max(rates)

    def max_step(self) -> float:
        return MAX_STEP_FRACTION * self.min_timescale()


@dataclass(frozen=True)
class _OperatorSet:
    """Dense operators for one (params, dim) pair; cached because trajectory
    ensembles rebuild them millions of times otherwise."""

    a: np.ndarray
    a_dag: np.ndarray
    number: np.ndarray
    hamiltonian: np.ndarray
    drift: np.ndarray          # -iH - (kappa/2) a^dag a
    signal: np.ndarray         # homodyne signal operator A
    signal_t: np.ndarray       # A transposed, for trace via elementwise product
    backaction: np.ndarray     # -i sqrt(kappa) e^{-i theta} a
    x: np.ndarray


@lru_cache(maxsize=64)
def operator_set(params: KpoParams, dim: int) -> _OperatorSet:
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = math.sqrt(n)
    ad = a.conj().T
    num = ad @ a
    h = params.delta * num - 0.5 * params.chi * (ad @ ad @ a @ a) \
        + params.beta * (ad @ ad + a @ a)
    drift = -1j * h - 0.5 * params.kappa * num
    sk = math.sqrt(params.kappa)
    signal = 1j * sk * (np.exp(1j * params.theta_lo) * ad
                        - np.exp(-1j * params.theta_lo) * a)
    back = -1j * sk * np.exp(-1j * params.theta_lo) * a
    x = 0.5 * (a + ad)
    return _OperatorSet(a=a, a_dag=ad, number=num, hamiltonian=h, drift=drift,
                        signal=signal, signal_t=np.ascontiguousarray(signal.T),
                        backaction=back, x=x)


def _lindblad_rhs_raw(ops: _OperatorSet, kappa: float, rho: np.ndarray) -> np.ndarray:
    k = ops.drift
    return k @ rho + rho @ k.conj().T + kappa * (ops.a @ rho @ ops.a_dag)


def lindblad_rhs(params: KpoParams, rho: DensityMatrix) -> np.ndarray:
    """Right-hand side of the master equation:
    -i[delta*n - (chi/2) a^2dag a^2 + beta(a^2dag + a^2), rho]
    + kappa (a rho a^dag - {a^dag a, rho}/2). Traceless by construction."""
    ops = operator_set(params, rho.space.dim)
    return _lindblad_rhs_raw(ops, params.kappa, rho.entries)


@dataclass
class MeTrajectory:
    """<x>(t) along a master-equation solution, with optional state snapshots."""

    params: KpoParams
    dt: float
    times: np.ndarray
    mean_x: np.ndarray
    rho_final: DensityMatrix | None = None
    snapshot_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    snapshots: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.times) != len(self.mean_x):
            raise ValueError("times and mean_x lengths differ")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def stable_rk4_dt(params: KpoParams, dim: int) -> float:
    """Step that keeps RK4 inside its stability region for the truncated
    generator. The binding frequency is the Kerr ladder spread at the
    truncation edge, (chi/2)(dim-1)(dim-2), far above 1/chi itself."""
    omega = 0.5 * params.chi * (dim - 1) * (dim - 2) + abs(params.delta) * (dim - 1) \
        + 2.0 * params.beta * math.sqrt((dim - 1) * (dim - 2))
    gamma = 0.5 * params.kappa * (dim - 1)
    return min(params.max_step(), 2.0 / (omega + gamma))


def evolve_me(params: KpoParams, rho0: DensityMatrix, t_end: float, dt: float,
              snapshot_stride: int = 0) -> MeTrajectory:
    """Fixed-step RK4 integration of the master equation from rho0.

    The state is hermitized and trace-renormalized after every step and
    <x>(t) is recorded on the full step grid. snapshot_stride > 0 keeps a
    DensityMatrix copy every that many steps (plus the initial state).
    """
    if dt <= 0:
        raise StepSizeError("dt must be positive")
    if dt > params.max_step() * (1 + 1e-12):
        raise StepSizeError(
            f"dt={dt:g} exceeds {MAX_STEP_FRACTION} of the fastest timescale "
            f"({params.max_step():g} us)")
    dim = rho0.space.dim
    ops = operator_set(params, dim)
    kappa = params.kappa
    x_t = np.ascontiguousarray(ops.x.T)
    steps = int(round(t_end / dt))
    rho = rho0.entries.copy()
    times = np.arange(steps + 1) * dt
    mean_x = np.empty(steps + 1)
    mean_x[0] = np.sum(rho * x_t).real
    snap_idx = [0] if snapshot_stride > 0 else []
    snaps = [rho0] if snapshot_stride > 0 else []
    cleaned = rho0
    for i in range(steps):
        k1 = _lindblad_rhs_raw(ops, kappa, rho)
        k2 = _lindblad_rhs_raw(ops, kappa, rho + 0.5 * dt * k1)
        k3 = _lindblad_rhs_raw(ops, kappa, rho + 0.5 * dt * k2)
        k4 = _lindblad_rhs_raw(ops, kappa, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        cleaned = hermitize_and_renormalize(rho)
        rho = cleaned.entries.copy()
        mean_x[i + 1] = np.sum(rho * x_t).real
        if snapshot_stride > 0 and (i + 1) % snapshot_stride == 0:
            snap_idx.append(i + 1)
            snaps.append(cleaned)
    return MeTrajectory(params=params, dt=dt, times=times, mean_x=mean_x,
                        rho_final=cleaned, snapshot_times=times[snap_idx],
                        snapshots=snaps)


def steady_state(params: KpoParams, space: FockSpace, dt: float | None = None) -> DensityMatrix:
    """Quasi-steady state by long evolution (t = 20/kappa) from the vacuum.
    Reuses the integrator rather than solving the Liouvillian null space."""
    if params.kappa <= 0:
        raise NonPositiveRate("steady state by relaxation needs kappa > 0")
    if dt is None:
        dt = stable_rk4_dt(params, space.dim)
    vac = np.zeros((space.dim, space.dim), dtype=complex)
    vac[0, 0] = 1.0
    traj = evolve_me(params, DensityMatrix(space, vac), 20.0 / params.kappa, dt)
    return traj.rho_final


@dataclass(frozen=True)
class OmegaFit:
    """Jump rate extracted from an <x>(t) decay."""

    omega: float            # rad/us
    residual_rms: float     # rms of ln-residuals over the fit window
    n_samples: int
    window_end: float       # last time included (us)


def fit_omega(traj: MeTrajectory, re_alpha: float) -> OmegaFit:
    """Least-squares fit of ln(<x>(t)/Re[alpha]) = -2*Omega*t.

    The window runs from t=0 until <x> first drops below 0.1*Re[alpha]
    (late samples degrade the single-exponential model). The regression is
    through the origin, so the returned rate follows the exp(-2 Omega t)
    convention, not exp(-Omega t).
    """
    x = traj.mean_x
    thresh = 0.1 * re_alpha
    below = x < thresh
    end = len(x) if not below.any() else int(np.argmax(below))
    window = x[:end]
    if np.any(window <= 0.0):
        raise NonPositiveSignal("mean_x crosses zero inside the fit window")
    if end < 10:
        raise FitWindowError(f"only {end} samples above 0.1*Re[alpha]; need >= 10")
    t = traj.times[:end]
    y = np.log(window / re_alpha)
    omega = -float(np.dot(t, y) / (2.0 * np.dot(t, t)))
    resid = y + 2.0 * omega * t
    return OmegaFit(omega=omega, residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                    n_samples=end, window_end=float(t[-1]))


def expected_jump_interval(omega: float) -> float:
    """Mean time between coherent-state flips, 1/Omega."""
    if omega <= 0:
        raise NonPositiveRate(f"jump rate must be positive, got {omega}")
    return 1.0 / omega
