"""Stochastic master equation under homodyne detection.

The update is the explicit first-order (Euler-Maruyama) form of the monitored
evolution: deterministic Lindblad drift plus measurement backaction
proportional to the Wiener increment, hermitized and trace-renormalized after
every step. Long trajectories substep each detector bin internally, because
the truncated Kerr ladder makes the one-step map unstable for steps anywhere
near the detector bin width (see stable_em_substep).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .bounds_model import alpha_stationary
from .errors import DivergenceError, StepSizeError
from .hilbert import (DensityMatrix, FockSpace, coherent_ket,
                      coherent_pair_mixture, hermitize_and_renormalize)
from .me_dynamics import KpoParams, operator_set
from .noise import NoiseStream

__all__ = [
    "NoiseStream", "TrajectoryRecord", "sme_step", "measurement_increment",
    "simulate_trajectory", "simulate_ensemble", "stationary_mixture",
    "stable_em_substep", "em_substeps",
]

# safety divisor on the linear-stability step limit; calibrated so that the
# stochastic terms cannot push marginally stable truncation-edge modes over
EM_SAFETY = 2.5

_DEFAULT_CHUNK_BINS = 2000


@dataclass
class TrajectoryRecord:
    """One homodyne trajectory: fidelities to |+alpha>/|-alpha| and the
    detector record, all on the bin grid times[i] = i*tau."""

    params: KpoParams
    tau: float
    times: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    dN: np.ndarray
    seed: int
    stream_id: int
    alpha: complex
    substeps: int
    rho_final: DensityMatrix
    snapshot_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    rho_snapshots: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.f_plus) == len(self.f_minus) == len(self.dN) == n):
            raise ValueError("record vectors must share one length")


def stationary_mixture(params: KpoParams, space: FockSpace) -> DensityMatrix:
    """(|alpha><alpha| + |-alpha><-alpha|)/2 with the stationary amplitude;
    the state the unmonitored resonator relaxes to."""
    return coherent_pair_mixture(space, alpha_stationary(params))


def stable_em_substep(params: KpoParams, dim: int) -> float:
    """Largest integration substep the explicit update tolerates.

    The fastest coherence in the truncated space oscillates at roughly
    (chi/2)(dim-1)(dim-2) plus the pump spread, while its damping is only
    kappa(dim-1)/2, so |1 + tau*lambda| <= 1 forces
    tau <= 2*gamma/(gamma^2 + omega^2); EM_SAFETY covers noise feeding.
    """
    omega = 0.5 * params.chi * (dim - 1) * (dim - 2) + abs(params.delta) * (dim - 1) \
        + 2.0 * params.beta * math.sqrt((dim - 1) * (dim - 2))
    gamma = 0.5 * params.kappa * (dim - 1)
    if gamma > 0.0:
        return 2.0 * gamma / (gamma * gamma + omega * omega) / EM_SAFETY
    if omega > 0.0:
        # undamped case: no strict stability; resolve the fastest oscillation
        return 0.1 / omega
    return params.max_step()


def em_substeps(params: KpoParams, dim: int, tau: float) -> int:
    """Substeps per detector bin chosen from the stability limit."""
    return max(1, math.ceil(tau / stable_em_substep(params, dim)))


def _check_step(params: KpoParams, tau: float, dW: float | None = None) -> None:
    if tau <= 0:
        raise StepSizeError("tau must be positive")
    if tau > params.max_step() * (1 + 1e-12):
        raise StepSizeError(
            f"tau={tau:g} exceeds 0.05 of the fastest timescale "
            f"({params.max_step():g} us)")
    if dW is not None and not math.isfinite(dW):
        raise StepSizeError(f"Wiener increment must be finite, got {dW}")


def sme_step(params: KpoParams, rho: DensityMatrix, tau: float, dW: float) -> DensityMatrix:
    """One explicit update of the monitored evolution.

    rho' = rho + tau * lindblad_rhs(rho)
               + sqrt(eta) dW * (C rho + rho C^dag - Tr[rho A] rho),
    with C = -i sqrt(kappa) e^{-i theta_lo} a, followed by hermitization and
    trace renormalization. With eta = 1 this is the ideal-detection update;
    eta = 0 or dW = 0 reduces it to a deterministic Euler step.
    """
    _check_step(params, tau, dW)
    ops = operator_set(params, rho.space.dim)
    r = rho.entries
    tr_a = float(np.sum(r * ops.signal_t).real)
    drift = ops.drift @ r + r @ ops.drift.conj().T + params.kappa * (ops.a @ r @ ops.a_dag)
    c = ops.backaction
    stoch = c @ r + r @ c.conj().T - tr_a * r
    out = r + tau * drift + math.sqrt(params.eta) * dW * stoch
    return hermitize_and_renormalize(out)


def measurement_increment(params: KpoParams, rho: DensityMatrix, tau: float,
                          dW: float) -> float:
    """Detected photon-number difference over one step:
    (sqrt(eta) dW + eta tau Tr[rho A]) / epsilon."""
    _check_step(params, tau, dW)
    ops = operator_set(params, rho.space.dim)
    tr_a = float(np.sum(rho.entries * ops.signal_t).real)
    return (math.sqrt(params.eta) * dW + params.eta * tau * tr_a) / params.epsilon


@numba.njit(cache=True)
def _em_chunk(rho, drift, back, sd, sig_t, kp, km, kt, tau_int, ssub,
              sq_eta, eta, eps_inv, dw, f_plus, f_minus, d_n):
    """Advance a batch of trajectories through a chunk of detector bins.

    rho (B,d,d) is updated in place; f_plus/f_minus hold fidelities at bin
    starts; d_n accumulates the detector increment per bin. Returns 0 on
    success or 1 + the failing bin index if the trace left (0.5, 1.5).
    """
    n_b, d, _ = rho.shape
    nbins = f_plus.shape[0]
    g = np.empty((d, d), dtype=np.complex128)
    x = np.empty((d, d), dtype=np.complex128)
    w1 = np.empty((d, d), dtype=np.complex128)
    for ib in range(nbins):
        for b in range(n_b):
            r = rho[b]
            accp = 0.0 + 0.0j
            accm = 0.0 + 0.0j
            for i in range(d):
                rowp = 0.0 + 0.0j
                rowm = 0.0 + 0.0j
                for j in range(d):
                    rowp += r[i, j] * kp[j]
                    rowm += r[i, j] * km[j]
                accp += np.conj(kp[i]) * rowp
                accm += np.conj(km[i]) * rowm
            # clamp: transient negativity of the explicit update can push
            # raw overlaps marginally outside [0, 1]
            f_plus[ib, b] = min(max(accp.real, 0.0), 1.0)
            f_minus[ib, b] = min(max(accm.real, 0.0), 1.0)
            d_n[ib, b] = 0.0
        for s in range(ssub):
            row = ib * ssub + s
            for b in range(n_b):
                r = rho[b]
                tr_a = 0.0
                for i in range(d):
                    for j in range(d):
                        tr_a += (r[i, j] * sig_t[i, j]).real
                w = sq_eta * dw[row, b]
                d_n[ib, b] += eps_inv * (w + eta * tau_int * tr_a)
                for i in range(d):
                    for j in range(d):
                        g[i, j] = tau_int * drift[i, j] + w * back[i, j]
                np.dot(g, r, x)
                cfac = w * tr_a
                for i in range(d):
                    for j in range(d):
                        v = r[i, j] + x[i, j] + np.conj(x[j, i]) - cfac * r[i, j]
                        if i < d - 1 and j < d - 1:
                            v += kt * sd[i] * sd[j] * r[i + 1, j + 1]
                        w1[i, j] = v
                tr = 0.0
                for i in range(d):
                    tr += w1[i, i].real
                if not (0.5 < tr < 1.5):
                    return 1 + ib
                inv = 1.0 / tr
                for i in range(d):
                    r[i, i] = complex(w1[i, i].real * inv, 0.0)
                    for j in range(i + 1, d):
                        v = 0.5 * (w1[i, j] + np.conj(w1[j, i])) * inv
                        r[i, j] = v
                        r[j, i] = np.conj(v)
    return 0


def simulate_ensemble(params: KpoParams, rho0: DensityMatrix, t_end: float,
                      tau: float, noise: NoiseStream, n_trajectories: int,
                      snapshot_stride: int = 0,
                      substeps: int | None = None) -> list[TrajectoryRecord]:
    """Simulate independent homodyne trajectories from a common initial state.

    Trajectory k consumes the stream (noise.seed, noise.stream_id + k), so
    ensembles are reproducible bit-for-bit and extensible without overlap.
    Each detector bin of width tau is integrated with `substeps` explicit
    updates (chosen from the stability limit when not given); the recorded
    dN accumulates the per-substep increments, which is exactly the detector
    integrating its photocurrent difference over the bin.
    """
    _check_step(params, tau)
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    dim = rho0.space.dim
    nbins = int(round(t_end / tau))
    if nbins < 1:
        raise ValueError(f"t_end={t_end:g} shorter than one bin tau={tau:g}")
    ssub = em_substeps(params, dim, tau) if substeps is None else int(substeps)
    if ssub < 1:
        raise StepSizeError("substeps must be >= 1")
    tau_int = tau / ssub

    ops = operator_set(params, dim)
    alpha = alpha_stationary(params)
    kp = coherent_ket(rho0.space, alpha).amplitudes
    km = coherent_ket(rho0.space, -alpha).amplitudes
    sd = np.sqrt(np.arange(1, dim, dtype=float))

    n_b = n_trajectories
    rho = np.broadcast_to(rho0.entries, (n_b, dim, dim)).copy()
    f_plus = np.empty((nbins, n_b))
    f_minus = np.empty((nbins, n_b))
    d_n = np.empty((nbins, n_b))
    gens = [noise.child(noise.stream_id + b).generator() for b in range(n_b)]

    times = np.arange(nbins) * tau
    snap_times = [0.0] if snapshot_stride > 0 else []
    snaps: list[list[DensityMatrix]] = [[_as_dm(rho[b]) for b in range(n_b)]] \
        if snapshot_stride > 0 else []

    start = 0
    sqrt_ti = math.sqrt(tau_int)
    while start < nbins:
        stop = min(start + _DEFAULT_CHUNK_BINS, nbins)
        if snapshot_stride > 0:
            next_snap = (start // snapshot_stride + 1) * snapshot_stride
            stop = min(stop, next_snap)
        rows = (stop - start) * ssub
        dw = np.empty((rows, n_b))
        for b in range(n_b):
            dw[:, b] = gens[b].normal(0.0, sqrt_ti, rows)
        flag = _em_chunk(rho, ops.drift, ops.backaction, sd, ops.signal_t, kp, km,
                         params.kappa * tau_int, tau_int, ssub,
                         math.sqrt(params.eta), params.eta, 1.0 / params.epsilon,
                         dw, f_plus[start:stop], f_minus[start:stop],
                         d_n[start:stop])
        if flag:
            raise DivergenceError(
                f"trajectory diverged near t = {(start + flag - 1) * tau:g} us; "
                f"reduce the substep (got tau_int = {tau_int:g} us)")
        start = stop
        if snapshot_stride > 0 and start < nbins and start % snapshot_stride == 0:
            snap_times.append(start * tau)
            snaps.append([_as_dm(rho[b]) for b in range(n_b)])

    records = []
    for b in range(n_b):
        records.append(TrajectoryRecord(
            params=params, tau=tau, times=times,
            f_plus=f_plus[:, b].copy(), f_minus=f_minus[:, b].copy(),
            dN=d_n[:, b].copy(), seed=noise.seed, stream_id=noise.stream_id + b,
            alpha=alpha, substeps=ssub,
            rho_final=_as_dm(rho[b]),
            snapshot_times=np.array(snap_times),
            rho_snapshots=[row[b] for row in snaps],
        ))
    return records


def _as_dm(entries: np.ndarray) -> DensityMatrix:
    return hermitize_and_renormalize(np.array(entries))


def simulate_trajectory(params: KpoParams, rho0: DensityMatrix, t_end: float,
                        tau: float, noise: NoiseStream, snapshot_stride: int = 0,
                        substeps: int | None = None) -> TrajectoryRecord:
    """Single-trajectory convenience wrapper around simulate_ensemble."""
    return simulate_ensemble(params, rho0, t_end, tau, noise, 1,
                             snapshot_stride=snapshot_stride, substeps=substeps)[0]
