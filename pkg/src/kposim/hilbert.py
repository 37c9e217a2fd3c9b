"""Truncated-Fock-space linear algebra: operators, coherent states, fidelities.

Everything is dense complex and immutable after construction; dimensions stay
small (tens of levels), so no sparsity is used anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DivergenceError, TruncationError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
KET_NORM_TOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FockSpace:
    """Bosonic Hilbert space truncated to number states 0..dim-1."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"Fock truncation needs dim >= 2, got {self.dim}")


@dataclass(frozen=True)
class Operator:
    space: FockSpace
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _readonly(self.entries)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatch(
                f"operator shape {m.shape} does not match dim {self.space.dim}")
        object.__setattr__(self, "entries", m)

    def dag(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T)


@dataclass(frozen=True)
class Ket:
    """Pure state; normalized to unit norm on construction."""

    space: FockSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _readonly(self.amplitudes)
        if v.shape != (self.space.dim,):
            raise DimensionMismatch(
                f"ket length {v.shape} does not match dim {self.space.dim}")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > KET_NORM_TOL:
            raise ValueError(f"ket norm {norm} deviates from 1 beyond {KET_NORM_TOL}")
        object.__setattr__(self, "amplitudes", v)


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state: Hermitian, unit trace. Positivity is monitored on demand
    (see min_eigenvalue), not enforced, so integrator artifacts stay visible."""

    space: FockSpace
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _readonly(self.entries)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatch(
                f"density matrix shape {m.shape} does not match dim {self.space.dim}")
        herm_dev = np.abs(m - m.conj().T).max()
        if herm_dev > HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian: max deviation {herm_dev:.3e}")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} deviates from 1")
        object.__setattr__(self, "entries", m)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def annihilation_op(space: FockSpace) -> Operator:
    """Ladder operator a with a|n> = sqrt(n)|n-1>."""
    m = np.zeros((space.dim, space.dim), dtype=complex)
    for n in range(1, space.dim):
        m[n - 1, n] = math.sqrt(n)
    return Operator(space, m)


def creation_op(space: FockSpace) -> Operator:
    return annihilation_op(space).dag()


def number_op(space: FockSpace) -> Operator:
    return Operator(space, np.diag(np.arange(space.dim, dtype=complex)))


def quadrature_op(space: FockSpace) -> Operator:
    """In-phase quadrature x = (a + a^dag)/2."""
    a = annihilation_op(space).entries
    return Operator(space, 0.5 * (a + a.conj().T))


def homodyne_signal_op(space: FockSpace, kappa: float, theta_lo: float) -> Operator:
    """Measured-quadrature operator i*sqrt(kappa)*(e^{i th} a^dag - e^{-i th} a).

    Its expectation sets the mean photocurrent difference of the two detectors.
    """
    a = annihilation_op(space).entries
    m = 1j * math.sqrt(kappa) * (np.exp(1j * theta_lo) * a.conj().T - np.exp(-1j * theta_lo) * a)
    return Operator(space, m)


def fock_ket(space: FockSpace, n: int) -> Ket:
    if not 0 <= n < space.dim:
        raise DimensionMismatch(f"Fock level {n} outside 0..{space.dim - 1}")
    v = np.zeros(space.dim, dtype=complex)
    v[n] = 1.0
    return Ket(space, v)


def coherent_ket(space: FockSpace, alpha: complex) -> Ket:
    """Coherent state |alpha> built from the normalized power series.

    Amplitudes are alpha^n/sqrt(n!) with the e^{-|alpha|^2/2} prefactor; the
    pre-renormalization norm measures how much of the state the truncation
    keeps. Recommended adequacy: |alpha|^2 + 5|alpha| + 10 <= dim.
    """
    dim = space.dim
    v = np.zeros(dim, dtype=complex)
    if alpha == 0:
        v[0] = 1.0
        return Ket(space, v)
    n = np.arange(dim)
    log_fact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, dim)))])
    v = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact - 0.5 * abs(alpha) ** 2)
    norm = np.linalg.norm(v)
    if abs(1.0 - norm) > 1e-6:
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):.3f} leaks past dim={dim}: "
            f"pre-renormalization norm {norm:.8f}")
    return Ket(space, v / norm)


def dm_from_ket(ket: Ket) -> DensityMatrix:
    v = ket.amplitudes
    return DensityMatrix(ket.space, np.outer(v, v.conj()))


def coherent_pair_mixture(space: FockSpace, alpha: complex) -> DensityMatrix:
    """Equal mixture (|alpha><alpha| + |-alpha><-alpha|)/2."""
    p = coherent_ket(space, alpha).amplitudes
    m = coherent_ket(space, -alpha).amplitudes
    rho = 0.5 * (np.outer(p, p.conj()) + np.outer(m, m.conj()))
    return DensityMatrix(space, rho)


def expectation(op: Operator, rho: DensityMatrix) -> complex:
    """Tr[rho * op]; real up to ~1e-10 when op is Hermitian."""
    if op.space.dim != rho.space.dim:
        raise DimensionMismatch("operator and state dimensions differ")
    return complex(np.sum(rho.entries * op.entries.T))


def pure_fidelity(psi: Ket, rho: DensityMatrix) -> float:
    """<psi|rho|psi>, the general mixed-state fidelity reduced for a pure
    reference; clamped to [0, 1] when numerically within 1e-10 outside."""
    if psi.space.dim != rho.space.dim:
        raise DimensionMismatch("ket and state dimensions differ")
    v = psi.amplitudes
    f = float(np.real(np.vdot(v, rho.entries @ v)))
    if f < 0.0:
        if f < -1e-10:
            raise ValueError(f"fidelity {f} below 0 beyond tolerance")
        f = 0.0
    if f > 1.0:
        if f > 1.0 + 1e-10:
            raise ValueError(f"fidelity {f} above 1 beyond tolerance")
        f = 1.0
    return f


def hermitize_and_renormalize(rho: DensityMatrix | np.ndarray) -> DensityMatrix:
    """(rho + rho^dag)/2 scaled to unit trace. Numerical hygiene after
    stochastic steps; raises if the trace has drifted past recovery.

    Accepts a raw matrix (the usual case: integrator output that is not yet a
    valid DensityMatrix) or an existing DensityMatrix.
    """
    if isinstance(rho, DensityMatrix):
        space, m = rho.space, rho.entries
    else:
        m = np.asarray(rho, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
        space = FockSpace(m.shape[0])
    tr = float(np.real(np.trace(m)))
    if not math.isfinite(tr) or abs(tr - 1.0) > 0.5:
        raise DivergenceError(f"trace {tr} too far from 1; integration diverged")
    m = 0.5 * (m + m.conj().T) / tr
    return DensityMatrix(space, m)
