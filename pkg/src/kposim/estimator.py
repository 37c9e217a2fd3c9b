"""Sign estimation of the resonator state from the averaged detector record.

A trailing boxcar over the photon-number-difference record suppresses the
measurement noise; the sign of the average picks |+alpha> or |-alpha>, and
the estimate is scored against the conditioned state's fidelities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, WindowError
from .me_dynamics import KpoParams
from .noise import NoiseStream
from .sme_dynamics import TrajectoryRecord, simulate_ensemble, stationary_mixture
from .hilbert import FockSpace

REL_ROUNDING_TOL = 1e-9


@dataclass(frozen=True)
class EstimatorConfig:
    """Averaging time for the boxcar; ties at exactly zero resolve to +alpha."""

    t_a: float
    tie_rule: str = "plus"

    def __post_init__(self):
        if self.t_a <= 0:
            raise DomainError("t_a must be positive")
        if self.tie_rule != "plus":
            raise DomainError("only the documented tie rule 'plus' is supported")

    def window_steps(self, tau: float) -> int:
        """t_a as an integer number of record bins; the averaging window holds
        this many bins plus one (the sum runs k = 0 .. t_a/tau inclusive)."""
        w = self.t_a / tau
        w_int = round(w)
        if w_int < 1 or abs(w - w_int) > REL_ROUNDING_TOL * max(1.0, w):
            raise DomainError(
                f"t_a = {self.t_a:g} us is not an integer multiple of tau = {tau:g} us")
        return int(w_int)


@dataclass
class EstimateSeries:
    """Estimator output over the scoring window (full boxcar available and
    startup transient excluded). success_probability is the time mean of
    est_fidelity by construction."""

    times: np.ndarray
    n_bar: np.ndarray
    est_sign: np.ndarray
    est_fidelity: np.ndarray
    success_probability: float
    t_a: float


def moving_average(record: TrajectoryRecord, config: EstimatorConfig) -> np.ndarray:
    """Trailing average nbar(t) = (tau/t_a) * sum_{k=0}^{t_a/tau} dN(t - k tau).

    Returns an array aligned with record.times; entries before the first full
    window are NaN. The window holds W+1 samples with prefactor tau/t_a, so a
    constant record c averages to c*(1 + tau/t_a) rather than c; only the sign
    matters downstream.
    """
    w = config.window_steps(record.tau)
    n = len(record.dN)
    if n < w + 1:
        raise WindowError(
            f"record has {n} samples; averaging needs at least {w + 1}")
    csum = np.concatenate([[0.0], np.cumsum(record.dN)])
    out = np.full(n, np.nan)
    out[w:] = (csum[w + 1:] - csum[:n - w]) * (record.tau / config.t_a)
    return out


def estimate_state(n_bar: float) -> int:
    """+1 (state |+alpha>) for positive average, -1 for negative; the
    measure-zero tie at exactly zero resolves to +1."""
    return 1 if n_bar >= 0.0 else -1


def scoring_start_index(record: TrajectoryRecord, config: EstimatorConfig) -> int:
    """First scored bin: the boxcar must be full and the startup transient
    max(3/kappa, t_a) must have passed."""
    w = config.window_steps(record.tau)
    t_min = config.t_a
    if record.params.kappa > 0:
        t_min = max(t_min, 3.0 / record.params.kappa)
    return max(w, math.ceil(t_min / record.tau - 1e-9))


def score_estimation(record: TrajectoryRecord, config: EstimatorConfig) -> EstimateSeries:
    """Estimate the state at every scored time and grade against the record.

    The estimate is pure, so its fidelity to the conditioned state is F_plus
    where the sign is +1 and F_minus where it is -1.
    """
    n_bar = moving_average(record, config)
    start = scoring_start_index(record, config)
    if start >= len(record.times):
        raise WindowError(
            f"record of {len(record.times)} bins too short to score at "
            f"t_a = {config.t_a:g} us")
    nb = n_bar[start:]
    sign = np.where(nb >= 0.0, 1, -1).astype(np.int8)
    fid = np.where(sign > 0, record.f_plus[start:], record.f_minus[start:])
    return EstimateSeries(
        times=record.times[start:],
        n_bar=nb,
        est_sign=sign,
        est_fidelity=fid,
        success_probability=float(fid.mean()),
        t_a=config.t_a,
    )


@dataclass(frozen=True)
class TaSweepPoint:
    t_a: float
    success_mean: float
    success_stderr: float


def success_over_ensemble(records: list[TrajectoryRecord],
                          config: EstimatorConfig) -> TaSweepPoint:
    """Mean and standard error of the per-trajectory success probabilities
    (trajectories are the independent statistical unit)."""
    vals = np.array([score_estimation(r, config).success_probability for r in records])
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return TaSweepPoint(t_a=config.t_a, success_mean=float(vals.mean()),
                        success_stderr=stderr)


def sweep_ta(params: KpoParams, ta_list: list[float], ensemble: int, t_end: float,
             base_seed: int, *, dim: int, tau: float = 1e-3,
             substeps: int | None = None) -> list[TaSweepPoint]:
    """Success probability versus averaging time.

    The physics runs once: a single trajectory ensemble is shared by every
    t_a value, because the estimator is pure post-processing of the record.
    """
    if ensemble < 1:
        raise DomainError("ensemble must be at least 1")
    configs = [EstimatorConfig(t_a=ta) for ta in ta_list]
    for cfg in configs:
        cfg.window_steps(tau)  # fail fast on non-commensurate entries
    space = FockSpace(dim)
    rho0 = stationary_mixture(params, space)
    records = simulate_ensemble(params, rho0, t_end, tau,
                                NoiseStream(base_seed), ensemble,
                                substeps=substeps)
    return [success_over_ensemble(records, cfg) for cfg in configs]
