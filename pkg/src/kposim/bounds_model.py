"""Closed-form averaging-time bounds and the two-state jump model.

The lower bound comes from the Gaussian statistics of the averaged detector
record; the upper bound from a binomial flip process between the two coherent
states with rate Omega. A Monte-Carlo telegraph simulator validates the jump
model independently of the quantum simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StepSizeError, WindowError
from .me_dynamics import KpoParams
from .noise import NoiseStream

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the inverse normal CDF
# (relative error < 1.15e-9 before refinement).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / SQRT2)


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile: rational approximation plus one Newton step."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile argument must be in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    err = normal_cdf(x) - p
    x -= err * SQRT_2PI * math.exp(0.5 * x * x)
    return x


def alpha_stationary(params: KpoParams) -> complex:
    """Stationary coherent amplitude:
    |alpha| = ((4 beta^2 - kappa^2/4)/chi^2)^(1/4),
    arg alpha = arcsin(-kappa/(4 beta))/2."""
    disc = 4.0 * params.beta ** 2 - 0.25 * params.kappa ** 2
    if disc < 0.0:
        raise DomainError(
            f"no real stationary amplitude: 4*beta^2 = {4 * params.beta**2:g} "
            f"< kappa^2/4 = {0.25 * params.kappa**2:g}")
    mag = (disc / params.chi ** 2) ** 0.25
    arg = 0.0 if params.kappa == 0.0 else 0.5 * math.asin(-params.kappa / (4.0 * params.beta))
    return mag * complex(math.cos(arg), math.sin(arg))


def gaussian_success(alpha: complex, kappa: float, t_a: float,
                     eta: float = 1.0, delta_theta: float = math.pi / 2) -> float:
    """Success probability of the averaged-record sign test in the no-jump
    Gaussian model: Phi(2|alpha| sqrt(kappa eta T_a) sin(delta_theta))."""
    return normal_cdf(2.0 * abs(alpha) * math.sin(delta_theta)
                      * math.sqrt(kappa * eta * t_a))


def lower_bound_ta(alpha: complex, kappa: float, k_target: float,
                   eta: float = 1.0, delta_theta: float = math.pi / 2,
                   paper_rounding: bool = False) -> float:
    """Shortest averaging time reaching success probability k_target:
    T_L = Phi^{-1}(K)^2 / (4 |alpha|^2 kappa sin^2(delta_theta) eta).

    paper_rounding substitutes the conventional two-decimal quantile 1.65
    for K = 0.95 (and only there), matching reference values quoted at that
    precision.
    """
    if not 0.5 < k_target < 1.0:
        raise DomainError(f"k_target must be in (0.5, 1), got {k_target}")
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta must be in (0, 1], got {eta}")
    s = math.sin(delta_theta)
    if s == 0.0:
        raise DomainError("sin(delta_theta) must be nonzero")
    if kappa <= 0.0:
        raise DomainError("kappa must be positive")
    amp = abs(alpha)
    if amp <= 0.0:
        raise DomainError("alpha must be nonzero")
    if paper_rounding:
        if abs(k_target - 0.95) > 1e-12:
            raise DomainError("paper_rounding is defined only for k_target = 0.95")
        z = 1.65
    else:
        z = inverse_normal_cdf(k_target)
    return z * z / (4.0 * amp * amp * kappa * s * s * eta)


def upper_bound_ta(omega: float, k_target: float) -> float:
    """Longest averaging time before jump smearing eats the error budget:
    T_U = 2 (1 - K) / Omega. Accepts K = 1 (zero tolerance, returns 0)."""
    if omega <= 0.0:
        raise DomainError(f"omega must be positive, got {omega}")
    if not 0.0 < k_target <= 1.0:
        raise DomainError(f"k_target must be in (0, 1], got {k_target}")
    return 2.0 * (1.0 - k_target) / omega


def binomial_mean_x(re_alpha: float, omega: float, t) -> float | np.ndarray:
    """Mean in-phase quadrature of the jump model, Re[alpha] exp(-2 Omega t)
    (the dt -> 0 limit of the binomial flip process)."""
    if omega < 0.0:
        raise DomainError(f"omega must be nonnegative, got {omega}")
    out = re_alpha * np.exp(-2.0 * omega * np.asarray(t, dtype=float))
    return float(out) if np.isscalar(t) else out


@dataclass(frozen=True)
class BoundReport:
    """All bound quantities for one parameter set and target success K."""

    alpha: complex
    k_target: float
    t_lower: float
    omega: float
    e_t_i: float
    t_upper: float
    eta: float
    delta_theta: float


def make_bound_report(params: KpoParams, k_target: float, omega: float,
                      eta: float | None = None,
                      delta_theta: float = math.pi / 2) -> BoundReport:
    """Assemble a consistent report: e_t_i = 1/omega and
    t_upper = 2(1-K)/omega hold exactly by construction."""
    if eta is None:
        eta = params.eta
    alpha = alpha_stationary(params)
    return BoundReport(
        alpha=alpha,
        k_target=k_target,
        t_lower=lower_bound_ta(alpha, params.kappa, k_target, eta, delta_theta),
        omega=omega,
        e_t_i=1.0 / omega,
        t_upper=upper_bound_ta(omega, k_target),
        eta=eta,
        delta_theta=delta_theta,
    )


@dataclass(frozen=True)
class TelegraphPath:
    """One realization of the two-state jump process."""

    jump_times: np.ndarray
    initial_sign: int
    omega: float
    duration: float
    dt: float

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        if jt.size and (np.any(np.diff(jt) <= 0) or jt[0] < 0 or jt[-1] > self.duration):
            raise ValueError("jump times must be strictly increasing within [0, duration]")
        object.__setattr__(self, "jump_times", jt)

    def signs_on_grid(self) -> np.ndarray:
        """Sign at each step start, on the grid times = arange(n)*dt."""
        n = int(round(self.duration / self.dt))
        flips = np.zeros(n + 1, dtype=np.int64)
        idx = np.minimum((self.jump_times / self.dt).round().astype(int), n)
        np.add.at(flips, idx, 1)
        parity = np.cumsum(flips)[:n] % 2
        return self.initial_sign * (1 - 2 * parity)


def simulate_telegraph(omega: float, duration: float, dt: float,
                       noise: NoiseStream, initial_sign: int = 1) -> TelegraphPath:
    """Bernoulli flips with per-step probability p = omega*dt.

    dt must resolve the rate (omega*dt <= 0.01); a flip drawn in step k is
    assigned time (k+1)*dt.
    """
    if omega < 0.0:
        raise DomainError(f"omega must be nonnegative, got {omega}")
    p = omega * dt
    if p > 0.01:
        raise StepSizeError(f"omega*dt = {p:g} too coarse; need <= 0.01")
    n = int(round(duration / dt))
    if omega == 0.0:
        jumps = np.empty(0)
    else:
        u = noise.uniforms(n)
        jumps = (np.nonzero(u < p)[0] + 1) * dt
    return TelegraphPath(jump_times=jumps, initial_sign=initial_sign,
                         omega=omega, duration=duration, dt=dt)


def error_rate_of_window(path: TelegraphPath, t_a: float) -> float:
    """Fraction of the total duration on which the boxcar-averaged sign of the
    noise-free telegraph signal disagrees with the instantaneous sign.

    For t_a much shorter than the mean flip interval this approaches
    t_a * omega / 2: each flip costs roughly t_a/2 of wrong estimation.
    """
    if t_a >= path.duration:
        raise WindowError(f"t_a = {t_a:g} does not fit into duration {path.duration:g}")
    w = int(round(t_a / path.dt))
    if w < 1 or abs(w * path.dt - t_a) > 1e-9 * t_a:
        raise WindowError(f"t_a = {t_a:g} is not a positive multiple of dt = {path.dt:g}")
    s = path.signs_on_grid().astype(float)
    c = np.concatenate([[0.0], np.cumsum(s)])
    window_sum = c[w + 1:] - c[:-w - 1]          # trailing boxcar, w+1 samples
    est = np.where(window_sum >= 0.0, 1, -1)
    wrong = int(np.count_nonzero(est != s[w:]))
    return wrong * path.dt / path.duration
