"""Batch front-end: JSON config in, plot-ready CSV/JSON out.

Frequencies enter the config as f/2pi in MHz (the way experiments quote
them) and are converted to angular rad/us internally. Every output file gets
a .meta.json sidecar echoing the seed, the effective configuration and the
package version; reruns with the same config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds_model import alpha_stationary, lower_bound_ta, make_bound_report
from .errors import (DimensionMismatch, DivergenceError, DomainError,
                     FitWindowError, NonPositiveRate, NonPositiveSignal,
                     StepSizeError, TruncationError, WindowError)
from .estimator import EstimatorConfig, moving_average, scoring_start_index, \
    success_over_ensemble
from .hilbert import FockSpace, coherent_ket, dm_from_ket
from .me_dynamics import KpoParams, evolve_me, fit_omega, stable_rk4_dt, TWO_PI
from .noise import NoiseStream
from .sme_dynamics import simulate_ensemble, simulate_trajectory, stationary_mixture

SWEEP_AXES = ("ta", "eta", "delta_theta", "beta")


@dataclass
class RunConfig:
    """Flat JSON configuration; unknown keys are rejected."""

    chi_mhz: float
    beta_mhz: float
    kappa_mhz: float
    delta_mhz: float = 0.0
    eta: float = 1.0
    epsilon: float = 1.0
    delta_theta_rad: float | None = None
    theta_lo_rad: float | None = None
    fock_dim: int = 30
    tau_us: float = 1e-3
    t_end_us: float = 200.0
    ta_list_us: list = field(default_factory=lambda: [0.1])
    ensemble: int = 1
    seed: int = 12345
    k_target: float = 0.95
    output_dir: str = "."
    snapshot_stride: int = 0
    substeps: int | None = None
    me_dt_us: float | None = None
    me_t_end_us: float = 12.0
    sweep_values: list = field(default_factory=list)

    def __post_init__(self):
        if self.delta_theta_rad is not None and self.theta_lo_rad is not None:
            raise DomainError("give either delta_theta_rad or theta_lo_rad, not both")
        if self.fock_dim < 2:
            raise DomainError("fock_dim must be at least 2")
        if self.tau_us <= 0 or self.t_end_us <= 0:
            raise DomainError("tau_us and t_end_us must be positive")
        if self.ensemble < 1:
            raise DomainError("ensemble must be at least 1")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")
        if not self.ta_list_us:
            raise DomainError("ta_list_us must not be empty")

    def delta_theta(self) -> float:
        return math.pi / 2 if self.delta_theta_rad is None else self.delta_theta_rad

    def params(self) -> KpoParams:
        base = KpoParams.from_mhz(self.chi_mhz, self.beta_mhz, self.kappa_mhz,
                                  self.delta_mhz, eta=self.eta, epsilon=self.epsilon)
        if self.theta_lo_rad is not None:
            theta = self.theta_lo_rad
        else:
            # lock the measured quadrature at delta_theta from the cat axis
            alpha = alpha_stationary(base)
            theta = float(np.angle(alpha)) - self.delta_theta()
        return dataclasses.replace(base, theta_lo=theta)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: str | Path) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise DomainError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in ("chi_mhz", "beta_mhz", "kappa_mhz") if k not in raw]
    if missing:
        raise DomainError(f"missing required config keys: {', '.join(missing)}")
    return RunConfig(**raw)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for i in range(n):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\r\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_meta(out_path: Path, command: str, config: RunConfig) -> None:
    meta = {
        "tool": "kposim",
        "version": __version__,
        "command": command,
        "seed": config.seed,
        "config": config.as_dict(),
    }
    _write_json(out_path.with_suffix("").with_suffix(".meta.json"), meta)


def _outdir(config: RunConfig) -> Path:
    d = Path(config.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_alpha(config: RunConfig) -> Path:
    alpha = alpha_stationary(config.params())
    out = _outdir(config) / "alpha.json"
    _write_json(out, {
        "alpha_re": alpha.real,
        "alpha_im": alpha.imag,
        "abs": abs(alpha),
        "arg": math.atan2(alpha.imag, alpha.real),
    })
    _write_meta(out, "alpha", config)
    print(f"alpha = {alpha.real:.6f} {alpha.imag:+.6f}i  -> {out}")
    return out


def cmd_trajectory(config: RunConfig) -> Path:
    params = config.params()
    space = FockSpace(config.fock_dim)
    rho0 = stationary_mixture(params, space)
    record = simulate_trajectory(params, rho0, config.t_end_us, config.tau_us,
                                 NoiseStream(config.seed),
                                 snapshot_stride=config.snapshot_stride,
                                 substeps=config.substeps)
    header = ["t_us", "f_plus", "f_minus", "dN"]
    columns = [record.times, record.f_plus, record.f_minus, record.dN]
    n = len(record.times)
    ta_cols = {"nbar": [], "est_sign": [], "est_fid": []}
    for ta in config.ta_list_us:
        cfg = EstimatorConfig(t_a=ta)
        nbar = moving_average(record, cfg)
        w = cfg.window_steps(record.tau)
        start = scoring_start_index(record, cfg)
        sign = np.full(n, np.nan)
        sign[w:] = np.where(nbar[w:] >= 0.0, 1.0, -1.0)
        fid = np.full(n, np.nan)
        fid[start:] = np.where(sign[start:] > 0, record.f_plus[start:],
                               record.f_minus[start:])
        tag = format(ta, "g")
        ta_cols["nbar"].append((f"nbar_{tag}", nbar))
        ta_cols["est_sign"].append((f"est_sign_{tag}", sign))
        ta_cols["est_fid"].append((f"est_fid_{tag}", fid))
    for kind in ("nbar", "est_sign", "est_fid"):
        for name, col in ta_cols[kind]:
            header.append(name)
            columns.append(col)
    out = _outdir(config) / "trajectory.csv"
    _write_csv(out, header, columns)
    _write_meta(out, "trajectory", config)
    print(f"trajectory: {n} bins of {config.tau_us:g} us "
          f"({record.substeps} substeps each) -> {out}")
    return out


def _fit_upper_bound(config: RunConfig, params: KpoParams) -> tuple[float, float, float]:
    """Omega from the master-equation decay plus the derived upper bound."""
    alpha = alpha_stationary(params)
    space = FockSpace(config.fock_dim)
    rho0 = dm_from_ket(coherent_ket(space, alpha))
    dt = config.me_dt_us if config.me_dt_us is not None else stable_rk4_dt(params, config.fock_dim)
    traj = evolve_me(params, rho0, config.me_t_end_us, dt)
    fit = fit_omega(traj, alpha.real)
    return fit.omega, 2.0 * (1.0 - config.k_target) / fit.omega, fit.residual_rms


def cmd_fit_omega(config: RunConfig) -> Path:
    params = config.params()
    omega, t_upper, rms = _fit_upper_bound(config, params)
    out = _outdir(config) / "omega.json"
    _write_json(out, {
        "omega_rad_per_us": omega,
        "omega_over_2pi_khz": omega / TWO_PI * 1e3,
        "e_t_i_us": 1.0 / omega,
        "t_upper_us": t_upper,
        "fit_rms": rms,
    })
    _write_meta(out, "fit-omega", config)
    print(f"omega/2pi = {omega / TWO_PI * 1e3:.2f} kHz, "
          f"T_U({config.k_target}) = {t_upper:.4g} us -> {out}")
    return out


def cmd_bounds(config: RunConfig) -> Path:
    params = config.params()
    omega, _, _ = _fit_upper_bound(config, params)
    report = make_bound_report(params, config.k_target, omega,
                               eta=config.eta, delta_theta=config.delta_theta())
    out = _outdir(config) / "bounds.json"
    _write_json(out, {
        "alpha_re": report.alpha.real,
        "alpha_im": report.alpha.imag,
        "k_target": report.k_target,
        "t_lower_us": report.t_lower,
        "omega_rad_per_us": report.omega,
        "e_t_i_us": report.e_t_i,
        "t_upper_us": report.t_upper,
        "eta": report.eta,
        "delta_theta_rad": report.delta_theta,
    })
    _write_meta(out, "bounds", config)
    print(f"T_L = {report.t_lower:.4g} us, T_U = {report.t_upper:.4g} us -> {out}")
    return out


def _sweep_success(config: RunConfig, params: KpoParams, t_a: float) -> tuple[float, float]:
    space = FockSpace(config.fock_dim)
    rho0 = stationary_mixture(params, space)
    records = simulate_ensemble(params, rho0, config.t_end_us, config.tau_us,
                                NoiseStream(config.seed), config.ensemble,
                                substeps=config.substeps)
    point = success_over_ensemble(records, EstimatorConfig(t_a=t_a))
    return point.success_mean, point.success_stderr


def cmd_sweep(config: RunConfig, axis: str) -> Path:
    if axis not in SWEEP_AXES:
        raise DomainError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    params = config.params()
    rows: list[tuple[float, float, float, float, float]] = []

    if axis == "ta":
        # estimator-only sweep: one shared ensemble, bounds constant
        space = FockSpace(config.fock_dim)
        rho0 = stationary_mixture(params, space)
        records = simulate_ensemble(params, rho0, config.t_end_us, config.tau_us,
                                    NoiseStream(config.seed), config.ensemble,
                                    substeps=config.substeps)
        alpha = alpha_stationary(params)
        t_lower = lower_bound_ta(alpha, params.kappa, config.k_target,
                                 config.eta, config.delta_theta())
        omega, t_upper, _ = _fit_upper_bound(config, params)
        for ta in config.ta_list_us:
            point = success_over_ensemble(records, EstimatorConfig(t_a=ta))
            rows.append((ta, point.success_mean, point.success_stderr,
                         t_lower, t_upper))
    else:
        if not config.sweep_values:
            raise DomainError(f"sweep axis {axis!r} needs sweep_values in the config")
        t_a = config.ta_list_us[0]
        # physics changes along these axes, so each value is re-simulated;
        # the jump rate does not depend on eta or delta_theta, so one fit serves
        t_upper = None
        if axis in ("eta", "delta_theta"):
            _, t_upper, _ = _fit_upper_bound(config, params)
        for v in config.sweep_values:
            if axis == "eta":
                p = dataclasses.replace(params, eta=float(v))
                t_lower = lower_bound_ta(alpha_stationary(p), p.kappa,
                                         config.k_target, float(v),
                                         config.delta_theta())
                tu = t_upper
            elif axis == "delta_theta":
                alpha = alpha_stationary(params)
                p = dataclasses.replace(params,
                                        theta_lo=float(np.angle(alpha)) - float(v))
                t_lower = lower_bound_ta(alpha, p.kappa, config.k_target,
                                         config.eta, float(v))
                tu = t_upper
            else:  # beta
                base = dataclasses.replace(params, beta=TWO_PI * float(v))
                alpha = alpha_stationary(base)
                p = dataclasses.replace(base,
                                        theta_lo=float(np.angle(alpha)) - config.delta_theta())
                t_lower = lower_bound_ta(alpha, p.kappa, config.k_target,
                                         config.eta, config.delta_theta())
                sub = dataclasses.replace(config, beta_mhz=float(v),
                                          theta_lo_rad=None)
                om, tu, _ = _fit_upper_bound(sub, p)
            mean, stderr = _sweep_success(config, p, t_a)
            rows.append((float(v), mean, stderr, t_lower, tu))

    out = _outdir(config) / f"sweep_{axis}.csv"
    cols = list(zip(*rows))
    _write_csv(out, ["axis_value", "success_mean", "success_stderr",
                     "t_lower_analytic", "t_upper_analytic"],
               [np.array(c, dtype=float) for c in cols])
    _write_meta(out, f"sweep {axis}", config)
    print(f"sweep over {axis}: {len(rows)} points -> {out}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kposim",
        description="Homodyne state-preparation simulator for a Kerr parametric oscillator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, txt in [("alpha", "stationary coherent amplitude"),
                      ("trajectory", "one monitored trajectory to CSV"),
                      ("sweep", "success probability sweep to CSV"),
                      ("fit-omega", "jump rate from the master-equation decay"),
                      ("bounds", "analytic averaging-time bounds")]:
        p = sub.add_parser(name, help=txt)
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        if name == "sweep":
            p.add_argument("--axis", choices=SWEEP_AXES, default="ta")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        if args.out is not None:
            config = dataclasses.replace(config, output_dir=args.out)
        if args.command == "alpha":
            cmd_alpha(config)
        elif args.command == "trajectory":
            cmd_trajectory(config)
        elif args.command == "sweep":
            cmd_sweep(config, args.axis)
        elif args.command == "fit-omega":
            cmd_fit_omega(config)
        elif args.command == "bounds":
            cmd_bounds(config)
    except (DomainError, WindowError, DimensionMismatch, ValueError, KeyError,
            TypeError, json.JSONDecodeError) as exc:
        print(f"config/domain error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (FitWindowError, NonPositiveSignal, NonPositiveRate, DivergenceError,
            StepSizeError, TruncationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
