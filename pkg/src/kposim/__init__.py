"""Simulation and analysis toolkit for measurement-based state preparation of
a Kerr parametric oscillator under homodyne detection."""

from .errors import (DimensionMismatch, DivergenceError, DomainError,
                     FitWindowError, KposimError, NonPositiveRate,
                     NonPositiveSignal, StepSizeError, TruncationError,
                     WindowError)
from .hilbert import (DensityMatrix, FockSpace, Ket, Operator, annihilation_op,
                      coherent_ket, coherent_pair_mixture, creation_op,
                      dm_from_ket, expectation, fock_ket,
                      hermitize_and_renormalize, homodyne_signal_op, number_op,
                      pure_fidelity, quadrature_op)
from .noise import NoiseStream
from .me_dynamics import (KpoParams, MeTrajectory, OmegaFit, evolve_me,
                          expected_jump_interval, fit_omega, lindblad_rhs,
                          stable_rk4_dt, steady_state)
from .bounds_model import (BoundReport, TelegraphPath, alpha_stationary,
                           binomial_mean_x, error_rate_of_window,
                           gaussian_success, inverse_normal_cdf,
                           lower_bound_ta, make_bound_report, normal_cdf,
                           simulate_telegraph, upper_bound_ta)
from .sme_dynamics import (TrajectoryRecord, em_substeps, measurement_increment,
                           simulate_ensemble, simulate_trajectory, sme_step,
                           stable_em_substep, stationary_mixture)
from .estimator import (EstimateSeries, EstimatorConfig, TaSweepPoint,
                        estimate_state, moving_average, score_estimation,
                        scoring_start_index, success_over_ensemble, sweep_ta)

__version__ = "0.1.0"
