"""Feedback-controlled Kuramoto model on ring and complete graphs."""

from .center_manifold import (CMCoefficients, DegenerateCoefficientError, FourierState, ModePrediction,
                              SubcriticalError, a1, a2, amplitude_prediction, coefficients,
                              fourier_truncated_rhs, fourier_vector_field, reduced_rhs_radial)
from .estimate import ModeEstimate, deviation_metrics, mode_estimate, rotation_period
from .graph import GraphIndexError, GraphSpec, degree, graphon_limit, graphon_step, weight
from .harness import (ConfigError, ExperimentConfig, SimulationResult, SweepRow, convergence_study,
                      run_simulation, sample_initial_condition, sweep_b1)
from .model import (PhaseState, SystemParams, capital_omega_cl, capital_omega_discrete, coupling_sum_fast,
                    coupling_sum_naive, omega_default, rhs_full, rhs_rotating, target_state)
from .ode import (DivergenceError, IntegrationError, IntegratorConfig, StepLimitError, Trajectory,
                  integrate, integrate_to_steady)
from .spectra import (b1_critical, chi1, chi2, eigenvalue, is_linearly_stable, kappa_q, zeta0)

__version__ = "0.1.0"
