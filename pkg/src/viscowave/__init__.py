"""Finite-difference/Picard solver for the 1D viscoelastic wave equation with memory."""

from .energy import EnergyReport, energy_E, energy_E1, energy_E2, fit_decay_rate, lyapunov_Gamma
from .exceptions import (ConfigError, MaxPicardIters, NonFinite, NonFiniteState, NonPositiveEnergy,
                         OutOfRange, SolverError, ViscowaveError)
from .kernel import KernelSpec, g1_transform, kernel_eval, theory_constant_C2T, validate_hypotheses
from .memory import History, convolution_term, convolution_term_exp, memory_energy_term
from .operators import Grid, bilinear_a_eta, eta_norm, norm_1, norm_L2, norm_Lp, psi_q, robin_laplacian
from .problems import exact_solution, manufactured_forcing, reference_initial_data
from .stepper import ProblemSpec, SolverConfig, State, picard_advance, semi_discrete_rhs, simulate

__version__ = "0.1.0"
