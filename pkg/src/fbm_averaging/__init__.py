"""Averaging for slow-fast stochastic evolution equations driven by fractional Brownian motion."""
from .averaging import (AveragedDrift, ConvergenceConfig, KhasConfig, LatticeDrift, average_drift_ergodic,
                        average_drift_mc, aux_error_checks, convergence_experiment, fbar_lipschitz_audit,
                        gaussian_fbar, khasminskii_aux)
from .fixed_point import (FixedPointResult, FrozenFastSpec, absorbing_radius, attraction_rate,
                          fixed_point_holder_check, fixed_point_scaling_check, lipschitz_in_x, pullback_fixed_point)
from .noise import (CovarianceSpectrum, FbmPath, HurstPair, UniformGrid, sample_fbm_1d, sample_trace_class_fbm,
                    scale_time, shift)
from .ou import OuSpec, ou_evolve, ou_stationary, stationary_ou_path
from .solver import (SolutionPath, SolverConfig, SystemSpec, benchmark_spec, picard_solve, sample_noise,
                     solve_averaged, solve_coupled)
from .spectral import DiagonalOperator, GridFunction, HolderParams, holder_seminorm, weighted_holder_norm
from .young import FracParams, OperatorPath, young_sum_integral, zahle_integral

__version__ = "0.1.0"
