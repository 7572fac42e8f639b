"""Simulation and numerics for a facilitated exclusion process, its half-line
exclusion image, the discrete exponential (Hopf-Cole) transform, the
associated discrete and continuum heat kernels, and the limiting stochastic
heat equation with Dirichlet boundary.

Subpackages/modules:

    configs     lattice configurations, the regular set, the half-line map
    dynamics    exact event-driven CTMC simulation of both processes
    hopfcole    height field, Z-transform, martingale/QV diagnostics, pairings
    kernels     discrete Robin-type and continuum Dirichlet heat kernels,
                Green functions, moment formulas, kernel bound suite
    she         finite-difference solver and Picard/moment tools for the SPDE
    experiments high-level experiment drivers with CSV/SVG outputs
    cli         command-line entry point (``fasep ...``)
"""

from .configs import (FasepConfig, HalfLineConfig, ParticleLabels,
                      NotRegularError, WindowTooSmallError, validate_regular,
                      label_particles, map_to_halfline, halfline_to_fasep,
                      make_initial, enumerate_window_configs)
from .dynamics import (WeakAsymParams, weak_asym_params, Transition,
                       Trajectory, TruncationBreachError,
                       enabled_transitions_fasep, enabled_transitions_asep,
                       apply_transition, simulate_ctmc,
                       generator_apply_pointwise, generator_apply_exact)
from .hopfcole import (HeightField, height_field, HopfColeField, hopf_cole,
                       laplacian_mu, laplacian_mu_array, RescaledField,
                       rescale, TestFunction, smooth_test_functions,
                       pairing_eps, corrected_test_function, MartingaleDiag,
                       qv_rate_exact, qv_weak_asym_expansion,
                       martingale_residual, discrete_heat_residual,
                       InstrumentedRun, instrumented_run)
from .kernels import (QuadratureConvergenceError, TailNotCertifiedError,
                      RobinKernelSpec, fullline_kernel, robin_kernel,
                      robin_row, robin_matrix, kernel_table_rows,
                      green_exact, green_matrix_solve, green_cancellation,
                      green_cancellation_matrix, first_moment_exact,
                      first_moment_convolution, first_moment_scaled,
                      dirichlet_kernel, d_dirichlet_kernel, gt_function,
                      gt_function_quadrature, second_moment_exact,
                      NestedContourResult, second_moment_nested, BoundCheck,
                      BoundsReport, BoundsGrid, bounds_suite)
from .she import (NoiseGrid, MildSolution, PicardState, McResult,
                  sample_noise, solve_mild, solve_ensemble, picard_layers,
                  moment_estimate, growth_class_diagnostic)
from .experiments import (CheckRow, ExperimentConfig, ExperimentReport,
                          run_first_moment_convergence,
                          run_second_moment_ratio, run_martingale_checks,
                          run_intertwining_test, run_near_equilibrium,
                          emit_outputs)

__version__ = "0.1.0"

__all__ = [
    "FasepConfig", "HalfLineConfig", "ParticleLabels", "NotRegularError",
    "WindowTooSmallError", "validate_regular", "label_particles",
    "map_to_halfline", "halfline_to_fasep", "make_initial",
    "enumerate_window_configs", "WeakAsymParams", "weak_asym_params",
    "Transition", "Trajectory", "TruncationBreachError",
    "enabled_transitions_fasep", "enabled_transitions_asep",
    "apply_transition", "simulate_ctmc", "generator_apply_pointwise",
    "generator_apply_exact", "HeightField", "height_field", "HopfColeField",
    "hopf_cole", "laplacian_mu", "laplacian_mu_array", "RescaledField",
    "rescale", "TestFunction", "smooth_test_functions", "pairing_eps",
    "corrected_test_function", "MartingaleDiag", "qv_rate_exact",
    "qv_weak_asym_expansion", "martingale_residual",
    "discrete_heat_residual", "InstrumentedRun", "instrumented_run",
    "QuadratureConvergenceError", "TailNotCertifiedError",
    "RobinKernelSpec", "fullline_kernel", "robin_kernel", "robin_row",
    "robin_matrix", "kernel_table_rows", "green_exact",
    "green_matrix_solve", "green_cancellation", "green_cancellation_matrix",
    "first_moment_exact", "first_moment_convolution", "first_moment_scaled",
    "dirichlet_kernel", "d_dirichlet_kernel", "gt_function",
    "gt_function_quadrature", "second_moment_exact", "NestedContourResult",
    "second_moment_nested", "BoundCheck", "BoundsReport", "BoundsGrid",
    "bounds_suite", "NoiseGrid", "MildSolution", "PicardState", "McResult",
    "sample_noise", "solve_mild", "solve_ensemble", "picard_layers",
    "moment_estimate", "growth_class_diagnostic", "CheckRow",
    "ExperimentConfig", "ExperimentReport", "run_first_moment_convergence",
    "run_second_moment_ratio", "run_martingale_checks",
    "run_intertwining_test", "run_near_equilibrium", "emit_outputs",
    "__version__",
]
