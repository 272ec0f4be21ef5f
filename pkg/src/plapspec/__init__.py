"""Nonlinear spectral decomposition of 1D signals and 2D images built on the
p-Laplacian flow, p in (1, 2), and a fractional-order time transform.

The pipeline: run the flow to extinction, take a right-sided fractional
derivative of order 1/(2-p) + 1 along time, and read off scale content from
the response. Eigenfunctions of the spatial operator concentrate at a single
scale equal to their extinction time, which makes spectra, filters, band
decompositions and exact reconstruction available for generic inputs.
"""

from .eigen import (
    EigenConfig,
    EigenPair,
    analytic_catalog,
    generate_eigenfunction,
    rayleigh_lambda,
    rescale_contrast,
    residual,
    tile_to_2d,
)
from .errors import (
    ConvergenceError,
    DegenerateFieldError,
    GridError,
    InputError,
    InstabilityError,
    ParameterError,
    PlapspecError,
)
from .flow import (
    FlowConfig,
    FlowTrajectory,
    analytic_flow_solution,
    decay_profile,
    extinction_time,
    run_normalized_flow,
    run_p_flow,
)
from .fraccalc import (
    TimeSeries,
    ftfc_roundtrip,
    gl_weights,
    grunwald_letnikov_right,
    riemann_liouville_derivative_right,
    riemann_liouville_integral,
)
from .grid import (
    Field,
    PLaplacianOperator,
    VectorField,
    divergence,
    gradient,
    gradient_p_norm,
    inner,
    norm,
    p_laplacian,
    project_kernel_orthogonal,
)
from .transform import (
    FilterSpec,
    SpectralField,
    Spectrum,
    apply_filter,
    band_decompose,
    band_decompose_at_times,
    band_discrepancy_report,
    eigenfunction_transform_analytic,
    flow_spectrum,
    inverse_transform,
    p_transform,
    reconstruct_from_trajectory,
    spectrum,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # errors
    "PlapspecError",
    "InputError",
    "ParameterError",
    "GridError",
    "DegenerateFieldError",
    "InstabilityError",
    "ConvergenceError",
    # grid
    "Field",
    "VectorField",
    "gradient",
    "divergence",
    "p_laplacian",
    "PLaplacianOperator",
    "inner",
    "norm",
    "project_kernel_orthogonal",
    "gradient_p_norm",
    # fraccalc
    "TimeSeries",
    "gl_weights",
    "grunwald_letnikov_right",
    "riemann_liouville_integral",
    "riemann_liouville_derivative_right",
    "ftfc_roundtrip",
    # flow
    "FlowConfig",
    "FlowTrajectory",
    "run_p_flow",
    "run_normalized_flow",
    "decay_profile",
    "extinction_time",
    "analytic_flow_solution",
    # eigen
    "EigenPair",
    "EigenConfig",
    "rayleigh_lambda",
    "residual",
    "generate_eigenfunction",
    "analytic_catalog",
    "tile_to_2d",
    "rescale_contrast",
    # transform
    "SpectralField",
    "Spectrum",
    "FilterSpec",
    "p_transform",
    "inverse_transform",
    "spectrum",
    "eigenfunction_transform_analytic",
    "apply_filter",
    "band_decompose",
    "band_decompose_at_times",
    "reconstruct_from_trajectory",
    "flow_spectrum",
    "band_discrepancy_report",
]
