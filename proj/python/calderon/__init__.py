"""Boundary stability laboratory for the complex anisotropic Calderon problem."""

from ._core import (
    CalderonError,
    ConfigError,
    RangeError,
    SingularityError,
    delta_h,
    frequency_window,
    frequency_window_sweep,
    gegenbauer,
    gegenbauer_derivative,
    h_function,
    half_space_inverse_quartic,
    inverse_parts,
    leading_term,
    ode_residual,
    run_cli,
    scalar_dtn,
)

__version__ = "0.1.0"
