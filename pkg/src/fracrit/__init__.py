"""fracrit: pseudospectral toolkit for the forced critical fractional equation.

Periodic-box discretization of (-Delta)^s u = a(x) u_+^(2*_s - 1) + f with
bubble calibration, Morrey-based profile extraction, and the two-solution
solver (ball-constrained descent plus a numerical mountain pass).
"""

__version__ = "0.1.0"

from .grid import Field, GridSpec, load_field, save_field
from .spectral import (
    DegenerateFieldError,
    FracParams,
    dual_norm,
    dual_pairing,
    frac_laplacian,
    hs_inner,
    hs_norm,
    hs_norm2,
    integrate,
    lp_norm,
    riesz_inverse,
)
from .bubbles import (
    BubbleParams,
    Calibration,
    bubble,
    calibrate,
    calibrate_amplitude,
    rescale,
    sobolev_constant,
    synth_ps_sequence,
)
from .functionals import (
    ProblemData,
    RegionTag,
    alpha_root,
    c0_constant,
    check_smallness,
    classify,
    energy_I,
    energy_bar,
    g_value,
    gradient_I,
    j_tilde,
    nehari_scale,
    phi,
    r1_radius,
)
from .decompose import (
    DecompositionResult,
    MorreySpec,
    concentration_search,
    extract_profiles,
    interpolation_check,
    morrey_norm,
)
from .solver import (
    DescentConfig,
    MountainPassResult,
    NoDescentError,
    PathState,
    SolveReport,
    estimate_c1,
    find_first_solution,
    mountain_pass,
    select_t0,
    verify_solution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
