"""Energy functionals, the Nehari-type partition, and the sharp constants.

The space splits by the sign of

    g(u) = hs_norm2(u) - (2*_s - 1) * sup(a) * lp_norm(u, 2*_s)^(2*_s)

into the inner region U1 (g > 0, plus u = 0), the separating set U (g = 0),
and the outer region U2 (g < 0).  Along every ray t -> t*u the map g(t u) is
strictly concave with g(0) = 0, so each nonzero u has a unique positive
Nehari scale t(u) with t(u) u on U.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, _check_same_grid
from .spectral import (
    DegenerateFieldError,
    FracParams,
    dual_norm,
    dual_pairing,
    frac_laplacian,
    hs_norm2,
    integrate,
    lp_norm,
    riesz_inverse,
)


@dataclass
class ProblemData:
    """One instance (s, a, f) of the forced critical equation on a grid."""

    params: FracParams
    a: Field
    f: Field

    def __post_init__(self):
        _check_same_grid(self.a, self.f)
        if self.a.grid.dimension != self.params.dimension:
            raise ValueError("grid dimension does not match params")
        if np.any(self.a.values <= 0):
            raise ValueError("coefficient a must be positive everywhere")
        if np.any(self.f.values < 0):
            raise ValueError("forcing f must be nonnegative")
        flat_idx = int(np.argmax(self.a.values))  # lowest C-order index wins ties
        idx = np.unravel_index(flat_idx, self.a.grid.shape)
        ax = self.a.grid.axis_coords()
        object.__setattr__(self, "a_sup", float(self.a.values[idx]))
        object.__setattr__(self, "a_argmax", tuple(float(ax[i]) for i in idx))

    @property
    def grid(self) -> GridSpec:
        return self.a.grid

    def hypothesis_a_ok(self, boundary_tol: float = 0.05) -> bool:
        """a >= 1 everywhere and a -> 1 toward the box boundary."""
        if np.any(self.a.values < 1.0 - 1e-12):
            return False
        d = self.grid.periodic_distance((0.0,) * self.grid.dimension)
        shell = d >= 0.9 * self.grid.half_length
        excess = np.max(np.abs(self.a.values[shell] - 1.0)) if shell.any() else 0.0
        span = max(self.a_sup - 1.0, 1.0)
        return bool(excess <= boundary_tol * span + 1e-12)

    def hypothesis_f_ok(self) -> bool:
        """f nonnegative and nontrivial."""
        return bool(np.any(self.f.values > 0))


@dataclass(frozen=True)
class RegionTag:
    region: str  # "U1" | "U_boundary" | "U2"
    g: float
    tol: float


def u_plus(u: Field) -> np.ndarray:
    return np.maximum(u.values, 0.0)


def u_minus(u: Field) -> np.ndarray:
    return np.maximum(-u.values, 0.0)


def energy_bar(d: ProblemData, u: Field) -> float:
    """Free energy with |u|^(2*_s) in the potential term."""
    pot = integrate(Field(u.grid, d.a.values * np.abs(u.values) ** d.params.two_star))
    return 0.5 * hs_norm2(u, d.params) - pot / d.params.two_star - dual_pairing(d.f, u)


def energy_I(d: ProblemData, u: Field) -> float:
    """Working energy with the positive part u_+^(2*_s) (critical points are nonnegative)."""
    pot = integrate(Field(u.grid, d.a.values * u_plus(u) ** d.params.two_star))
    return 0.5 * hs_norm2(u, d.params) - pot / d.params.two_star - dual_pairing(d.f, u)


def j_tilde(d: ProblemData, u: Field) -> float:
    """Comparison energy with a replaced by sup(a) and |u| in the potential."""
    q = d.params.two_star
    return (
        0.5 * hs_norm2(u, d.params)
        - (d.a_sup / q) * lp_norm(u, q) ** q
        - dual_pairing(d.f, u)
    )


def j_tilde_ray_derivative(d: ProblemData, u: Field) -> float:
    """d/dt j_tilde(t u) at t = 1 (solver diagnostic; >= alpha > 0 on U)."""
    q = d.params.two_star
    return (
        hs_norm2(u, d.params)
        - d.a_sup * lp_norm(u, q) ** q
        - dual_pairing(d.f, u)
    )


def gradient_I(d: ProblemData, u: Field):
    """Euler-Lagrange residual of energy_I.

    Returns (raw_dual, preconditioned, dual_res) with
    raw_dual = A_s u - a u_+^(2*_s-1) - f, preconditioned = riesz_inverse of it,
    and dual_res its norm in the dual of the homogeneous space.  dual_res
    vanishes exactly at critical points of energy_I.
    """
    p = d.params
    raw = frac_laplacian(u, p) - Field(
        u.grid, d.a.values * u_plus(u) ** (p.two_star - 1.0) + d.f.values
    )
    return raw, riesz_inverse(raw, p), dual_norm(raw, p)


def g_value(d: ProblemData, u: Field) -> float:
    q = d.params.two_star
    return hs_norm2(u, d.params) - (q - 1.0) * d.a_sup * lp_norm(u, q) ** q


def classify(d: ProblemData, u: Field, tol: float | None = None) -> RegionTag:
    """Region of u; the tolerance band defaults to 1e-8 * hs_norm2(u)."""
    nrm2 = hs_norm2(u, d.params)
    if nrm2 == 0.0:
        return RegionTag("U1", 0.0, 0.0)
    if tol is None:
        tol = 1e-8 * nrm2
    g = g_value(d, u)
    if g > tol:
        return RegionTag("U1", g, tol)
    if g < -tol:
        return RegionTag("U2", g, tol)
    return RegionTag("U_boundary", g, tol)


def nehari_scale(d: ProblemData, u: Field) -> float:
    """Unique t > 0 with g(t u) = 0."""
    q = d.params.two_star
    nrm2 = hs_norm2(u, d.params)
    if nrm2 <= 0:
        raise DegenerateFieldError("degenerate-field: cannot project a constant onto U")
    denom = (q - 1.0) * d.a_sup * lp_norm(u, q) ** q
    return (nrm2 / denom) ** (1.0 / (q - 2.0))


def c0_constant(d: ProblemData) -> float:
    """(4s/(N+2s)) * ((2*_s-1) sup a)^(-(N-2s)/(4s))."""
    n, s = d.params.dimension, d.params.s
    q = d.params.two_star
    return (4.0 * s / (n + 2.0 * s)) * ((q - 1.0) * d.a_sup) ** (-(n - 2.0 * s) / (4.0 * s))


def phi(t, p: FracParams):
    """(s/N) t^((N+2s)/(2s)) - t^2/2 + 1/2*_s; phi(1) = 0 for every (N, s)."""
    n, s = p.dimension, p.s
    t = np.asarray(t, dtype=float)
    out = (s / n) * t ** ((n + 2.0 * s) / (2.0 * s)) - 0.5 * t ** 2 + 1.0 / p.two_star
    return float(out) if out.ndim == 0 else out


def alpha_root(p: FracParams, tol: float = 1e-12) -> float:
    """Second zero alpha > 1 of phi, by bisection with a doubling bracket."""
    lo = 1.0 + 1e-6
    hi = 2.0
    guard = 0
    while phi(hi, p) <= 0:
        hi *= 2.0
        guard += 1
        if guard > 200:
            raise RuntimeError("failed to bracket the second zero of phi")
    if phi(lo, p) >= 0:
        raise RuntimeError("phi is not negative just above 1; invalid (N, s)?")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi(mid, p) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def r1_radius(d: ProblemData, s_num: float) -> float:
    """Convexity-ball radius ((2*_s-1) sup a)^(-1/(2*_s-2)) * S^(N/(4s))."""
    q = d.params.two_star
    n, s = d.params.dimension, d.params.s
    return ((q - 1.0) * d.a_sup) ** (-1.0 / (q - 2.0)) * s_num ** (n / (4.0 * s))


def smallness_threshold(d: ProblemData, s_num: float) -> float:
    n, s = d.params.dimension, d.params.s
    return c0_constant(d) * s_num ** (n / (4.0 * s))


def check_smallness(d: ProblemData, s_num: float) -> dict:
    """Is ||f|| below the threshold that guarantees the first solution?"""
    lhs = dual_norm(d.f, d.params)
    rhs = smallness_threshold(d, s_num)
    return {
        "ok": bool(lhs < rhs),
        "lhs": lhs,
        "rhs": rhs,
        "f_nontrivial": d.hypothesis_f_ok(),
    }
