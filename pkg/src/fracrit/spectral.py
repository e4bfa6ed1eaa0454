"""Fourier-multiplier fractional Laplacian and the associated norms/pairings.

Conventions, used consistently everywhere:

* forward operator: exact symbol |xi|^(2s), zero mode annihilated;
* quadratic form: hs_norm2(u) = (h^N / M^N) * sum |xi|^(2s) |u_hat|^2, the
  Plancherel form of <(-Delta)^s u, u> (zero iff u is constant);
* dual pairing: <f, u> = integral of f times the mean-free part of u.  Dual
  elements annihilate constants (there is no zero mode on R^N), which makes
  Cauchy-Schwarz against dual_norm exact and keeps the variational structure
  of the energy functionals nondegenerate on the box;
* dual norm: spectral sum over nonzero modes only;
* inverse: symbol max(|xi|, pi/L)^(-2s) on all modes, so the round trip
  riesz_inverse(frac_laplacian(u)) returns u minus its mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as _gamma

from .grid import Field, GridSpec, _check_same_grid


class DegenerateFieldError(ValueError):
    """Raised when an operation requires a nonconstant, nonzero field."""


@dataclass(frozen=True)
class FracParams:
    """Order s of the operator together with the ambient dimension."""

    dimension: int
    s: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie in (0, 1)")
        if self.dimension <= 2 * self.s:
            raise ValueError("need dimension > 2s")

    @property
    def two_star(self) -> float:
        """Critical exponent 2N/(N-2s)."""
        return 2.0 * self.dimension / (self.dimension - 2.0 * self.s)

    @property
    def bubble_decay(self) -> float:
        """(N-2s)/2, the decay exponent of the extremal profile."""
        return (self.dimension - 2.0 * self.s) / 2.0

    @property
    def kernel_constant(self) -> float:
        """4^s Gamma(N/2+s) / (pi^{N/2} |Gamma(-s)|), the singular-kernel prefactor.

        Reported for reference only; with the spectral normalization it does
        not enter any computed identity.
        """
        n, s = self.dimension, self.s
        return 4.0 ** s * _gamma(n / 2.0 + s) / (np.pi ** (n / 2.0) * abs(_gamma(-s)))


def _check_grid_params(u: Field, p: FracParams):
    if u.grid.dimension != p.dimension:
        raise ValueError("grid dimension does not match FracParams")


@lru_cache(maxsize=32)
def _symbol(grid: GridSpec, two_s: float) -> np.ndarray:
    return grid.freq_norm() ** two_s


@lru_cache(maxsize=32)
def _inv_symbol(grid: GridSpec, two_s: float) -> np.ndarray:
    return np.maximum(grid.freq_norm(), grid.min_freq()) ** (-two_s)


@lru_cache(maxsize=32)
def _dual_weight(grid: GridSpec, two_s: float) -> np.ndarray:
    w = _inv_symbol(grid, two_s).copy()
    w.flat[0] = 0.0
    return w


def _fft(u: Field) -> np.ndarray:
    return np.fft.fftn(u.values)


def _spectral_weight(grid: GridSpec) -> float:
    # h^N Plancherel: integral |u|^2 = (h^N/M^N) sum |u_hat|^2
    return grid.cell_volume / grid.num_points


def frac_laplacian(u: Field, p: FracParams) -> Field:
    """Apply the multiplier |xi|^(2s); the zero mode maps to zero."""
    _check_grid_params(u, p)
    sym = _symbol(u.grid, 2.0 * p.s)
    return Field(u.grid, np.real(np.fft.ifftn(sym * _fft(u))))


def riesz_inverse(f: Field, p: FracParams) -> Field:
    """Apply max(|xi|, pi/L)^(-2s); inverts frac_laplacian away from the zero mode."""
    _check_grid_params(f, p)
    inv = _inv_symbol(f.grid, 2.0 * p.s)
    return Field(f.grid, np.real(np.fft.ifftn(inv * _fft(f))))


def hs_inner(u: Field, v: Field, p: FracParams) -> float:
    """Homogeneous-Sobolev bilinear form sum |xi|^(2s) u_hat conj(v_hat)."""
    _check_same_grid(u, v)
    _check_grid_params(u, p)
    sym = _symbol(u.grid, 2.0 * p.s)
    w = _spectral_weight(u.grid)
    return w * float(np.real(np.sum(sym * _fft(u) * np.conj(_fft(v)))))


def hs_norm2(u: Field, p: FracParams) -> float:
    _check_grid_params(u, p)
    sym = _symbol(u.grid, 2.0 * p.s)
    return _spectral_weight(u.grid) * float(np.sum(sym * np.abs(_fft(u)) ** 2))


def hs_norm(u: Field, p: FracParams) -> float:
    return float(np.sqrt(max(hs_norm2(u, p), 0.0)))


def integrate(u: Field) -> float:
    """Box quadrature h^N sum (spectrally accurate for smooth periodic fields)."""
    return u.grid.cell_volume * float(u.values.sum())


def lp_norm(u: Field, power: float) -> float:
    """(integral |u|^p)^(1/p) by box quadrature."""
    if power < 1:
        raise ValueError("p must be >= 1")
    return (u.grid.cell_volume * float(np.sum(np.abs(u.values) ** power))) ** (1.0 / power)


def dual_pairing(f: Field, u: Field) -> float:
    """<f, u> = integral of f * (u - mean u); dual elements annihilate constants."""
    _check_same_grid(f, u)
    return integrate(Field(f.grid, f.values * (u.values - u.values.mean())))


def dual_norm(f: Field, p: FracParams) -> float:
    """Norm of f as a functional on the homogeneous space: spectral sum over k != 0."""
    _check_grid_params(f, p)
    w = _dual_weight(f.grid, 2.0 * p.s)
    val = _spectral_weight(f.grid) * float(np.sum(w * np.abs(_fft(f)) ** 2))
    return float(np.sqrt(max(val, 0.0)))


def require_nondegenerate(u: Field, p: FracParams, tol: float = 0.0):
    if hs_norm2(u, p) <= tol:
        raise DegenerateFieldError("field is constant on the box")
