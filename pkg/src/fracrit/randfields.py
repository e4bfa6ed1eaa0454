"""Seeded random and analytic test fields."""

from __future__ import annotations

import numpy as np

from .grid import Field, GridSpec


def spectral_noise(grid: GridSpec, rng: np.random.Generator, decay: float) -> Field:
    """Mean-free random field with |u_hat(xi)| ~ (1 + |xi|)^(-decay).

    The prescribed decay keeps realizations smooth enough for quadrature;
    the zero mode is dropped so the samples live in the homogeneous class.
    """
    amp = (1.0 + grid.freq_norm()) ** (-decay)
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    vals = np.real(np.fft.ifftn(amp * z))
    vals -= vals.mean()
    scale = np.max(np.abs(vals))
    if scale > 0:
        vals /= scale
    return Field(grid, vals)


def gaussian_bump(grid: GridSpec, center=None, width: float = 1.0, amplitude: float = 1.0) -> Field:
    """amplitude * exp(-d^2 / (2 width^2)) with minimal-image distance."""
    if center is None:
        center = (0.0,) * grid.dimension
    d = grid.periodic_distance(center)
    return Field(grid, amplitude * np.exp(-(d ** 2) / (2.0 * width ** 2)))
