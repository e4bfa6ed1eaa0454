"""Morrey-norm machinery and the bubble-extraction loop.

A near-critical field is peeled into a remainder plus finitely many rescaled
copies of the calibrated bubble: locate the concentration with the scale-
weighted ball functional Q(x, R) = R^(-2s) * integral over B(x, R) of v^2,
fit a bubble template by scale/center least squares in the Sobolev metric,
subtract, and repeat until the Morrey norm of the working field falls below
the stopping threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .bubbles import BubbleParams, bubble, calibrate, separation_measure
from .functionals import ProblemData
from .grid import Field, GridSpec
from .spectral import FracParams, hs_norm2, lp_norm


@dataclass(frozen=True)
class MorreySpec:
    """Exponent r on the scale-invariant Morrey line gamma/r = (N-2s)/2."""

    params: FracParams
    exponent: float = 2.0
    ladder_ratio: float = 2.0
    stride: int = 1

    def __post_init__(self):
        if not 1.0 <= self.exponent < self.params.two_star:
            raise ValueError("exponent must lie in [1, 2*_s)")
        if self.ladder_ratio <= 1.0:
            raise ValueError("ladder_ratio must exceed 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def gamma(self) -> float:
        return self.exponent * (self.params.dimension - 2.0 * self.params.s) / 2.0


def _ball_means(w: np.ndarray, grid: GridSpec, radius: float) -> np.ndarray:
    """Mean of w over the minimal-image ball of the given radius, all centers."""
    m = grid.points_per_axis
    h = grid.spacing
    if grid.dimension == 1:
        k = int(np.floor(radius / h + 1e-9))
        if 2 * k + 1 >= m:
            return np.full(m, w.mean())
        c = np.cumsum(np.concatenate([w, w, w]))
        idx = m + np.arange(m)
        tot = c[idx + k] - c[idx - k - 1]
        return tot / (2 * k + 1)
    ind = (grid.periodic_distance((0.0,) * grid.dimension) <= radius + 1e-9 * h).astype(float)
    count = ind.sum()
    if count >= grid.num_points:
        return np.full(grid.shape, w.mean())
    conv = np.real(np.fft.ifftn(np.fft.fftn(w) * np.fft.fftn(ind)))
    return np.maximum(conv, 0.0) / count


def _ladder(grid: GridSpec, ratio: float) -> list:
    rungs = [grid.spacing]
    while rungs[-1] < 2.0 * grid.half_length:
        rungs.append(rungs[-1] * ratio)
    return rungs


def _scan(values: np.ndarray, grid: GridSpec, radii, weight_fn, stride: int):
    """Max of weight_fn(R) * ball_mean over (strided centers) x radii.

    Ties break toward the smallest radius, then the lowest C-order center
    index.  A stride-1 refinement pass around the coarse argmax follows when
    stride > 1.
    """
    best_val, best_center_idx, best_radius = -np.inf, None, None
    slicer = (slice(None, None, stride),) * grid.dimension
    for radius in radii:
        field_vals = weight_fn(radius) * _ball_means(values, grid, radius)
        sub = field_vals[slicer]
        i = int(np.argmax(sub))
        v = float(sub.flat[i])
        if v > best_val:
            idx = np.unravel_index(i, sub.shape)
            best_val = v
            best_center_idx = tuple(j * stride for j in idx)
            best_radius = radius
    if stride > 1 and best_center_idx is not None:
        lo = [max(0, j - stride) for j in best_center_idx]
        hi = [min(grid.points_per_axis, j + stride + 1) for j in best_center_idx]
        window = tuple(slice(a, b) for a, b in zip(lo, hi))
        for radius in radii:
            field_vals = weight_fn(radius) * _ball_means(values, grid, radius)
            sub = field_vals[window]
            i = int(np.argmax(sub))
            v = float(sub.flat[i])
            if v > best_val:
                idx = np.unravel_index(i, sub.shape)
                best_val = v
                best_center_idx = tuple(a + j for a, j in zip(lo, idx))
                best_radius = radius
    return best_val, best_center_idx, best_radius


def _refined_radii(radius: float, grid: GridSpec) -> list:
    out = []
    for mth in range(-3, 4):
        r = radius * 2.0 ** (mth / 4.0)
        if grid.spacing * 0.999 <= r <= 2.0 * grid.half_length * 1.001:
            out.append(r)
    return out


def morrey_norm(u: Field, ms: MorreySpec) -> float:
    """sup over sampled centers and the dyadic ladder of (R^gamma avg_B |u|^r)^(1/r)."""
    w = np.abs(u.values) ** ms.exponent
    grid = u.grid
    weight = lambda radius: radius ** ms.gamma
    radii = _ladder(grid, ms.ladder_ratio)
    val, _, radius = _scan(w, grid, radii, weight, ms.stride)
    val2, _, _ = _scan(w, grid, _refined_radii(radius, grid), weight, ms.stride)
    return max(val, val2) ** (1.0 / ms.exponent)


def interpolation_check(u: Field, ms: MorreySpec, theta: float) -> float:
    """Ratio lp(u, 2*_s) / (hs_norm2(u)^(theta/2) * morrey(u)^(1-theta))."""
    q = ms.params.two_star
    if not (2.0 / q <= theta < 1.0):
        raise ValueError("theta must lie in [2/2*_s, 1)")
    nrm2 = hs_norm2(u, ms.params)
    if nrm2 <= 0:
        raise ValueError("degenerate field")
    return lp_norm(u, q) / (nrm2 ** (theta / 2.0) * morrey_norm(u, ms) ** (1.0 - theta))


def concentration_search(v: Field, p: FracParams, stride: int = 1):
    """Argmax of Q(x, R) = R^(-2s) * integral over B(x, R) of v^2.

    Returns (center, radius, value) with deterministic tie-breaking (smallest
    radius, then lowest lexicographic center index).
    """
    grid = v.grid
    w = v.values ** 2
    if not np.any(w > 0):
        raise ValueError("degenerate field")
    cellcount = lambda radius: np.sum(
        grid.periodic_distance((0.0,) * grid.dimension) <= radius + 1e-9 * grid.spacing
    )
    def weight(radius):
        return radius ** (-2.0 * p.s) * grid.cell_volume * cellcount(radius)

    radii = _ladder(grid, 2.0)
    val, idx, radius = _scan(w, grid, radii, weight, stride)
    val2, idx2, radius2 = _scan(w, grid, _refined_radii(radius, grid), weight, stride)
    if val2 > val:
        val, idx, radius = val2, idx2, radius2
    ax = grid.axis_coords()
    center = tuple(float(ax[i]) for i in idx)
    return center, float(radius), float(val)


@dataclass
class ExtractedBubble:
    center: tuple
    scale: float
    coefficient: float        # pinned a(x)^(-(N-2s)/(4s))
    amplitude_ratio: float    # fitted free amplitude / pinned coefficient
    energy: float             # a(x)^(-(N-2s)/(2s)) * energy_ref of the calibrated bubble

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "scale": self.scale,
            "coefficient": self.coefficient,
            "amplitude_ratio": self.amplitude_ratio,
            "energy": self.energy,
        }


@dataclass
class DecompositionResult:
    remainder: Field
    bubbles: list
    residual_history: list
    separations: np.ndarray
    flags: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bubbles": [b.to_dict() for b in self.bubbles],
            "residual_history": list(self.residual_history),
            "separations": self.separations.tolist(),
            "flags": list(self.flags),
            "bubble_count": len(self.bubbles),
        }


class _TemplateFitter:
    """Free-amplitude Sobolev least squares against the calibrated bubble family."""

    def __init__(self, work: Field, p: FracParams, beta: float):
        self.grid = work.grid
        self.p = p
        self.beta = beta
        sym = self.grid.freq_norm() ** (2.0 * p.s)
        self._weighted = sym * np.fft.fftn(work.values)
        self._w = self.grid.cell_volume / self.grid.num_points

    def amplitude_and_score(self, scale: float, center) -> tuple:
        b = bubble(self.grid, self.p, BubbleParams(center=center, scale=scale, amplitude=self.beta))
        bhat = np.fft.fftn(b.values)
        inner = self._w * float(np.real(np.sum(self._weighted * np.conj(bhat))))
        nrm2 = hs_norm2(b, self.p)
        ahat = inner / nrm2
        return ahat, ahat * inner  # score = ahat^2 * ||b||^2

    def score(self, scale: float, center) -> float:
        return self.amplitude_and_score(scale, center)[1]


def _golden_max(fn, lo: float, hi: float, iters: int = 24) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def extract_profiles(
    v: Field,
    d: ProblemData,
    stop_threshold: float | None = None,
    max_bubbles: int = 8,
    fit_tol: float = 0.25,
) -> DecompositionResult:
    """Peel rescaled bubbles off a near-critical field.

    Per round: Morrey stopping test, concentration search, scale/center
    template fit with the amplitude pinned to a(x)^(-(N-2s)/(4s)), subtract.
    A negative or inconsistent fitted amplitude marks the concentration as a
    non-bubble profile ("unfit-profile") and halts the loop.
    """
    p = d.params
    grid = v.grid
    cal = calibrate(grid, p)
    ms = MorreySpec(p, 2.0)
    work = v.copy()
    history = [morrey_norm(work, ms)]
    if stop_threshold is None:
        stop_threshold = 1e-2 * history[0]
    bubbles: list = []
    flags: list = []
    expo = (p.dimension - 2.0 * p.s) / (4.0 * p.s)

    while len(bubbles) < max_bubbles and history[-1] >= stop_threshold:
        center, radius, _ = concentration_search(work, p)
        fitter = _TemplateFitter(work, p, cal.beta)

        scales = radius * np.exp(np.linspace(np.log(1.0 / 32.0), np.log(2.0), 41))
        scales = scales[scales >= 0.5 * grid.spacing]
        scores = [fitter.score(sc, center) for sc in scales]
        lam = float(scales[int(np.argmax(scores))])
        lam = _golden_max(lambda t: fitter.score(np.exp(t), center), np.log(lam / 2), np.log(lam * 2))
        lam = float(np.exp(lam))

        h = grid.spacing
        center = list(center)
        for axis in range(grid.dimension):
            def fn(c_ax, axis=axis):
                trial = list(center)
                trial[axis] = c_ax
                return fitter.score(lam, tuple(trial))
            center[axis] = _golden_max(fn, center[axis] - h, center[axis] + h, iters=18)
        lam = _golden_max(lambda t: fitter.score(np.exp(t), tuple(center)),
                          np.log(lam / 1.5), np.log(lam * 1.5), iters=18)
        lam = float(np.exp(lam))
        center = tuple(center)

        ahat, _ = fitter.amplitude_and_score(lam, center)
        if ahat <= 0:
            flags.append("unfit-profile")
            break
        idx = tuple(
            int(round((c + grid.half_length) / h)) % grid.points_per_axis for c in center
        )
        a_loc = float(d.a.values[idx])
        coeff = a_loc ** (-expo)
        if abs(ahat - coeff) / coeff > fit_tol:
            flags.append("unfit-profile")
            break

        template = bubble(grid, p, BubbleParams(center=center, scale=lam, amplitude=cal.beta))
        candidate = Field(grid, work.values - coeff * template.values)
        new_norm = morrey_norm(candidate, ms)
        if new_norm >= history[-1]:
            flags.append("stalled")
            break
        work = candidate
        history.append(new_norm)
        bubbles.append(
            ExtractedBubble(
                center=center,
                scale=lam,
                coefficient=coeff,
                amplitude_ratio=ahat / coeff,
                energy=a_loc ** (-2.0 * expo) * cal.energy_ref,
            )
        )

    m = len(bubbles)
    seps = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                seps[i, j] = separation_measure(
                    bubbles[i].scale, bubbles[i].center,
                    bubbles[j].scale, bubbles[j].center, grid,
                )
    return DecompositionResult(work, bubbles, history, seps, flags)
