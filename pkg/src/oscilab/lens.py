"""Lens transform between the harmonic-oscillator frame and free space,
plus an independent free-space propagator for cross-validation.

The transform sends a function u of internal time s = arctan(2t)/2 to

    u_lens(t, x) = (1 + 4 t^2)^(-d/4) u(s, x / sqrt(1 + 4 t^2)) e^{i |x|^2 t / (1 + 4 t^2)},

an L^2 isometry for each t that intertwines the oscillator flow exp(-isH)
with the free flow exp(it del^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .fields import SpectralField, fourier_transform, inverse_fourier_transform, synthesize
from .hermite import cached_basis

__all__ = [
    "PhysicalFrame",
    "AliasingGuardError",
    "lens_time_map",
    "lens_time_inverse",
    "lens_forward",
    "frame_l2_norm",
    "free_propagate",
    "free_propagate_field",
    "free_time_limit",
]

# coefficient magnitude below this fraction of the total norm is treated as
# unoccupied when estimating the data's phase-space extent
BANDWIDTH_RTOL = 1e-9

# chirp-tail truncation target for the enlarged free-propagation span
FREE_TAIL_TOL = 1e-10

DEFAULT_DEGREE_CAP = 1024


class AliasingGuardError(RuntimeError):
    """Requested free evolution would alias on any affordable span."""


@dataclass
class PhysicalFrame:
    """Complex values sampled on a spatial grid at one external time."""

    grid: np.ndarray    # (n_points,) for d = 1, else (n_points, d)
    values: np.ndarray
    time: float

    def __post_init__(self):
        if self.grid.shape[0] != self.values.shape[0]:
            raise ValueError("grid and values must have matching length")


def lens_time_map(t: float) -> float:
    """External to internal time: s = arctan(2t) / 2; monotone, |s| < pi/4."""
    return 0.5 * np.arctan(2.0 * t)


def lens_time_inverse(s: float) -> float:
    """Internal to external time: t = tan(2s) / 2, defined for |s| < pi/4."""
    if abs(s) >= np.pi / 4:
        raise ValueError(f"internal time |s| must be < pi/4, got {s}")
    return 0.5 * np.tan(2.0 * s)


def _scaled_grid(basis, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Audit grid stretched by sqrt(1 + 4 t^2), where the frame has its mass."""
    scale = np.sqrt(1.0 + 4.0 * t * t)
    pts = basis.audit_points()
    scaled = scale * pts
    return (scaled[:, 0] if basis.dim == 1 else scaled), pts


def lens_forward(u_internal: SpectralField, t: float, points: np.ndarray | None = None) -> PhysicalFrame:
    """Lens image at external time t of the field u at internal time arctan(2t)/2.

    The caller supplies the field already at the matching internal time; the
    solver-facing wrapper in the fixed-point module handles the time lookup.
    Off-node synthesis goes through the recurrence, so the x / sqrt(1 + 4t^2)
    resampling is spectrally exact.
    """
    basis = u_internal.basis
    alpha = 1.0 + 4.0 * t * t
    if points is None:
        grid, unscaled = _scaled_grid(basis, t)
    else:
        grid = np.asarray(points, dtype=float)
        unscaled = grid / np.sqrt(alpha)
        if basis.dim == 1:
            unscaled = unscaled.reshape(-1, 1)
    inner = synthesize(u_internal, unscaled)
    x2 = grid**2 if basis.dim == 1 else np.sum(grid**2, axis=1)
    values = alpha ** (-basis.dim / 4.0) * inner * np.exp(1j * x2 * t / alpha)
    return PhysicalFrame(grid=grid, values=values, time=float(t))


def frame_l2_norm(frame: PhysicalFrame) -> float:
    """L^2 norm of a frame on its uniform grid (Riemann sum)."""
    if frame.grid.ndim == 1:
        cell = float(frame.grid[1] - frame.grid[0])
    else:
        axis = np.unique(frame.grid[:, -1])
        cell = float(axis[1] - axis[0]) ** frame.grid.shape[1]
    return float(np.sqrt(cell * np.sum(np.abs(frame.values) ** 2)))


def _effective_degree(u0: SpectralField) -> int:
    mags = np.abs(u0.coeffs)
    total = mags.max()
    if total == 0:
        return 0
    occupied = u0.basis.degrees[mags > BANDWIDTH_RTOL * total]
    return int(occupied.max()) if occupied.size else 0


def _free_span_degree(n_eff: int, t: float, dim: int) -> int:
    """Span needed to hold exp(it del^2) applied to data of degree n_eff.

    The free flow is the metaplectic operator of the shear (x, xi) ->
    (x + 2 t xi, xi); its largest singular value squared is
    sigma2 = 1 + 2 t^2 + 2 |t| sqrt(1 + t^2), which dilates the occupied
    phase-space disk, and the expansion tail beyond that decays geometrically
    with ratio rho = (sigma2 - 1) / (sigma2 + 1) per mode pair.
    """
    a = 2.0 * abs(t)
    sigma2 = 0.5 * (2.0 + a * a + np.sqrt((2.0 + a * a) ** 2 - 4.0))
    center = sigma2 * (2.0 * n_eff + dim) / 2.0
    rho = (sigma2 - 1.0) / (sigma2 + 1.0)
    if rho <= 0:
        margin = 8
    else:
        margin = int(np.ceil(2.0 * np.log(1.0 / FREE_TAIL_TOL) / np.log(1.0 / rho))) + 8
    return int(np.ceil(center)) + margin


def free_time_limit(u0: SpectralField, degree_cap: int = DEFAULT_DEGREE_CAP) -> float:
    """Largest |t| the guard admits for this data under the degree cap."""
    n_eff = _effective_degree(u0)
    lo, hi = 0.0, 1.0
    while _free_span_degree(n_eff, hi, u0.basis.dim) <= degree_cap and hi < 1e6:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _free_span_degree(n_eff, mid, u0.basis.dim) <= degree_cap:
            lo = mid
        else:
            hi = mid
    return lo


def free_propagate_field(u0: SpectralField, t: float, degree_cap: int = DEFAULT_DEGREE_CAP) -> SpectralField:
    """exp(it del^2) u0 as a spectral field on an internally enlarged span.

    Realized as the Fourier multiplier e^{-it |xi|^2}: transform, multiply on
    the quadrature grid, project back, inverse transform.  The span is grown
    until the chirp tail falls below FREE_TAIL_TOL; if that would exceed
    degree_cap the call fails loudly rather than aliasing silently.
    """
    if t == 0:
        return u0.copy()
    n_eff = _effective_degree(u0)
    need = _free_span_degree(n_eff, t, u0.basis.dim)
    if need > degree_cap:
        raise AliasingGuardError(
            f"free propagation to t={t} needs degree {need} > cap {degree_cap} "
            f"(data degree {n_eff}); max admissible |t| is {free_time_limit(u0, degree_cap):.4g}"
        )
    dim = u0.basis.dim
    big_degree = max(need, u0.basis.max_degree)
    big_degree = 32 * int(np.ceil((big_degree + 1) / 32))  # quantize to bound the basis cache
    est_size = comb(big_degree + dim, dim) * (2 * (big_degree + 1)) ** dim
    if est_size > 5 * 10**7:
        raise AliasingGuardError(
            f"free propagation span (degree {big_degree}, dim {dim}) is too large to tabulate"
        )
    big = cached_basis(dim, big_degree, 2 * (big_degree + 1))
    coeffs = np.zeros(big.size, dtype=complex)
    for k, n in enumerate(u0.basis.indices):
        coeffs[big.index_position(n)] = u0.coeffs[k]
    u_big = SpectralField(big, coeffs)

    uhat = fourier_transform(u_big)
    vals = synthesize(uhat)
    xi2 = np.sum(big.nodes**2, axis=1)
    vals = np.exp(-1j * t * xi2) * vals
    projected = (big.eval_table * big.weights) @ vals
    return inverse_fourier_transform(SpectralField(big, projected))


def free_propagate(
    u0: SpectralField,
    t: float,
    points: np.ndarray | None = None,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> PhysicalFrame:
    """exp(it del^2) u0 sampled on a spatial grid (default: scaled audit grid)."""
    out = free_propagate_field(u0, t, degree_cap)
    if points is None:
        grid, _ = _scaled_grid(u0.basis, t)
    else:
        grid = np.asarray(points, dtype=float)
    pts = grid.reshape(-1, 1) if u0.basis.dim == 1 else grid
    return PhysicalFrame(grid=grid, values=synthesize(out, pts), time=float(t))
