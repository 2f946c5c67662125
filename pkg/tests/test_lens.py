import numpy as np
import pytest

from oscilab.fields import SpectralField, propagate_linear, synthesize, unit_field
from oscilab.hermite import build_basis
from oscilab.lens import (
    AliasingGuardError,
    frame_l2_norm,
    free_propagate,
    free_propagate_field,
    free_time_limit,
    lens_forward,
    lens_time_inverse,
    lens_time_map,
)


def test_time_map_examples():
    assert lens_time_map(0.0) == 0.0
    assert abs(lens_time_inverse(np.pi / 8) - 0.5) < 1e-14
    # monotone and bounded by pi/4
    ts = np.linspace(0, 1000, 200)
    ss = np.array([lens_time_map(t) for t in ts])
    assert np.all(np.diff(ss) > 0)
    assert ss[-1] < np.pi / 4
    for t in (0.0, 0.3, 2.0, 50.0):
        assert abs(lens_time_inverse(lens_time_map(t)) - t) < 1e-9 * max(1.0, t)
    with pytest.raises(ValueError):
        lens_time_inverse(np.pi / 4)


def test_lens_identity_at_zero(basis64, rng):
    c = rng.normal(size=basis64.size) + 1j * rng.normal(size=basis64.size)
    u = SpectralField(basis64, c / np.linalg.norm(c))
    frame = lens_forward(u, 0.0)
    direct = synthesize(u, frame.grid)
    assert np.max(np.abs(frame.values - direct)) < 1e-13


def test_lens_isometry(basis64, rng):
    c = rng.normal(size=basis64.size) + 1j * rng.normal(size=basis64.size)
    u = SpectralField(basis64, c / np.linalg.norm(c))
    for t in (0.1, 0.5, 2.0, 10.0):
        assert abs(frame_l2_norm(lens_forward(u, t)) - 1.0) <= 1e-10


def test_conjugation_with_free_flow(basis64):
    # harmonic flow carried through the lens equals the free flow
    u0 = unit_field(basis64, 3)
    for t in (0.25, 0.5, 1.0):
        s = lens_time_map(t)
        frame = lens_forward(propagate_linear(u0, s), t)
        free = free_propagate(u0, t, points=frame.grid)
        dx = float(frame.grid[1] - frame.grid[0])
        err = np.sqrt(dx * np.sum(np.abs(frame.values - free.values) ** 2))
        assert err <= 1e-6


def test_free_propagate_identity_and_isometry(basis64):
    u0 = unit_field(basis64, 3)
    assert np.array_equal(free_propagate_field(u0, 0.0).coeffs, u0.coeffs)
    out = free_propagate_field(u0, 0.3)
    assert abs(out.l2_norm - 1.0) <= 1e-8


def test_free_gaussian_spreading(basis64):
    frame = free_propagate(unit_field(basis64, 0), 0.5)
    expected = np.pi**-0.25 * (1 + 4 * 0.25) ** -0.25
    assert abs(np.abs(frame.values).max() - expected) < 1e-8


def test_aliasing_guard(basis64):
    u0 = unit_field(basis64, 3)
    tmax = free_time_limit(u0)
    with pytest.raises(AliasingGuardError):
        free_propagate_field(u0, 2.0 * tmax + 1.0)
    # inside the guard everything stays finite and isometric
    out = free_propagate_field(u0, 0.9 * tmax)
    assert abs(out.l2_norm - 1.0) <= 1e-8


def test_lens_on_given_points(basis32):
    u = unit_field(basis32, 0)
    pts = np.linspace(-3, 3, 11)
    frame = lens_forward(u, 0.7, points=pts)
    assert frame.grid.shape == (11,)
    alpha = 1 + 4 * 0.49
    inner = synthesize(u, pts / np.sqrt(alpha))
    expected = alpha**-0.25 * inner * np.exp(1j * pts**2 * 0.7 / alpha)
    assert np.max(np.abs(frame.values - expected)) < 1e-13
