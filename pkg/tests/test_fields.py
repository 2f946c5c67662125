import numpy as np
import pytest
from scipy.integrate import quad

from oscilab.fields import (
    NormSpec,
    SpectralField,
    classical_sobolev_norm,
    derivative_coefficients,
    embed_field,
    evaluate_norm,
    fourier_transform,
    fractional_laplacian_L2_norm,
    harmonic_sobolev_norm,
    propagate_linear,
    rayleigh_quotient,
    smoothing_functional,
    spacetime_norm,
    unit_field,
    weighted_x_L2_norm,
)
from oscilab.hermite import build_basis


def random_unit_field(basis, rng):
    c = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    return SpectralField(basis, c / np.linalg.norm(c))


# ---------------------------------------------------------------- norms


def test_harmonic_sobolev_examples(basis64):
    assert abs(harmonic_sobolev_norm(unit_field(basis64, 0), 2.0) - 1.0) < 1e-14
    assert abs(harmonic_sobolev_norm(unit_field(basis64, 5), 1.0) - np.sqrt(11)) < 1e-12


def test_harmonic_sobolev_s0_is_l2(basis64, rng):
    u = random_unit_field(basis64, rng)
    assert abs(harmonic_sobolev_norm(u, 0.0) - u.l2_norm) < 1e-14


def test_weighted_x_examples(basis64):
    h0 = unit_field(basis64, 0)
    assert abs(weighted_x_L2_norm(h0, 0.0) - 1.0) < 1e-12
    # integral (1 + x^2) h_0^2 = 1 + 1/2 from the Gaussian second moment
    assert abs(weighted_x_L2_norm(h0, 1.0) - np.sqrt(1.5)) < 1e-12


def test_weighted_x_monotone_in_s(basis64, rng):
    u = random_unit_field(basis64, rng)
    values = [weighted_x_L2_norm(u, s) for s in (0.0, 0.5, 1.0, 2.0)]
    assert all(values[i] <= values[i + 1] + 1e-12 for i in range(3))


def test_fractional_laplacian_examples(basis64):
    # || d/dx h_n ||^2 = (2n+1)/2 by the x <-> xi symmetry
    for n in (0, 3, 10):
        got = fractional_laplacian_L2_norm(unit_field(basis64, n), 1.0)
        assert abs(got - np.sqrt((2 * n + 1) / 2.0)) < 1e-10
    # Gaussian fourth moment: ||x^2 h_0|| = sqrt(3)/2
    assert abs(fractional_laplacian_L2_norm(unit_field(basis64, 0), 2.0) - np.sqrt(3) / 2) < 1e-12


def test_gradient_ratio_invsqrt2():
    basis = build_basis(1, 101, 204)
    for n in (0, 17, 50, 100):
        lam = np.sqrt(2.0 * n + 1.0)
        ratio = fractional_laplacian_L2_norm(unit_field(basis, n), 1.0) / lam
        assert abs(ratio - 2.0**-0.5) < 1e-6


def test_classical_sobolev(basis64, rng):
    h0 = unit_field(basis64, 0)
    assert abs(classical_sobolev_norm(h0, 0.0) - 1.0) < 1e-12  # H^0 is L^2
    u = random_unit_field(basis64, rng)
    assert classical_sobolev_norm(u, 1.0) >= u.l2_norm
    assert abs(classical_sobolev_norm(SpectralField(basis64, 2 * u.coeffs), 1.0)
               - 2 * classical_sobolev_norm(u, 1.0)) < 1e-10


def test_classical_dominated_by_weighted_plus_fractional(basis64):
    for n in range(0, 51, 10):
        u = unit_field(basis64, n)
        lhs = classical_sobolev_norm(u, 0.5)
        rhs = np.sqrt(2) * (weighted_x_L2_norm(u, 0.5) + fractional_laplacian_L2_norm(u, 0.5))
        assert lhs <= rhs + 1e-12


def test_norm_equivalence_bracket(basis64):
    # combined classical quantity vs harmonic Sobolev stays in [0.5, 3]
    basis = build_basis(1, 101, 204)
    for s in (0.5, 1.0):
        for n in range(0, 101, 5):
            u = unit_field(basis, n)
            num = fractional_laplacian_L2_norm(u, s) + weighted_x_L2_norm(u, s)
            ratio = num / harmonic_sobolev_norm(u, s)
            assert 0.5 <= ratio <= 3.0


def test_norm_equivalence_refinement_stable():
    # the bracket values are quadrature artifacts; they must not move under
    # grid refinement
    for quad in (204, 408):
        basis = build_basis(1, 101, quad)
        u = unit_field(basis, 33)
        val = fractional_laplacian_L2_norm(u, 0.5) + weighted_x_L2_norm(u, 0.5)
        if quad == 204:
            first = val
    assert abs(first - val) / val < 0.05


# ------------------------------------------------------- propagator / Fourier


def test_propagator_identity_and_period(basis64, rng):
    u = random_unit_field(basis64, rng)
    assert np.array_equal(propagate_linear(u, 0.0).coeffs, u.coeffs)
    back = propagate_linear(u, 2 * np.pi)
    # odd integer spectrum in d = 1: the flow is 2 pi periodic exactly
    assert np.max(np.abs(back.coeffs - u.coeffs)) < 1e-12


def test_propagator_unitary(basis64, rng):
    u = random_unit_field(basis64, rng)
    moved = propagate_linear(u, 0.37)
    assert abs(moved.l2_norm - u.l2_norm) < 1e-14
    assert abs(harmonic_sobolev_norm(moved, 1.3) - harmonic_sobolev_norm(u, 1.3)) < 1e-12


def test_fourier_transform(basis64, rng):
    assert np.array_equal(fourier_transform(unit_field(basis64, 0)).coeffs[0], 1.0 + 0j)
    assert fourier_transform(unit_field(basis64, 1)).coeffs[1] == -1j
    u = random_unit_field(basis64, rng)
    four = fourier_transform(fourier_transform(fourier_transform(fourier_transform(u))))
    assert np.max(np.abs(four.coeffs - u.coeffs)) < 1e-15
    assert abs(fourier_transform(u).l2_norm - u.l2_norm) < 1e-15


def test_rayleigh_quotients(basis64):
    for n in range(0, 41, 8):
        assert abs(rayleigh_quotient(unit_field(basis64, n)) - (2 * n + 1)) < 1e-6


# ------------------------------------------------------------- derivative


def test_derivative_ground_state(basis64):
    d = derivative_coefficients(unit_field(basis64, 0))
    assert abs(d.coeffs[1] + 1.0 / np.sqrt(2)) < 1e-14


def test_derivative_norms(basis64):
    for n in range(41):
        d = derivative_coefficients(unit_field(basis64, n))
        assert abs(d.l2_norm**2 - (2 * n + 1) / 2.0) < 1e-10


def test_derivative_linearity(basis32, rng):
    u = random_unit_field(basis32, rng)
    v = random_unit_field(basis32, rng)
    lhs = derivative_coefficients(SpectralField(basis32, 2.0 * u.coeffs + 3.0 * v.coeffs))
    rhs = 2.0 * derivative_coefficients(u).coeffs + 3.0 * derivative_coefficients(v).coeffs
    assert np.max(np.abs(lhs.coeffs - rhs)) < 1e-12


# ---------------------------------------------------------- spacetime norms


def test_spacetime_sup_is_l2(basis64, rng):
    u = random_unit_field(basis64, rng)
    got = spacetime_norm(u, np.inf, NormSpec("harmonic_sobolev", 0.0), 3.0, 33)
    assert abs(got - 1.0) < 1e-12


def test_spacetime_constant_integrand(basis64):
    got = spacetime_norm(unit_field(basis64, 0), 2.0, NormSpec("harmonic_sobolev", 0.0), 1.0, 65)
    assert abs(got - np.sqrt(2)) < 1e-12


def test_spacetime_time_refinement(basis32, rng):
    u = random_unit_field(basis32, rng)
    spec = NormSpec("lebesgue_Lr", r=4.0)
    coarse = spacetime_norm(u, 4.0, spec, 1.0, 64)
    fine = spacetime_norm(u, 4.0, spec, 1.0, 128)
    assert abs(fine - coarse) / fine < 0.01


def test_spacetime_validation(basis32):
    u = unit_field(basis32, 0)
    with pytest.raises(ValueError):
        spacetime_norm(u, 2.0, NormSpec("harmonic_sobolev"), 1.0, 8)
    with pytest.raises(ValueError):
        spacetime_norm(u, 0.5, NormSpec("harmonic_sobolev"), 1.0, 33)
    with pytest.raises(ValueError):
        spacetime_norm(u, 2.0, NormSpec("harmonic_sobolev"), -1.0, 33)


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        NormSpec("no_such_norm")
    with pytest.raises(ValueError):
        NormSpec("harmonic_sobolev", s=-1.0)
    with pytest.raises(ValueError):
        NormSpec("lebesgue_Lr", r=1.0)


def test_evaluate_norm_dispatch(basis32):
    u = unit_field(basis32, 0)
    sup = evaluate_norm(u, NormSpec("sup_norm"))
    assert abs(sup - np.pi**-0.25) < 1e-6
    l4 = evaluate_norm(u, NormSpec("lebesgue_Lr", r=4.0))
    assert abs(l4 - (2 * np.pi) ** -0.125) < 1e-6


# ----------------------------------------------------------- smoothing


def test_smoothing_eigenfunction_closed_form(basis64):
    # for an eigenfunction the integrand is time independent
    for eps in (0.05, 0.25, 0.45):
        got = smoothing_functional(unit_field(basis64, 0), eps, "sqrtH")
        weight_int = quad(
            lambda x: (1 + x * x) ** (-(0.5 - eps)) * np.exp(-x * x) / np.sqrt(np.pi),
            -np.inf,
            np.inf,
        )[0]
        assert abs(got - np.sqrt(4 * np.pi * weight_int)) < 1e-10


def test_smoothing_scale_invariance(basis64, rng):
    u = random_unit_field(basis64, rng)
    doubled = SpectralField(basis64, 2.0 * u.coeffs)
    for variant in ("sqrtH", "fractional_grad"):
        assert smoothing_functional(u, 0.25, variant) == smoothing_functional(doubled, 0.25, variant)


def test_smoothing_refinement_stability(rng):
    coarse = build_basis(1, 64, 130)
    fine = build_basis(1, 128, 258)
    u = random_unit_field(coarse, rng)
    for variant in ("sqrtH", "fractional_grad"):
        a = smoothing_functional(u, 0.25, variant)
        b = smoothing_functional(embed_field(u, fine), 0.25, variant)
        assert abs(a - b) / b < 0.05


def test_smoothing_validation(basis32):
    u = unit_field(basis32, 0)
    with pytest.raises(ValueError):
        smoothing_functional(u, 0.7, "sqrtH")
    with pytest.raises(ValueError):
        smoothing_functional(u, 0.25, "bogus")
    with pytest.raises(ValueError):
        smoothing_functional(SpectralField(basis32, np.zeros(basis32.size, complex)), 0.25, "sqrtH")
