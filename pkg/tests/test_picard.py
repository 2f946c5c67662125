import numpy as np
import pytest

from oscilab.fields import SpectralField, harmonic_sobolev_norm, unit_field
from oscilab.hermite import cached_basis
from oscilab.picard import (
    DivergenceError,
    SolverConfig,
    Trajectory,
    contraction_factor,
    duhamel_apply,
    empty_trajectory,
    geometric_fit_r2,
    global_nls_solution,
    load_trajectory,
    mass_curve,
    picard_solve,
    residual,
    save_trajectory,
    scattering_extract,
    uniqueness_probe,
)
from oscilab.lens import frame_l2_norm, free_propagate


def reference_data(amplitude=0.1, mode=0, **cfg_kwargs):
    basis = cached_basis(1, 32, 66)
    u0 = SpectralField(basis, amplitude * unit_field(basis, mode).coeffs)
    cfg = SolverConfig(dim=1, N=32, time_nodes=65, **cfg_kwargs)
    return basis, u0, cfg


# ------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(ValueError, match="odd >= 5"):
        SolverConfig(nonlinearity_p=4)
    with pytest.raises(ValueError, match="odd >= 5"):
        SolverConfig(nonlinearity_p=3)
    with pytest.raises(ValueError):
        SolverConfig(K=2)
    with pytest.raises(ValueError):
        SolverConfig(T=1.0)  # beyond pi/4
    with pytest.raises(ValueError):
        SolverConfig(time_nodes=40)  # even


def test_cosine_exponent_and_default_s():
    assert SolverConfig(dim=1, nonlinearity_p=5).cos_exponent == 0
    assert SolverConfig(dim=1, nonlinearity_p=7).cos_exponent == 1
    assert SolverConfig(dim=2, nonlinearity_p=5).cos_exponent == 2
    cfg = SolverConfig(dim=1, nonlinearity_p=5)
    assert abs(cfg.s - 0.25) < 1e-14  # midpoint of (0, 1/2)


def test_time_grid_centered():
    cfg = SolverConfig(time_nodes=65)
    t = cfg.times()
    assert t[32] == 0.0
    assert abs(t[-1] - np.pi / 4) < 1e-15
    assert abs(t[0] + np.pi / 4) < 1e-15


# ------------------------------------------------------------- Duhamel map


def test_duhamel_zero_data_is_zero():
    basis, _, cfg = reference_data()
    u0 = SpectralField(basis, np.zeros(basis.size, complex))
    out = duhamel_apply(empty_trajectory(u0, cfg), u0, cfg)
    assert np.all(out.v == 0)


def test_duhamel_quintic_homogeneity():
    # first iterate scales like amplitude^p
    basis, _, cfg = reference_data()
    ratios = []
    for eps in (1e-2, 5e-3):
        u0 = SpectralField(basis, eps * unit_field(basis, 0).coeffs)
        out = duhamel_apply(empty_trajectory(u0, cfg), u0, cfg)
        size = np.max(np.linalg.norm(out.v, axis=1))
        ratios.append(size / eps**5)
    assert abs(ratios[0] - ratios[1]) / ratios[1] < 0.05


# ------------------------------------------------------------- solves


def test_zero_data_converges_immediately():
    basis, _, cfg = reference_data()
    u0 = SpectralField(basis, np.zeros(basis.size, complex))
    traj = picard_solve(u0, cfg)
    assert traj.iterations == 1
    assert np.all(traj.v == 0)


def test_reference_solve_contracts():
    _, u0, cfg = reference_data()
    traj = picard_solve(u0, cfg)
    assert traj.converged
    assert traj.iterations <= 20
    assert contraction_factor(traj) < 0.5
    assert traj.contraction_history[-1] <= 1e-10
    assert geometric_fit_r2(traj) >= 0.95


def test_reference_residual_and_mass():
    _, u0, cfg = reference_data()
    traj = picard_solve(u0, cfg)
    assert residual(traj) <= 1e-6
    assert mass_curve(traj)["drift"] <= 1e-8


def test_linear_run_residual_and_mass():
    basis, u0, _ = reference_data()
    cfg = SolverConfig(dim=1, N=32, time_nodes=129, nonlinear=False)
    traj = picard_solve(u0, cfg)
    assert residual(traj) <= 1e-8
    # diagonal unitary flow: drift is pure rounding
    assert mass_curve(traj)["drift"] <= 1e-15


def test_residual_fourth_order_in_time():
    _, u0, _ = reference_data()
    values = {}
    for m in (65, 129, 257):
        cfg = SolverConfig(dim=1, N=32, time_nodes=m)
        values[m] = residual(picard_solve(u0, cfg))
    assert values[65] / values[129] >= 8.0
    assert values[129] / values[257] >= 8.0


def test_mass_drift_order():
    # drift at rounding floor for small data; use a larger amplitude
    basis, _, _ = reference_data()
    u0 = SpectralField(basis, 0.5 * unit_field(basis, 0).coeffs)
    drifts = []
    for m in (33, 65):
        cfg = SolverConfig(dim=1, N=32, time_nodes=m, tol=1e-13, max_iter=60)
        drifts.append(mass_curve(picard_solve(u0, cfg))["drift"])
    assert drifts[0] / drifts[1] >= 4.0


def test_focusing_and_defocusing_differ():
    _, u0, _ = reference_data()
    plus = picard_solve(u0, SolverConfig(dim=1, N=32, time_nodes=65, K=1))
    minus = picard_solve(u0, SolverConfig(dim=1, N=32, time_nodes=65, K=-1))
    assert np.max(np.abs(plus.v - minus.v)) > 0
    assert mass_curve(plus)["drift"] <= 1e-8
    assert mass_curve(minus)["drift"] <= 1e-8


def test_divergence_guard_is_loud():
    basis, u0, cfg = reference_data()
    huge = np.tile(10.0 * unit_field(basis, 1).coeffs, (cfg.time_nodes, 1))
    try:
        traj = picard_solve(u0, cfg, v_init=huge)
    except DivergenceError as err:
        assert err.time_node is not None
        return
    # converging back to the unique fixed point is the other allowed outcome
    ref = picard_solve(u0, cfg)
    assert np.max(np.linalg.norm(traj.v - ref.v, axis=1)) <= 10 * cfg.tol


# ------------------------------------------------------------- uniqueness


def test_uniqueness_zero_perturbation_bitwise():
    basis, u0, cfg = reference_data()
    zero = SpectralField(basis, np.zeros(basis.size, complex))
    a = picard_solve(u0, cfg)
    b = picard_solve(u0, cfg, v_init=np.zeros((cfg.time_nodes, basis.size), complex))
    assert np.array_equal(a.v, b.v)
    rep = uniqueness_probe(u0, cfg, zero)
    assert rep["fixed_point_gap"] == 0.0
    assert rep["gronwall_ok"]


def test_uniqueness_probe_reference():
    basis, u0, cfg = reference_data()
    pert = SpectralField(basis, 0.01 * unit_field(basis, 1).coeffs)
    rep = uniqueness_probe(u0, cfg, pert)
    assert rep["fixed_point_unique"]
    assert rep["fixed_point_gap"] <= 10 * cfg.tol
    assert rep["gronwall_ok"]
    assert rep["gronwall_max_ratio"] <= rep["gronwall_min_bound"]


# ------------------------------------------------------------- scattering


def test_scattering_zero_data():
    basis, _, cfg = reference_data()
    u0 = SpectralField(basis, np.zeros(basis.size, complex))
    pair = scattering_extract(picard_solve(u0, cfg), u0)
    assert pair.L_plus.l2_norm == 0.0
    assert pair.L_minus.l2_norm == 0.0


def test_scattering_residual_curve():
    _, u0, cfg = reference_data()
    pair = scattering_extract(picard_solve(u0, cfg), u0)
    vals = [r for _, r in pair.residual_curve]
    assert all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))
    assert vals[-1] <= 1e-3


def test_scattering_amplitude_slope():
    basis, _, cfg = reference_data()
    norms = []
    for lam in (0.05, 0.1):
        u0 = SpectralField(basis, lam * unit_field(basis, 0).coeffs)
        pair = scattering_extract(picard_solve(u0, cfg), u0)
        norms.append(harmonic_sobolev_norm(pair.L_plus, cfg.s))
    slope = (np.log(norms[1]) - np.log(norms[0])) / (np.log(0.1) - np.log(0.05))
    assert abs(slope - 5.0) <= 0.3


# ------------------------------------------------------------- lens-route solution


def test_global_solution_at_zero_matches_data():
    basis, u0, cfg = reference_data()
    traj = picard_solve(u0, cfg)
    frame = global_nls_solution(traj, 0.0)
    from oscilab.fields import synthesize

    direct = synthesize(u0, frame.grid)
    assert np.max(np.abs(frame.values - direct)) < 1e-10


def test_global_solution_mass():
    _, u0, cfg = reference_data()
    traj = picard_solve(u0, cfg)
    for t in (0.5, 2.0, 10.0):
        frame = global_nls_solution(traj, t)
        assert abs(frame_l2_norm(frame) - u0.l2_norm) <= 1e-8


def test_global_solution_linear_consistency():
    basis, u0, _ = reference_data()
    cfg = SolverConfig(dim=1, N=32, time_nodes=65, nonlinear=False)
    traj = picard_solve(u0, cfg)
    frame = global_nls_solution(traj, 0.5)
    free = free_propagate(u0, 0.5, points=frame.grid)
    dx = float(frame.grid[1] - frame.grid[0])
    assert np.sqrt(dx * np.sum(np.abs(frame.values - free.values) ** 2)) <= 1e-6


def test_global_solution_window_guard():
    basis, u0, _ = reference_data()
    cfg = SolverConfig(dim=1, N=32, time_nodes=65, T=np.pi / 8)
    traj = picard_solve(u0, cfg)
    with pytest.raises(ValueError):
        global_nls_solution(traj, 100.0)  # maps past T = pi/8


# ------------------------------------------------------------- checkpointing


def test_checkpoint_roundtrip(tmp_path):
    _, u0, cfg = reference_data()
    traj = picard_solve(u0, cfg)
    path = tmp_path / "traj.npz"
    save_trajectory(traj, path)
    back = load_trajectory(path)
    assert np.array_equal(back.v, traj.v)
    assert np.array_equal(back.u0, traj.u0)
    assert np.array_equal(back.times, traj.times)
    assert back.config == traj.config
    assert back.iterations == traj.iterations
