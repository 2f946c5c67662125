"""Acceptance suite: one function per exit criterion, each returning a
pass/fail result with its measured quantities.

The reference tier runs every criterion at its pinned resolution and
tolerance; the smoke tier shrinks Monte Carlo sample counts (for quick
plumbing checks) without touching any tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .ensembles import make_ensemble, sample_gain_matrix
from .fields import (
    SpectralField,
    embed_field,
    fractional_laplacian_L2_norm,
    harmonic_sobolev_norm,
    rayleigh_quotient,
    smoothing_functional,
    unit_field,
)
from .hermite import build_basis, cached_basis, gram_deviation
from .lens import frame_l2_norm, free_propagate, lens_forward
from .picard import (
    SolverConfig,
    contraction_factor,
    global_nls_solution,
    mass_curve,
    picard_solve,
    residual,
    scattering_extract,
    uniqueness_probe,
)
from .proba import (
    CutoffSpec,
    TailExperiment,
    chernoff_tail,
    count_23_cycle_permutations,
    cycle_23_bound_constant,
    eigenfunction_lp_decay,
    good_set_probability,
    khinchin_growth,
    norm_tail,
    paley_zygmund_check,
)

__all__ = ["CriterionResult", "run_criterion", "run_all", "CRITERIA", "TIERS"]

DEFAULT_SEED = 1

TIERS = ("smoke", "reference", "extended")


def _tier_scale(tier: str) -> float:
    """Monte Carlo sample-count multiplier; tolerances never change."""
    return {"smoke": 0.02, "reference": 1.0, "extended": 2.0}[tier]


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    runtime_s: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.cid:2d} {self.name} ({self.runtime_s:.1f}s)"


def criterion_01_basis_fidelity(tier: str, seed: int) -> dict:
    basis = build_basis(1, 64, 256)
    gram = gram_deviation(basis)
    worst = 0.0
    for n in range(41):
        worst = max(worst, abs(rayleigh_quotient(unit_field(basis, n)) - (2 * n + 1)))
    return {
        "gram_deviation": gram,
        "rayleigh_worst": worst,
        "passed": gram <= 1e-10 and worst <= 1e-6,
    }


def criterion_02_gradient_ratio(tier: str, seed: int) -> dict:
    basis = build_basis(1, 101, 204)
    ratios = {}
    ok = True
    worst_at_1 = 0.0
    for s in (0.5, 1.0, 1.5):
        vals = []
        for n in range(101):
            lam = np.sqrt(2.0 * n + 1.0)
            vals.append(fractional_laplacian_L2_norm(unit_field(basis, n), s) / lam**s)
        vals = np.array(vals)
        ratios[s] = (float(vals.min()), float(vals.max()))
        ok = ok and vals.min() >= 0.5 and vals.max() <= 1.5
        if s == 1.0:
            worst_at_1 = float(np.max(np.abs(vals - 2.0**-0.5)))
    return {
        "ratio_brackets": {str(k): v for k, v in ratios.items()},
        "s1_deviation_from_invsqrt2": worst_at_1,
        "passed": ok and worst_at_1 <= 1e-6,
    }


def criterion_03_eigenfunction_sup(tier: str, seed: int) -> dict:
    rep = eigenfunction_lp_decay(np.inf, 400)
    return {
        "ratio_max_over_r10": rep["ratio_max"] / rep["ratio_at_10"],
        "spearman_rho": rep["spearman_rho"],
        "passed": rep["verdict"],
    }


def criterion_04_smoothing_stability(tier: str, seed: int) -> dict:
    n_draws = max(int(100 * _tier_scale(tier)), 10)
    coarse = cached_basis(1, 128, 258)
    fine = cached_basis(1, 256, 514)
    gains = sample_gain_matrix(make_ensemble("gaussian", seed=seed), np.arange(n_draws), coarse.size)
    worst_change = 0.0
    sups = {}
    for variant in ("sqrtH", "fractional_grad"):
        for eps in (0.05, 0.25, 0.45):
            vals_c, vals_f = [], []
            for row in gains:
                u = SpectralField(coarse, (row / np.linalg.norm(row)).astype(complex))
                vals_c.append(smoothing_functional(u, eps, variant))
                vals_f.append(smoothing_functional(embed_field(u, fine), eps, variant))
            sup_c, sup_f = max(vals_c), max(vals_f)
            change = abs(sup_f - sup_c) / sup_f
            worst_change = max(worst_change, change)
            sups[f"{variant}_eps{eps}"] = {"N128": sup_c, "N256": sup_f, "rel_change": change}
    return {"sups": sups, "worst_rel_change": worst_change, "passed": worst_change < 0.05}


def criterion_05_lens_conjugation(tier: str, seed: int) -> dict:
    basis = cached_basis(1, 64, 130)
    u0 = SpectralField(basis, 0.1 * unit_field(basis, 0).coeffs)
    cfg = SolverConfig(dim=1, N=64, time_nodes=65, nonlinear=False)
    traj = picard_solve(u0, cfg)
    worst_conj = 0.0
    for t in (0.25, 0.5, 1.0):
        frame = global_nls_solution(traj, t)
        free = free_propagate(u0, t, points=frame.grid)
        dx = float(frame.grid[1] - frame.grid[0])
        worst_conj = max(worst_conj, float(np.sqrt(dx * np.sum(np.abs(frame.values - free.values) ** 2))))
    rng = np.random.default_rng(seed)
    c = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    u = SpectralField(basis, c / np.linalg.norm(c))
    worst_iso = 0.0
    for t in (0.5, 2.0, 10.0):
        worst_iso = max(worst_iso, abs(frame_l2_norm(lens_forward(u, t)) - 1.0))
    return {
        "conjugation_worst_l2": worst_conj,
        "isometry_worst": worst_iso,
        "passed": worst_conj <= 1e-6 and worst_iso <= 1e-10,
    }


def _reference_solve(time_nodes: int = 65, K: int = 1):
    basis = cached_basis(1, 32, 66)
    u0 = SpectralField(basis, 0.1 * unit_field(basis, 0).coeffs)
    cfg = SolverConfig(dim=1, N=32, K=K, time_nodes=time_nodes)
    return u0, cfg, picard_solve(u0, cfg)


def criterion_06_picard_solver(tier: str, seed: int) -> dict:
    residuals = {}
    details = {}
    for k in (1, -1):
        u0, cfg, traj = _reference_solve(65, K=k)
        drift = mass_curve(traj)["drift"]
        details[f"K={k}"] = {
            "iterations": traj.iterations,
            "contraction": contraction_factor(traj),
            "final_update": traj.contraction_history[-1],
            "residual": residual(traj),
            "mass_drift": drift,
        }
    for m in (65, 129, 257):
        _, _, traj = _reference_solve(m)
        residuals[m] = residual(traj)
    ms = np.log([64.0, 128.0, 256.0])
    rs = np.log([residuals[65], residuals[129], residuals[257]])
    order = float(-np.polyfit(ms, rs, 1)[0])
    passed = (
        all(
            d["iterations"] <= 20
            and d["contraction"] < 0.5
            and d["final_update"] <= 1e-10
            and d["residual"] <= 1e-6
            and d["mass_drift"] <= 1e-8
            for d in details.values()
        )
        and order >= 3.5
    )
    return {"runs": details, "residual_order": order, "passed": passed, "residuals": residuals}


def criterion_07_uniqueness(tier: str, seed: int) -> dict:
    basis = cached_basis(1, 32, 66)
    u0 = SpectralField(basis, 0.1 * unit_field(basis, 0).coeffs)
    cfg = SolverConfig(dim=1, N=32, time_nodes=65)
    pert = SpectralField(basis, 0.01 * unit_field(basis, 1).coeffs)
    rep = uniqueness_probe(u0, cfg, pert)
    return {
        "fixed_point_gap": rep["fixed_point_gap"],
        "tolerance": rep["gap_tolerance"],
        "gronwall_ok": rep["gronwall_ok"],
        "passed": rep["fixed_point_unique"] and rep["gronwall_ok"],
    }


def criterion_08_scattering(tier: str, seed: int) -> dict:
    u0, cfg, traj = _reference_solve(65)
    pair = scattering_extract(traj, u0)
    curve = [r for _, r in pair.residual_curve]
    decreasing = all(curve[i + 1] < curve[i] for i in range(len(curve) - 1))
    norms = []
    for lam in (0.05, 0.1):
        basis = cached_basis(1, 32, 66)
        u = SpectralField(basis, lam * unit_field(basis, 0).coeffs)
        p = scattering_extract(picard_solve(u, cfg), u)
        norms.append(harmonic_sobolev_norm(p.L_plus, cfg.s))
    slope = float((np.log(norms[1]) - np.log(norms[0])) / (np.log(0.1) - np.log(0.05)))
    return {
        "residual_curve": pair.residual_curve,
        "final_residual": curve[-1],
        "decreasing": decreasing,
        "amplitude_slope": slope,
        "passed": decreasing and curve[-1] <= 1e-3 and abs(slope - 5.0) <= 0.3,
    }


def criterion_09_cycle_combinatorics(tier: str, seed: int) -> dict:
    expected = {1: 1, 2: 3, 3: 55, 4: 1225}
    agree = True
    for p, want in expected.items():
        brute = count_23_cycle_permutations(p, "brute_force")
        closed = count_23_cycle_permutations(p, "closed_form")
        agree = agree and brute == closed == want
    bound = cycle_23_bound_constant(12)
    return {
        "values": expected,
        "brute_equals_closed": agree,
        "fitted_C": bound["fitted_C"],
        "passed": agree and bound["fitted_C"] < np.inf,
    }


def criterion_10_khinchin(tier: str, seed: int) -> dict:
    n = max(int(10**6 * _tier_scale(tier)), 10**5)
    qs = (2, 4, 6, 8, 10, 12) if tier != "smoke" else (2, 4, 6, 8)
    spread = np.ones(32) / np.sqrt(32.0)
    runs = {}
    gauss = khinchin_growth(make_ensemble("gaussian", seed=seed), spread, qs, n_samples=n)
    runs["gaussian"] = gauss
    rade = khinchin_growth(
        make_ensemble("rademacher", seed=seed), np.array([1.0]), qs, n_samples=max(n // 10, 10**4)
    )
    runs["rademacher_single"] = rade
    ok = abs(gauss["fitted_exponent"] - 0.5) <= 0.1 and abs(rade["fitted_exponent"]) <= 0.05
    for gamma in (1.0, 1.5):
        rep = khinchin_growth(
            make_ensemble("symmetric_weibull", seed=seed, gamma=gamma), spread, qs, n_samples=n
        )
        runs[f"weibull_{gamma}"] = rep
        ok = ok and rep["verdict"]
    summary = {
        k: {"fitted_exponent": v["fitted_exponent"], "bound": v["exponent_bound"], "verdict": v["verdict"]}
        for k, v in runs.items()
    }
    return {"runs": summary, "passed": bool(ok)}


def criterion_11_tail_bounds(tier: str, seed: int) -> dict:
    n_tail = max(int(10**5 * _tier_scale(tier)), 10**4)
    n_chern = max(int(10**6 * _tier_scale(tier)), 10**4)
    basis = cached_basis(1, 31, 64)
    base = SpectralField(basis, (np.ones(32) / np.sqrt(32.0)).astype(complex))
    nt = norm_tail(base, make_ensemble("gaussian", seed=seed), np.linspace(0.6, 2.4, 25), n_samples=n_tail)
    c16 = np.ones(16) / 4.0
    ch = {}
    ch["2.0"] = chernoff_tail(
        make_ensemble("gaussian", seed=seed), c16, np.linspace(1.0, 4.5, 15), n_samples=n_chern
    )
    ch["1.5"] = chernoff_tail(
        make_ensemble("symmetric_weibull", seed=seed, gamma=1.5),
        c16,
        np.linspace(1.0, 6.0, 21),
        n_samples=n_chern,
    )
    passed = nt["verdict"] and all(c["verdict"] for c in ch.values())
    return {
        "norm_tail_r2": nt["fit_r2"],
        "chernoff": {
            k: {kk: c[kk] for kk in ("mgf_c_hat", "tail_r2", "growth_exponent", "verdict")}
            for k, c in ch.items()
        },
        "passed": bool(passed),
    }


def criterion_12_good_set(tier: str, seed: int) -> dict:
    n = max(int(10**4 * _tier_scale(tier)), 10**3)
    basis = cached_basis(1, 15, 34)
    base = SpectralField(basis, (np.ones(16) / 4.0).astype(complex))
    ens = make_ensemble("gaussian", seed=seed)
    exp = TailExperiment(base=base, ensemble=ens, thresholds=(1.0, 1.5, 2.0, 3.0), n_samples=n)
    rep = good_set_probability(exp)
    moderate = rep["rows"][1]
    half = SpectralField(basis, 0.5 * base.coeffs)
    exp_half = TailExperiment(base=half, ensemble=ens, thresholds=(1.0,), n_samples=min(n, 2000))
    exp_full = TailExperiment(base=base, ensemble=ens, thresholds=(1.0,), n_samples=min(n, 2000))
    rep_half = good_set_probability(exp_half)
    rep_full = good_set_probability(exp_full)
    homog = bool(
        np.array_equal(rep_half["data_norm_samples"], 0.5 * rep_full["data_norm_samples"])
        and np.array_equal(rep_half["flow_norm_samples"], 0.5 * rep_full["flow_norm_samples"])
    )
    return {
        "moderate_threshold": moderate["t"],
        "p_hat": moderate["p_hat"],
        "wilson_lo": moderate["wilson_lo"],
        "monotone": rep["monotone"],
        "homogeneity_exact": homog,
        "passed": moderate["wilson_lo"] > 0 and rep["monotone"] and homog,
    }


def criterion_13_paley_zygmund(tier: str, seed: int) -> dict:
    n = max(int(10**4 * _tier_scale(tier)), 10**3)
    runs = {}
    basis = cached_basis(1, 15, 34)
    single = SpectralField(basis, unit_field(basis, 2).coeffs)
    runs["rademacher_single"] = paley_zygmund_check(
        single, make_ensemble("rademacher", seed=seed), CutoffSpec(N=8, s=0.0), n_samples=min(n, 2000)
    )
    flat = SpectralField(basis, (np.ones(16) / 4.0).astype(complex))
    runs["gaussian_flat_s0"] = paley_zygmund_check(
        flat, make_ensemble("gaussian", seed=seed), CutoffSpec(N=8, s=0.0), n_samples=n
    )
    big = cached_basis(1, 40, 84)
    decay = 1.0 / np.sqrt(big.lambda2)
    decay /= np.linalg.norm(decay)
    base3 = SpectralField(big, decay.astype(complex))
    sigmas = []
    ok3 = True
    for scale in (4, 8, 16):
        rep = paley_zygmund_check(
            base3, make_ensemble("gaussian", seed=seed), CutoffSpec(N=scale, s=0.5), n_samples=n
        )
        runs[f"gaussian_s05_N{scale}"] = rep
        sigmas.append(rep["sigma_sq_exact"])
        ok3 = ok3 and rep["verdict"]
    increasing = all(sigmas[i] < sigmas[i + 1] for i in range(len(sigmas) - 1))
    passed = (
        runs["rademacher_single"]["verdict"]
        and runs["gaussian_flat_s0"]["verdict"]
        and ok3
        and increasing
    )
    summary = {
        k: {kk: v[kk] for kk in ("lhs_probability", "rhs_bound", "sigma_sq_exact", "verdict")}
        for k, v in runs.items()
    }
    return {"runs": summary, "sigma_increasing": increasing, "passed": bool(passed)}


CRITERIA = [
    (1, "basis fidelity (Gram + Rayleigh)", criterion_01_basis_fidelity),
    (2, "fractional gradient ratio on eigenfunctions", criterion_02_gradient_ratio),
    (3, "eigenfunction sup-norm decay", criterion_03_eigenfunction_sup),
    (4, "smoothing functional refinement stability", criterion_04_smoothing_stability),
    (5, "lens conjugation and isometry", criterion_05_lens_conjugation),
    (6, "Picard solver contraction and residual order", criterion_06_picard_solver),
    (7, "fixed-point uniqueness", criterion_07_uniqueness),
    (8, "scattering profiles", criterion_08_scattering),
    (9, "2/3-cycle permutation counts", criterion_09_cycle_combinatorics),
    (10, "moment growth exponents", criterion_10_khinchin),
    (11, "norm and Chernoff tails", criterion_11_tail_bounds),
    (12, "good-set probability positivity", criterion_12_good_set),
    (13, "second-moment lower bound", criterion_13_paley_zygmund),
]


def run_criterion(cid: int, tier: str = "reference", seed: int = DEFAULT_SEED) -> CriterionResult:
    for c, name, fn in CRITERIA:
        if c == cid:
            start = time.perf_counter()
            details = fn(tier, seed)
            elapsed = time.perf_counter() - start
            passed = bool(details.pop("passed"))
            return CriterionResult(cid=c, name=name, passed=passed, runtime_s=elapsed, details=details)
    raise ValueError(f"no criterion {cid}")


def run_all(tier: str = "reference", seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    if tier not in TIERS:
        raise ValueError(f"tier must be one of {TIERS}")
    return [run_criterion(cid, tier, seed) for cid, _, _ in CRITERIA]
