"""Acceptance suite: one test per criterion, printing a pass/fail line each.

Simulation-based criteria use fixed seeds; tolerances are stated inline and
match the project targets.  The heavy exp/exp battery (10 replications of
100k messages for both bufferless policies) is shared across criteria.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from aoiq import (Blocking, BlockThenPush, Deterministic, Exponential,
                  InstabilityWarning, Mixture, Pushout, PushThenBlock,
                  UniformInterval, compare_fifo_p2, compare_plifo_pushout,
                  crossover, default_window, extract_aoi_path,
                  extract_naoi_path, fifo_mean_aoi_mm, generate, ks_distance,
                  laplace_residuals, lt_aoi, lt_naoi, mean_aoi, mean_naoi,
                  mm_blocking_naoi_cond_lt_scaled, mm_blocking_naoi_density,
                  parse_policy, path_stats, renewal_grids, simulate,
                  solve_volterra, table_means)
from aoiq.analytic import Model

U_GRID = (0.5, 1.0, 2.0)
MM = Model(Exponential(1.0), Exponential(1.0))


def report(num, ok, detail):
    print(f"ACCEPTANCE {num:>2}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def mm_battery():
    """10 replications x 100k messages, pushout and blocking, exp/exp rates 1."""
    n, reps = 100_000, 10
    t0 = time.monotonic()
    acc = {("pushout", "aoi"): [], ("pushout", "naoi"): [],
           ("blocking", "aoi"): [], ("blocking", "naoi"): []}
    atoms = {"pushout": [], "blocking": []}
    lts = {key: {u: [] for u in U_GRID} for key in acc}
    first_age_path = None
    for rep in range(reps):
        w = generate(MM.tau, MM.sigma, n, seed=500 + rep)
        for ptxt in ("pushout", "blocking"):
            o = simulate(parse_policy(ptxt), w)
            win = default_window(w, o)
            age = extract_aoi_path(w, o, win)
            gap = extract_naoi_path(w, o, win)
            sa = path_stats(age, u_grid=U_GRID)
            sb = path_stats(gap, u_grid=U_GRID)
            acc[(ptxt, "aoi")].append(sa.time_mean)
            acc[(ptxt, "naoi")].append(sb.time_mean)
            atoms[ptxt].append(sb.atom_zero)
            for u in U_GRID:
                lts[(ptxt, "aoi")][u].append(sa.lt[u])
                lts[(ptxt, "naoi")][u].append(sb.lt[u])
            if rep == 0 and ptxt == "pushout":
                first_age_path = age
    elapsed = time.monotonic() - t0
    pooled = {k: float(np.mean(v)) for k, v in acc.items()}
    pooled_atoms = {k: float(np.mean(v)) for k, v in atoms.items()}
    pooled_lts = {k: {u: float(np.mean(v)) for u, v in d.items()}
                  for k, d in lts.items()}
    return dict(pooled=pooled, atoms=pooled_atoms, lts=pooled_lts,
                elapsed=elapsed, age_path=first_age_path, n=n, reps=reps)


def test_criterion_01_table_means(mm_battery):
    ana = table_means(MM)
    exact = {("pushout", "aoi"): 2.0, ("pushout", "naoi"): 1.0,
             ("blocking", "aoi"): 2.5, ("blocking", "naoi"): 1.5}
    ok = all(ana[k] == pytest.approx(v, rel=1e-12) for k, v in exact.items())
    rels = {k: abs(mm_battery["pooled"][k] - v) / v for k, v in exact.items()}
    ok = ok and max(rels.values()) < 0.015
    ok = ok and mm_battery["elapsed"] < 30.0
    report(1, ok, f"analytic exact, sim rel err max {max(rels.values()):.4f} "
                  f"(<1.5%), runtime {mm_battery['elapsed']:.1f}s (<30s)")


def test_criterion_02_zero_atoms(mm_battery):
    a_p = mm_battery["atoms"]["pushout"]
    a_b = mm_battery["atoms"]["blocking"]
    ok = abs(a_p - 0.5) < 0.01 and abs(a_b - 0.25) < 0.01
    report(2, ok, f"zero-atom pushout {a_p:.4f} (0.5 +- 0.01), "
                  f"blocking {a_b:.4f} (0.25 +- 0.01)")


def test_criterion_03_solver_vs_closed_forms():
    tau = Exponential(1.0)
    h = 5e-3
    counts = solve_volterra(1.0, tau, t_max=20.0, h=h)
    fp = solve_volterra(
        lambda t: np.array([tau.partial_laplace_above(1.0, x)
                            for x in np.atleast_1d(t)]),
        tau, t_max=20.0, h=h, weight=lambda x: np.exp(-x))
    ts = np.arange(len(counts.values)) * h
    e_u = float(np.abs(counts.values - (1.0 + ts)).max())
    e_w = float(np.abs(fp.values - 0.5 * np.exp(-ts)).max())
    ok = e_u < 1e-3 and e_w < 1e-3
    report(3, ok, f"max|U-(1+t)|={e_u:.2e}, max|W-0.5e^-t|={e_w:.2e} "
                  f"on [0,20] at h=5e-3 (<1e-3)")


def test_criterion_04_transform_residuals():
    worst = {}
    for label, tau in (("exp", Exponential(1.0)), ("det", Deterministic(1.0)),
                       ("uniform", UniformInterval(0.5, 1.5))):
        g = renewal_grids(tau, u=1.0, t_max=40.0, h=2e-3)
        worst[label] = laplace_residuals(tau, g, xis=U_GRID)["max"]
    ok = max(worst.values()) < 1e-3
    report(4, ok, "relative residuals " +
           ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + " (<1e-3)")


def test_criterion_05_empirical_vs_analytic_transforms(mm_battery):
    worst = 0.0
    for ptxt in ("pushout", "blocking"):
        for measure, fn in (("aoi", lt_aoi), ("naoi", lt_naoi)):
            for u in U_GRID:
                sim = mm_battery["lts"][(ptxt, measure)][u]
                ana = fn(MM, ptxt, u)
                worst = max(worst, abs(sim - ana))
    ok = worst < 0.01
    report(5, ok, f"max |lt_sim - lt_analytic| = {worst:.4f} over both "
                  f"policies/measures at u in {U_GRID} (<0.01)")


def test_criterion_06_two_stage_decomposition_ks(mm_battery):
    # pushout age is the independent sum of two unit-rate exponentials
    cdf = lambda x: 1.0 - (1.0 + x) * np.exp(-x)
    ks = ks_distance(mm_battery["age_path"], cdf)
    ok = ks < 0.01
    report(6, ok, f"KS distance sim age law vs two-stage law {ks:.4f} (<0.01)")


def _mixed_models():
    return [(Exponential(1.0), Exponential(1.0)),
            (Deterministic(1.0), Exponential(1.0)),
            (Exponential(1.0), Deterministic(0.8))]


def test_criterion_07_stack_pushout_path_identity():
    bad = 0
    first = ""
    for s in range(100):
        tau, sigma = _mixed_models()[s % 3]
        w = generate(tau, sigma, 10_000, seed=9000 + s)
        rep = compare_plifo_pushout(w)
        if not rep.equal:
            bad += 1
            first = first or f"seed {9000 + s}: {rep.detail}"
    report(7, bad == 0, f"exact age/gap path identity on 100 workloads "
                        f"(10k messages each); mismatches: {bad} {first}")


def test_criterion_08_fifo_dominates_two_slot():
    bad = 0
    epochs = 0
    for s in range(100):
        lam = (0.4, 0.9, 1.5)[s % 3]  # includes unstable fifo
        w = generate(Exponential(lam), Exponential(1.0), 10_000, seed=11_000 + s)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InstabilityWarning)
            rep = compare_fifo_p2(w)
        epochs += rep.n_epochs
        if not rep.ok:
            bad += 1
    report(8, bad == 0, f"fifo age/gap dominate the two-slot system at all "
                        f"{epochs} success epochs across 100 workloads; "
                        f"violations: {bad}")


def test_criterion_09_crossover_location():
    mix = Mixture(weights=(0.5, 0.5),
                  parts=(Deterministic(1.0 / 3.0), Exponential(0.6)))
    root = crossover(lambda lam: Model(Exponential(lam), mix), "naoi",
                     8.0, 14.0, tol=1e-3)
    ok = abs(root - 11.2) <= 0.1
    report(9, ok, f"pushout/blocking mean-gap crossover at lam*={root:.3f} "
                  f"(11.2 +- 0.1)")


def test_criterion_10_fifo_mean():
    exact = fifo_mean_aoi_mm(0.5, 1.0)
    w = generate(Exponential(0.5), Exponential(1.0), 100_000, seed=4242)
    o = simulate(parse_policy("fifo"), w)
    win = default_window(w, o)
    sim = path_stats(extract_aoi_path(w, o, win)).time_mean
    rel = abs(sim - 3.5) / 3.5
    thresh = math.sqrt(2.0) - 1.0
    grid_ok = True
    for lam in np.arange(0.05, 1.0, 0.05):
        if abs(lam - thresh) < 1e-3:
            continue
        m = Model(Exponential(float(lam)), Exponential(1.0))
        diff = fifo_mean_aoi_mm(float(lam), 1.0) - mean_aoi(m, "blocking")
        grid_ok = grid_ok and ((diff > 0) == (lam > thresh))
    ok = exact == pytest.approx(3.5, rel=1e-12) and rel < 0.02 and grid_ok
    report(10, ok, f"fifo mean exact 3.5, sim rel err {rel:.4f} (<2%), "
                   f"exceeds blocking iff lam > sqrt(2)-1: {grid_ok}")


def test_criterion_11_general_renewal_route_vs_simulation():
    m = Model(UniformInterval(0.5, 1.5), UniformInterval(0.2, 0.6))
    ana_aoi = mean_aoi(m, "blocking", route="gigi")
    ana_naoi = mean_naoi(m, "blocking", route="gigi")
    sims_a, sims_b = [], []
    for rep in range(5):
        w = generate(m.tau, m.sigma, 100_000, seed=7100 + rep)
        o = simulate(parse_policy("blocking"), w)
        win = default_window(w, o)
        sims_a.append(path_stats(extract_aoi_path(w, o, win)).time_mean)
        sims_b.append(path_stats(extract_naoi_path(w, o, win)).time_mean)
    rel_a = abs(np.mean(sims_a) - ana_aoi) / ana_aoi
    rel_b = abs(np.mean(sims_b) - ana_naoi) / ana_naoi
    ok = rel_a < 0.02 and rel_b < 0.02
    report(11, ok, f"uniform/uniform blocking: age rel err {rel_a:.4f}, "
                   f"gap rel err {rel_b:.4f} vs renewal route (<2%)")


def test_criterion_12_blocking_gap_density():
    worst_norm, worst_lt, min_val = 0.0, 0.0, np.inf
    for rho in (0.5, 1.0, 2.0):
        ts = np.linspace(0.0, 60.0, 6001)
        min_val = min(min_val, float(mm_blocking_naoi_density(ts, rho).min()))
        total, _ = quad(lambda t: float(mm_blocking_naoi_density(t, rho)),
                        0, 100, limit=300)
        worst_norm = max(worst_norm, abs(total - 1.0))
        for u in U_GRID:
            got, _ = quad(lambda t: math.exp(-u * t)
                          * float(mm_blocking_naoi_density(t, rho)),
                          0, 100, limit=300)
            worst_lt = max(worst_lt,
                           abs(got - mm_blocking_naoi_cond_lt_scaled(u, rho)))
    ok = min_val >= -1e-12 and worst_norm < 1e-6 and worst_lt < 1e-6
    report(12, ok, f"density >= 0, |integral-1| max {worst_norm:.1e} (<1e-6), "
                   f"transform gap max {worst_lt:.1e} (<1e-6)")


def test_criterion_13_zero_threshold_policy_identities():
    bad = 0
    for s in range(100):
        tau, sigma = _mixed_models()[s % 3]
        w = generate(tau, sigma, 2_000, seed=13_000 + s)
        if simulate(BlockThenPush(0), w) != simulate(Pushout(), w):
            bad += 1
        if simulate(PushThenBlock(0), w) != simulate(Blocking(), w):
            bad += 1
    report(13, bad == 0, f"threshold-0 variants reproduce pushout/blocking "
                         f"outcome-for-outcome on 100 workloads; "
                         f"mismatches: {bad}")
