import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoiq import (Deterministic, DriftPath, EmptyWindow, Exponential,
                  InstabilityWarning, Pushout, StepPath,
                  Workload, compare_fifo_p2, compare_plifo_pushout,
                  default_window, extract_aoi_path, extract_naoi_path,
                  generate, ks_distance, parse_policy, path_cdf, path_stats,
                  simulate)


def hand_workload(arrivals, services):
    return Workload(arrivals=np.asarray(arrivals, dtype=float),
                    services=np.asarray(services, dtype=float),
                    seed=0, tau=Exponential(1.0), sigma=Exponential(1.0))


W_BASE = hand_workload([1.0, 2.0, 3.5], [0.5, 2.0, 1.0])


def test_age_path_hand_trace():
    o = simulate(Pushout(), W_BASE)
    p = extract_aoi_path(W_BASE, o, (1.5, 4.5))
    assert p.piece_list() == [(1.5, 4.5, 1.0)]
    assert p.value_at(2.0) == pytest.approx(1.0)


def test_age_path_single_message():
    w = hand_workload([1.0], [0.5])
    o = simulate(Pushout(), w)
    p = extract_aoi_path(w, o, (1.5, 3.0))
    assert p.piece_list() == [(1.5, 3.0, 1.0)]


def test_gap_path_hand_trace():
    o = simulate(Pushout(), W_BASE)
    p = extract_naoi_path(W_BASE, o, (1.5, 4.5))
    assert p.piece_list() == [(1.5, 2.0, 0.0), (2.0, 3.5, 1.0), (3.5, 4.5, 2.5)]


def test_gap_path_zero_after_undisturbed_service():
    w = hand_workload([1.0, 5.0], [0.5, 1.0])
    o = simulate(Pushout(), w)
    p = extract_naoi_path(w, o, (1.5, 5.0))
    assert p.piece_list() == [(1.5, 5.0, 0.0)]


def test_gap_path_nonnegative_random():
    w = generate(Exponential(1.0), Exponential(1.0), 3000, seed=8)
    o = simulate(Pushout(), w)
    p = extract_naoi_path(w, o, default_window(w, o))
    assert np.all(p.values >= 0.0)


def test_empty_window_raises():
    o = simulate(Pushout(), W_BASE)
    with pytest.raises(EmptyWindow):
        extract_aoi_path(W_BASE, o, (0.5, 1.2))


def test_stats_constant_zero_step():
    p = StepPath(starts=np.array([0.0]), ends=np.array([1.0]),
                 values=np.array([0.0]))
    st_ = path_stats(p, u_grid=[0.5, 1.0, 2.0])
    assert st_.time_mean == 0.0
    assert st_.atom_zero == 1.0
    assert all(v == pytest.approx(1.0) for v in st_.lt.values())


def test_stats_single_drift_piece():
    p = DriftPath(starts=np.array([0.0]), ends=np.array([1.0]),
                  offsets=np.array([0.0]))
    st_ = path_stats(p, u_grid=[1.0], x_grid=[0.25, 0.5, 2.0])
    assert st_.time_mean == pytest.approx(0.5)
    assert st_.lt[1.0] == pytest.approx(1.0 - math.exp(-1.0))
    assert st_.cdf[0.25] == pytest.approx(0.25)
    assert st_.cdf[2.0] == pytest.approx(1.0)


def _naive_grid_stats(path, step=1e-3, u=1.0):
    w0, w1 = path.window
    ts = np.arange(w0, w1, step) + step / 2.0
    ts = ts[ts < w1]
    vals = np.asarray(path.value_at(ts))
    return vals.mean(), np.exp(-u * vals).mean()


@pytest.mark.parametrize("ptxt", ["pushout", "blocking"])
def test_stats_match_naive_grid_integration(ptxt):
    w = generate(Exponential(1.0), Exponential(1.0), 2000, seed=13)
    o = simulate(parse_policy(ptxt), w)
    win = default_window(w, o)
    for extract in (extract_aoi_path, extract_naoi_path):
        p = extract(w, o, win)
        st_ = path_stats(p, u_grid=[1.0])
        mean_naive, lt_naive = _naive_grid_stats(p)
        assert st_.time_mean == pytest.approx(mean_naive, rel=1e-3)
        assert st_.lt[1.0] == pytest.approx(lt_naive, rel=1e-3)


def test_path_cdf_brute_force():
    p = DriftPath(starts=np.array([0.0, 1.0, 4.0]),
                  ends=np.array([1.0, 4.0, 5.0]),
                  offsets=np.array([-1.0, 0.5, 3.5]))
    xs = np.linspace(0.0, 6.0, 97)
    ts = np.linspace(0.0, 5.0, 500_001)[:-1] + 5e-6 / 2
    vals = np.asarray(p.value_at(ts))
    brute = np.array([(vals <= x).mean() for x in xs])
    assert np.allclose(path_cdf(p, xs), brute, atol=2e-4)


MODELS = [(Exponential(1.0), Exponential(1.0)),
          (Deterministic(1.0), Exponential(1.0)),
          (Exponential(1.0), Deterministic(0.7))]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(MODELS),
       st.sampled_from(["pushout", "blocking", "p2", "fifo", "plifo"]))
def test_age_equals_since_arrival_plus_gap(seed, model, ptxt):
    # pointwise identity: age(t) = (t - last arrival <= t) + gap(t)
    w = generate(model[0], model[1], 400, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        o = simulate(parse_policy(ptxt), w)
    try:
        a = extract_aoi_path(w, o)
        b = extract_naoi_path(w, o)
    except EmptyWindow:
        return
    w0 = max(a.window[0], b.window[0])
    w1 = min(a.window[1], b.window[1])
    if not w1 > w0:
        return
    bounds = b.starts[(b.starts >= w0) & (b.starts < w1)]
    mids = 0.5 * (b.starts + b.ends)
    probes = np.concatenate((bounds, mids[(mids >= w0) & (mids < w1)]))
    if len(probes) == 0:
        return
    since_arrival = probes - w.arrivals[
        np.searchsorted(w.arrivals, probes, side="right") - 1]
    lhs = np.asarray(a.value_at(probes))
    rhs = since_arrival + np.asarray(b.value_at(probes))
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-9)


def test_plifo_pushout_identity_hand_trace():
    rep = compare_plifo_pushout(W_BASE)
    assert rep.equal, rep.detail


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from(MODELS))
def test_plifo_pushout_identity_random(seed, model):
    w = generate(model[0], model[1], 800, seed=seed)
    rep = compare_plifo_pushout(w)
    assert rep.equal, rep.detail


def test_fifo_dominates_two_slot_single_message():
    w = hand_workload([1.0], [2.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        rep = compare_fifo_p2(w)
    assert rep.ok and rep.n_epochs == 1 and rep.degenerate


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000), st.floats(0.3, 1.8))
def test_fifo_dominates_two_slot_random(seed, lam):
    w = generate(Exponential(lam), Exponential(1.0), 600, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        rep = compare_fifo_p2(w)
    assert rep.ok, f"violation at {rep.first_violation}"


def test_swap_in_fifo_flags_degenerate():
    w = generate(Exponential(1.0), Exponential(1.0), 2000, seed=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        rep = compare_fifo_p2(w, swap_in_fifo=True)
    assert rep.degenerate


def test_default_window_rule():
    w = generate(Exponential(1.0), Exponential(1.0), 5000, seed=5)
    o = simulate(Pushout(), w)
    w0, w1 = default_window(w, o)
    departs = np.sort(o.depart[o.psi.astype(bool)])
    horizon = max(float(o.depart.max()), float(w.arrivals[-1]))
    assert w0 == pytest.approx(max(0.05 * horizon, departs[99]))
    assert w1 == departs[-1]


def test_ks_distance_of_matching_law_is_small():
    w = generate(Exponential(1.0), Exponential(1.0), 50_000, seed=17)
    o = simulate(Pushout(), w)
    p = extract_aoi_path(w, o, default_window(w, o))
    # two independent unit-rate stages in series
    ks = ks_distance(p, lambda x: 1.0 - (1.0 + x) * np.exp(-x))
    assert ks < 0.02


def test_age_path_structural_invariants():
    w = generate(Exponential(1.0), Exponential(1.0), 5000, seed=23)
    o = simulate(Pushout(), w)
    p = extract_aoi_path(w, o, default_window(w, o))
    # contiguous and ordered pieces
    assert np.array_equal(p.starts[1:], p.ends[:-1])
    assert np.all(p.ends > p.starts)
    # the value t - offset stays nonnegative on every piece
    assert np.all(p.starts - p.offsets >= 0)
    # slope is +1 inside pieces, so jumps between pieces are nonpositive
    left_limits = p.ends[:-1] - p.offsets[:-1]
    right_values = p.starts[1:] - p.offsets[1:]
    assert np.all(right_values <= left_limits + 1e-12)


def test_path_quantiles_inverse_of_cdf():
    from aoiq import path_cdf, path_quantiles
    w = generate(Exponential(1.0), Exponential(1.0), 5000, seed=29)
    o = simulate(Pushout(), w)
    p = extract_aoi_path(w, o, default_window(w, o))
    qs = np.arange(1, 100) / 100.0
    xs = path_quantiles(p, qs)
    assert np.all(np.diff(xs) >= 0)
    back = path_cdf(p, xs)
    assert np.allclose(back, qs, atol=1e-9)


def test_exports(tmp_path):
    import json
    from aoiq import path_cdf
    from aoiq.paths import path_to_csv, stats_to_json
    w = generate(Exponential(1.0), Exponential(1.0), 500, seed=2)
    o = simulate(Pushout(), w)
    p = extract_naoi_path(w, o, default_window(w, o))
    with open(tmp_path / "p.csv", "w") as fh:
        path_to_csv(p, fh)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t0,t1,value"
    assert len(lines) == 1 + len(p.starts)
    blob = json.dumps(stats_to_json(path_stats(p, u_grid=[1.0], x_grid=[0.5])))
    assert "time_mean" in blob and "atom_zero" in blob


def test_batch_time_means_consistency():
    from aoiq import batch_time_means
    w = generate(Exponential(1.0), Exponential(1.0), 5000, seed=31)
    o = simulate(Pushout(), w)
    for extract in (extract_aoi_path, extract_naoi_path):
        p = extract(w, o, default_window(w, o))
        bm = batch_time_means(p, 20)
        assert len(bm) == 20
        # equal windows: the batch means average back to the overall mean
        assert bm.mean() == pytest.approx(path_stats(p).time_mean, rel=1e-9)


def test_plifo_pushout_identity_with_lattice_ties():
    w = generate(Deterministic(1.0), Deterministic(1.0), 500, seed=1)
    rep = compare_plifo_pushout(w)
    assert rep.equal, rep.detail
    # mixed lattice: some services tie with the next arrival, some do not
    w2 = hand_workload([1.0, 2.0, 3.0, 4.0, 6.0],
                       [1.0, 2.0, 1.0, 0.5, 1.0])
    rep2 = compare_plifo_pushout(w2)
    assert rep2.equal, rep2.detail


def test_plifo_pushout_identity_single_message():
    rep = compare_plifo_pushout(hand_workload([1.0], [0.5]))
    assert rep.equal
