"""Exact piecewise sample paths of the two freshness processes.

The age process (time since the arrival of the last fully read message) is
piecewise linear with unit slope; the arrival-gap process (last arrival minus
last fully-read arrival) is piecewise constant.  Both are derived exactly from
event times, so time averages, transforms and distribution functions are
computed in closed form per piece with no time discretization.

The reference arrival A*(t) is the largest arrival epoch among messages whose
full service completed by t.  For the bufferless policies this is the textbook
definition; for the stacked (preemptive-resume) and queued policies it ignores
late completions of stale messages, which is exactly what makes the pushout
equivalence below hold pathwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policies import (Fifo, OutcomeSeq, PreemptiveLifo, Pushout, PushoutTwo,
                       simulate)
from .workload import Workload

__all__ = [
    "DriftPath", "StepPath", "PathStats", "EmptyWindow",
    "extract_aoi_path", "extract_naoi_path", "path_stats", "default_window",
    "path_cdf", "path_quantiles", "stats_to_json", "ks_distance",
    "batch_time_means",
    "compare_plifo_pushout", "compare_fifo_p2",
    "PathIdentityReport", "DominationReport", "path_to_csv",
]


class EmptyWindow(ValueError):
    """No fully-read message departs before the window opens."""


@dataclass(frozen=True, eq=False)
class DriftPath:
    """Unit-slope pieces: value(t) = t - offset[i] on [starts[i], ends[i])."""
    starts: np.ndarray
    ends: np.ndarray
    offsets: np.ndarray

    @property
    def window(self) -> tuple[float, float]:
        return float(self.starts[0]), float(self.ends[-1])

    def value_at(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.starts, t, side="right") - 1
        if np.any(idx < 0) or np.any(t >= self.ends[idx]):
            raise ValueError("query time outside the path window")
        return t - self.offsets[idx]

    def piece_list(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c))
                for a, b, c in zip(self.starts, self.ends, self.offsets)]


@dataclass(frozen=True, eq=False)
class StepPath:
    """Constant pieces: value(t) = values[i] on [starts[i], ends[i])."""
    starts: np.ndarray
    ends: np.ndarray
    values: np.ndarray

    @property
    def window(self) -> tuple[float, float]:
        return float(self.starts[0]), float(self.ends[-1])

    def value_at(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.starts, t, side="right") - 1
        if np.any(idx < 0) or np.any(t >= self.ends[idx]):
            raise ValueError("query time outside the path window")
        return self.values[idx]

    def piece_list(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c))
                for a, b, c in zip(self.starts, self.ends, self.values)]


@dataclass(frozen=True)
class PathStats:
    time_mean: float
    atom_zero: float | None
    lt: dict[float, float]
    cdf: dict[float, float]
    window: tuple[float, float]


def _refresh_events(w: Workload, o: OutcomeSeq) -> tuple[np.ndarray, np.ndarray]:
    """Successful departures that advance the last fully-read arrival.

    Returns (times, marks): at time[i] the reference arrival jumps to mark[i];
    marks are strictly increasing, times strictly increasing.
    """
    succ = o.psi.astype(bool)
    if not succ.any():
        raise EmptyWindow("workload produced no fully read message")
    d = o.depart[succ]
    a = w.arrivals[succ]
    order = np.argsort(d, kind="stable")
    d = d[order]
    a = a[order]
    runmax = np.maximum.accumulate(a)
    keep = np.empty(len(a), dtype=bool)
    keep[0] = True
    keep[1:] = a[1:] > runmax[:-1]
    times, marks = d[keep], runmax[keep]
    last = np.empty(len(times), dtype=bool)  # ties: keep the freshest mark
    last[:-1] = times[1:] > times[:-1]
    last[-1] = True
    return times[last], marks[last]


def _resolve_window(times: np.ndarray, window: tuple[float, float] | None):
    if window is None:
        w0, w1 = float(times[0]), float(times[-1])
    else:
        w0, w1 = float(window[0]), float(window[1])
    if not w1 > w0:
        raise EmptyWindow(f"window ({w0}, {w1}) is empty")
    if np.searchsorted(times, w0, side="right") == 0:
        raise EmptyWindow("no fully read message departs before the window opens")
    return w0, w1


def extract_aoi_path(w: Workload, o: OutcomeSeq,
                     window: tuple[float, float] | None = None) -> DriftPath:
    """Age path on [w0, w1): t minus the last fully-read arrival epoch."""
    times, marks = _refresh_events(w, o)
    w0, w1 = _resolve_window(times, window)
    inner = times[(times > w0) & (times < w1)]
    starts = np.concatenate(([w0], inner))
    ends = np.concatenate((inner, [w1]))
    offsets = marks[np.searchsorted(times, starts, side="right") - 1]
    return DriftPath(starts=starts, ends=ends, offsets=offsets)


def extract_naoi_path(w: Workload, o: OutcomeSeq,
                      window: tuple[float, float] | None = None) -> StepPath:
    """Arrival-gap path on [w0, w1): last arrival minus last fully-read arrival."""
    times, marks = _refresh_events(w, o)
    w0, w1 = _resolve_window(times, window)
    arr = w.arrivals
    bp = np.unique(np.concatenate((arr, times)))
    inner = bp[(bp > w0) & (bp < w1)]
    starts = np.concatenate(([w0], inner))
    ends = np.concatenate((inner, [w1]))
    ai = np.searchsorted(arr, starts, side="right") - 1
    if ai[0] < 0:
        raise EmptyWindow("no arrival before the window opens")
    last_arrival = arr[ai]
    ref = marks[np.searchsorted(times, starts, side="right") - 1]
    return StepPath(starts=starts, ends=ends, values=last_arrival - ref)


def default_window(w: Workload, o: OutcomeSeq) -> tuple[float, float]:
    """Warm-up rule: start after 5% of the horizon or the 100th fully-read
    departure (whichever is later), end at the last fully-read departure."""
    succ = o.psi.astype(bool)
    departs = np.sort(o.depart[succ])
    if len(departs) < 3:
        raise EmptyWindow("too few fully read messages for a statistics window")
    horizon = max(float(o.depart.max()), float(w.arrivals[-1]))
    k = min(99, len(departs) - 2)
    w0 = max(0.05 * horizon, float(departs[k]))
    w1 = float(departs[-1])
    if not w1 > w0:
        raise EmptyWindow("warm-up swallowed the whole horizon")
    return w0, w1


# -- exact per-piece statistics ---------------------------------------------

def _drift_ranges(path: DriftPath) -> tuple[np.ndarray, np.ndarray]:
    return path.starts - path.offsets, path.ends - path.offsets


def path_cdf(path: DriftPath | StepPath, xs) -> np.ndarray:
    """Time-weighted distribution function of the path, evaluated at xs."""
    xs = np.asarray(xs, dtype=float)
    w0, w1 = path.window
    width = w1 - w0
    if isinstance(path, DriftPath):
        lo, hi = _drift_ranges(path)
        lo = np.sort(lo)
        hi = np.sort(hi)
        clo = np.concatenate(([0.0], np.cumsum(lo)))
        chi = np.concatenate(([0.0], np.cumsum(hi)))
        nlo = np.searchsorted(lo, xs, side="right")
        nhi = np.searchsorted(hi, xs, side="right")
        mass = (xs * nlo - clo[nlo]) - (xs * nhi - chi[nhi])
        return mass / width
    order = np.argsort(path.values)
    v = path.values[order]
    wts = (path.ends - path.starts)[order]
    cw = np.concatenate(([0.0], np.cumsum(wts)))
    return cw[np.searchsorted(v, xs, side="right")] / width


def path_stats(path: DriftPath | StepPath, u_grid=(), x_grid=()) -> PathStats:
    """Exact time averages over the path window: mean, transform values
    E~ exp(-u X), distribution values, and (constant paths) the zero fraction."""
    w0, w1 = path.window
    width = w1 - w0
    lt: dict[float, float] = {}
    if isinstance(path, DriftPath):
        lo, hi = _drift_ranges(path)
        mean = float(np.sum(hi * hi - lo * lo) / 2.0) / width
        for u in u_grid:
            lt[float(u)] = float(np.sum(np.exp(-u * lo) - np.exp(-u * hi)) / u) / width
        atom_zero = None
    else:
        lens = path.ends - path.starts
        mean = float(np.dot(lens, path.values)) / width
        for u in u_grid:
            lt[float(u)] = float(np.dot(lens, np.exp(-u * path.values))) / width
        atom_zero = float(lens[path.values == 0.0].sum()) / width
    cdf_vals = path_cdf(path, np.asarray(list(x_grid), dtype=float)) if len(x_grid) else []
    cdf = {float(x): float(v) for x, v in zip(x_grid, cdf_vals)}
    return PathStats(time_mean=mean, atom_zero=atom_zero, lt=lt, cdf=cdf,
                     window=(w0, w1))


def _integral_upto(path: DriftPath | StepPath, ts: np.ndarray) -> np.ndarray:
    """Exact integral of the path over [w0, t] for each t in the window."""
    if isinstance(path, DriftPath):
        lo, hi = _drift_ranges(path)
        piece = (hi * hi - lo * lo) / 2.0
    else:
        piece = path.values * (path.ends - path.starts)
    cum = np.concatenate(([0.0], np.cumsum(piece)))
    idx = np.minimum(np.searchsorted(path.starts, ts, side="right") - 1,
                     len(path.starts) - 1)
    idx = np.maximum(idx, 0)
    if isinstance(path, DriftPath):
        a = path.starts[idx] - path.offsets[idx]
        b = np.clip(ts - path.offsets[idx], a, None)
        part = (b * b - a * a) / 2.0
    else:
        part = path.values[idx] * np.clip(ts - path.starts[idx], 0.0, None)
    return cum[idx] + part


def batch_time_means(path: DriftPath | StepPath, n_batches: int = 20) -> np.ndarray:
    """Time means over n_batches equal subwindows (for batch-means errors)."""
    w0, w1 = path.window
    edges = np.linspace(w0, w1, n_batches + 1)
    integrals = _integral_upto(path, edges)
    return np.diff(integrals) / np.diff(edges)


def path_quantiles(path: DriftPath | StepPath, qs) -> np.ndarray:
    """Time-weighted quantiles of the path law (inverse of path_cdf)."""
    qs = np.asarray(qs, dtype=float)
    if isinstance(path, DriftPath):
        lo, hi = _drift_ranges(path)
        xs = np.unique(np.concatenate((lo, hi)))
        return np.interp(qs, path_cdf(path, xs), xs)
    order = np.argsort(path.values)
    v = path.values[order]
    cw = np.cumsum((path.ends - path.starts)[order])
    cw /= cw[-1]
    return v[np.minimum(np.searchsorted(cw, qs, side="left"), len(v) - 1)]


def stats_to_json(stats: PathStats) -> dict:
    """JSON-ready summary of the exact path statistics."""
    return {
        "time_mean": stats.time_mean,
        "atom_zero": stats.atom_zero,
        "lt": {str(u): v for u, v in stats.lt.items()},
        "cdf": {str(x): v for x, v in stats.cdf.items()},
        "window": list(stats.window),
    }


def ks_distance(path: DriftPath | StepPath, cdf_fn, n_grid: int = 2048) -> float:
    """Sup distance between the path's time-weighted law and an analytic cdf.

    Evaluates at every kink of the path law plus an even grid over its range;
    for a piecewise-linear empirical cdf against a smooth cdf this pins the
    supremum to grid resolution.
    """
    if isinstance(path, DriftPath):
        lo, hi = _drift_ranges(path)
        pts = np.concatenate((lo, hi))
    else:
        pts = path.values
    top = float(pts.max())
    xs = np.unique(np.concatenate((pts, np.linspace(0.0, top, n_grid))))
    emp = path_cdf(path, xs)
    ana = np.asarray(cdf_fn(xs), dtype=float)
    return float(np.max(np.abs(emp - ana)))


# -- coupled-path comparisons -------------------------------------------------

@dataclass(frozen=True)
class PathIdentityReport:
    equal: bool
    first_mismatch: float | None
    detail: str


@dataclass(frozen=True)
class DominationReport:
    ok: bool
    n_epochs: int
    first_violation: float | None
    max_deficit: float
    degenerate: bool


def compare_plifo_pushout(w: Workload) -> PathIdentityReport:
    """Pathwise identity of the preemptive-resume stack and the pushout server.

    Both are run on the same workload; the age and arrival-gap paths must agree
    piece for piece, with exact floating-point equality of event times.
    """
    o_stack = simulate(PreemptiveLifo(), w)
    o_push = simulate(Pushout(), w)
    try:
        a1 = extract_aoi_path(w, o_stack)
        b1 = extract_naoi_path(w, o_stack)
        empty1 = False
    except EmptyWindow:
        empty1 = True
    try:
        a2 = extract_aoi_path(w, o_push)
        b2 = extract_naoi_path(w, o_push)
        empty2 = False
    except EmptyWindow:
        empty2 = True
    if empty1 or empty2:
        if empty1 and empty2:
            return PathIdentityReport(True, None,
                                      "both paths empty (identically)")
        return PathIdentityReport(False, None,
                                  "exactly one path had no fully read message")

    for name, p1, p2 in (("age", a1, a2), ("gap", b1, b2)):
        v1 = p1.offsets if name == "age" else p1.values
        v2 = p2.offsets if name == "age" else p2.values
        if len(p1.starts) != len(p2.starts):
            return PathIdentityReport(False, p1.window[0],
                                      f"{name} paths have different piece counts")
        bad = np.nonzero((p1.starts != p2.starts) | (p1.ends != p2.ends)
                         | (v1 != v2))[0]
        if len(bad):
            t = float(p1.starts[bad[0]])
            return PathIdentityReport(False, t, f"{name} paths differ at t={t}")
    return PathIdentityReport(True, None, "paths identical")


def compare_fifo_p2(w: Workload, tol: float = 1e-9,
                    swap_in_fifo: bool = False) -> DominationReport:
    """At each successful two-slot departure, the FIFO ages must dominate.

    ``swap_in_fifo`` replaces the two-slot system by FIFO itself; the run then
    degenerates to an equality report and is flagged, which serves as a
    self-test of the harness.
    """
    o_fifo = simulate(Fifo(), w)
    o_two = o_fifo if swap_in_fifo else simulate(PushoutTwo(), w)
    epochs = np.sort(o_two.depart[o_two.psi.astype(bool)])
    w1 = float(max(o_fifo.depart.max(), epochs[-1])) + 1.0
    t0 = min(float(np.sort(o_fifo.depart[o_fifo.psi.astype(bool)])[0]), float(epochs[0]))
    a_f = extract_aoi_path(w, o_fifo, (t0, w1))
    a_2 = extract_aoi_path(w, o_two, (t0, w1))
    b_f = extract_naoi_path(w, o_fifo, (t0, w1))
    b_2 = extract_naoi_path(w, o_two, (t0, w1))
    age_gap = np.asarray(a_f.value_at(epochs)) - np.asarray(a_2.value_at(epochs))
    gap_gap = np.asarray(b_f.value_at(epochs)) - np.asarray(b_2.value_at(epochs))
    deficit = np.minimum(age_gap, gap_gap)
    bad = np.nonzero(deficit < -tol)[0]
    degenerate = bool(np.all(age_gap == 0.0) and np.all(gap_gap == 0.0))
    return DominationReport(
        ok=len(bad) == 0,
        n_epochs=len(epochs),
        first_violation=float(epochs[bad[0]]) if len(bad) else None,
        max_deficit=max(float(-deficit.min()), 0.0) if len(deficit) else 0.0,
        degenerate=degenerate,
    )


def path_to_csv(path: DriftPath | StepPath, fh) -> None:
    third = "offset" if isinstance(path, DriftPath) else "value"
    fh.write(f"t0,t1,{third}\n")
    vals = path.offsets if isinstance(path, DriftPath) else path.values
    for t0, t1, v in zip(path.starts, path.ends, vals):
        fh.write(f"{float(t0)!r},{float(t1)!r},{float(v)!r}\n")
