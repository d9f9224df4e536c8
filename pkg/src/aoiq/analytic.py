"""Closed forms and renewal-route evaluations of the stationary age laws.

For the pushout server, the transform of the stationary age factorizes into
the equilibrium interarrival term and the reading-interval term, and the
arrival-gap law is a zero atom plus the law of a typical cycle.  For the
blocking server, everything reduces to expectations of the renewal grid
functions evaluated at an independent service time; when either side is
exponential those expectations collapse to closed forms, otherwise they are
computed from grid solves.

Routes: "mgi" requires exponential interarrivals, "gim" exponential services,
"gigi" works for any pair via the grid solvers, "auto" picks the cheapest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import (CrossMoments, Deterministic, Dist, Exponential,
                   cross_moments)
from .quadrature import integrate
from .volterra import expect_against, renewal_grids

__all__ = [
    "Model", "SolverOptions", "UnstableModel", "NoSignChange",
    "mean_aoi", "mean_naoi", "lt_aoi", "lt_naoi", "naoi_atom", "table_means",
    "gim_blocking_naoi_atom", "mm_blocking_naoi_density",
    "mm_blocking_naoi_cond_lt_scaled", "mm_blocking_naoi_cond_lt",
    "fifo_mean_aoi_mm", "crossover", "equilibrium_lt", "cycle_lt",
    "reading_interval_lt", ]


class UnstableModel(ValueError):
    """Requested a steady-state quantity of an unstable queue."""


class NoSignChange(ValueError):
    """Root bracketing failed: the mean difference has one sign on the bracket."""


@dataclass(frozen=True)
class Model:
    """Independent interarrival and service laws; successful reads must be
    possible, i.e. P(interarrival >= service) > 0."""
    tau: Dist
    sigma: Dist

    def __post_init__(self):
        if self.cross().p_ge <= 0.0:
            raise ValueError("P(interarrival >= service) must be positive")

    def cross(self) -> CrossMoments:
        return cross_moments(self.tau, self.sigma)

    @property
    def arrival_rate(self) -> float:
        return 1.0 / self.tau.mean()


@dataclass(frozen=True)
class SolverOptions:
    """Grid parameters for the renewal route; defaults scale with the model."""
    h: float | None = None
    t_max: float | None = None

    def resolve(self, model: Model) -> tuple[float, float]:
        h = self.h if self.h is not None else model.tau.mean() / 200.0
        t_need = model.sigma.tail_cut() + 2 * h
        t_max = self.t_max if self.t_max is not None else \
            max(40.0 * max(model.tau.mean(), model.sigma.mean()), t_need)
        if t_max < t_need:
            t_max = t_need
        return h, t_max


def _route(model: Model, route: str) -> str:
    if route == "auto":
        if isinstance(model.tau, Exponential):
            return "mgi"
        if isinstance(model.sigma, Exponential):
            return "gim"
        return "gigi"
    if route == "mgi" and not isinstance(model.tau, Exponential):
        raise ValueError("mgi route needs exponential interarrivals")
    if route == "gim" and not isinstance(model.sigma, Exponential):
        raise ValueError("gim route needs exponential services")
    return route


# -- cross transforms for the pushout formulas --------------------------------

def _lt_below_incl(x: Dist, u: float, t: float) -> float:
    """E[exp(-u X); X <= t]."""
    return x.laplace(u) - x.partial_laplace_above(u, t)


def lt_service_on_success(tau: Dist, sigma: Dist, u: float) -> float:
    """E[exp(-u sigma); tau >= sigma]."""
    if isinstance(tau, Exponential):
        return sigma.laplace(u + tau.rate)
    if isinstance(sigma, Exponential):
        mu = sigma.rate
        return mu * (1.0 - tau.laplace(u + mu)) / (u + mu)
    if isinstance(sigma, Deterministic):
        c = sigma.value
        return math.exp(-u * c) * (float(tau.sf(c)) + tau.atom_at(c))
    if isinstance(tau, Deterministic):
        return _lt_below_incl(sigma, u, tau.value)
    total = sum(m * math.exp(-u * s) * (float(tau.sf(s)) + tau.atom_at(s))
                for s, m in sigma.atoms())
    cuts = tuple(sorted({*tau.breakpoints(), *sigma.breakpoints()}))
    total += integrate(
        lambda s: float(sigma.density(s)) * math.exp(-u * s) * float(tau.sf(s)),
        0.0, max(tau.tail_cut(), sigma.tail_cut()), cuts)
    return total


def lt_gap_on_failure(tau: Dist, sigma: Dist, u: float) -> float:
    """E[exp(-u tau); tau < sigma]."""
    if isinstance(sigma, Exponential):
        return tau.laplace(u + sigma.rate)
    if isinstance(tau, Exponential):
        lam = tau.rate
        return lam * (1.0 - sigma.laplace(lam + u)) / (lam + u)
    if isinstance(tau, Deterministic):
        c = tau.value
        return math.exp(-u * c) * float(sigma.sf(c))
    if isinstance(sigma, Deterministic):
        c = sigma.value
        return (tau.laplace(u) - tau.partial_laplace_above(u, c)
                - tau.atom_at(c) * math.exp(-u * c))
    total = sum(m * math.exp(-u * t) * float(sigma.sf(t))
                for t, m in tau.atoms())
    cuts = tuple(sorted({*tau.breakpoints(), *sigma.breakpoints()}))
    total += integrate(
        lambda t: float(tau.density(t)) * math.exp(-u * t) * float(sigma.sf(t)),
        0.0, max(tau.tail_cut(), sigma.tail_cut()), cuts)
    return total


def lt_gap_on_success(tau: Dist, sigma: Dist, u: float) -> float:
    """E[exp(-u tau); tau >= sigma] (complement of the failure event)."""
    return tau.laplace(u) - lt_gap_on_failure(tau, sigma, u)


def equilibrium_lt(x: Dist, u: float) -> float:
    """Transform of the stationary (equilibrium) version of X."""
    return (1.0 - x.laplace(u)) / (u * x.mean())


def reading_interval_lt(model: Model, u: float) -> float:
    """Transform of a typical reading interval under pushout: time from an
    idle-server arrival to the next completed read."""
    s = lt_service_on_success(model.tau, model.sigma, u)
    t = lt_gap_on_failure(model.tau, model.sigma, u)
    return s / (1.0 - t)


def cycle_lt(model: Model, u: float) -> float:
    """Transform of a typical pushout cycle: gap between consecutive
    idle-server arrivals.

    A cycle is a geometric number of failed gaps (tau < sigma) followed by one
    successful gap (tau >= sigma); the non-strict success event matches the
    completion rule exactly, which matters on lattices where ties have mass.
    """
    num = lt_gap_on_success(model.tau, model.sigma, u)
    den = 1.0 - lt_gap_on_failure(model.tau, model.sigma, u)
    return num / den


# -- public surface ------------------------------------------------------------

def mean_aoi(model: Model, policy: str, route: str = "auto",
             solver: SolverOptions | None = None) -> float:
    """Stationary mean age for policy in {"pushout", "blocking"}."""
    tau, sigma = model.tau, model.sigma
    r = _route(model, route)
    if policy == "pushout":
        if r == "mgi":
            lam = tau.rate
            return 1.0 / (lam * sigma.laplace(lam))
        if r == "gim":
            return tau.second_moment() / (2.0 * tau.mean()) + sigma.mean()
        cm = model.cross()
        return tau.second_moment() / (2.0 * tau.mean()) + cm.e_min / cm.p_ge
    if policy != "blocking":
        raise ValueError("closed forms cover the pushout and blocking policies")
    if r == "mgi":
        lam = tau.rate
        es, es2 = sigma.mean(), sigma.second_moment()
        return es + 1.0 / lam + 0.5 * lam * es2 / (1.0 + lam * es)
    if r == "gim":
        mu = sigma.rate
        L, D = tau.laplace, tau.laplace_weighted_mean
        return 1.0 / mu + tau.second_moment() / (2.0 * tau.mean()) \
            + D(mu) / (1.0 - L(mu))
    h, t_max = (solver or SolverOptions()).resolve(model)
    grids = renewal_grids(tau, 1.0, t_max, h)
    e_counts = expect_against(grids.counts, sigma, tau)
    e_fp_sq = expect_against(grids.fp_sq, sigma, tau)
    return sigma.mean() + e_fp_sq / (2.0 * tau.mean() * e_counts)


def mean_naoi(model: Model, policy: str, route: str = "auto",
              solver: SolverOptions | None = None) -> float:
    """Stationary mean arrival gap for policy in {"pushout", "blocking"}."""
    tau, sigma = model.tau, model.sigma
    r = _route(model, route)
    if policy == "pushout":
        if r == "mgi":
            lam = tau.rate
            return 1.0 / (lam * sigma.laplace(lam)) - 1.0 / lam
        if r == "gim":
            return sigma.mean()
        cm = model.cross()
        return cm.e_min / cm.p_ge
    if policy != "blocking":
        raise ValueError("closed forms cover the pushout and blocking policies")
    if r == "mgi":
        lam = tau.rate
        es, es2 = sigma.mean(), sigma.second_moment()
        return es + 0.5 * lam * es2 / (1.0 + lam * es)
    if r == "gim":
        mu = sigma.rate
        return 1.0 / mu + tau.laplace_weighted_mean(mu) / (1.0 - tau.laplace(mu))
    h, t_max = (solver or SolverOptions()).resolve(model)
    grids = renewal_grids(tau, 1.0, t_max, h)
    e_counts = expect_against(grids.counts, sigma, tau)
    e_z = expect_against(grids.epoch_sum, sigma, tau)
    return sigma.mean() + e_z / e_counts


def naoi_atom(model: Model, policy: str, route: str = "auto",
              solver: SolverOptions | None = None) -> float:
    """Stationary probability that the processor holds the freshest arrival."""
    tau, sigma = model.tau, model.sigma
    cm = model.cross()
    if policy == "pushout":
        return cm.e_pos / tau.mean()
    if policy != "blocking":
        raise ValueError("closed forms cover the pushout and blocking policies")
    r = _route(model, route)
    if r == "mgi":
        e_counts = 1.0 + tau.rate * sigma.mean()
    elif r == "gim":
        e_counts = 1.0 / (1.0 - tau.laplace(sigma.rate))
    else:
        h, t_max = (solver or SolverOptions()).resolve(model)
        grids = renewal_grids(tau, 1.0, t_max, h)
        e_counts = expect_against(grids.counts, sigma, tau)
    return cm.e_pos / (tau.mean() * e_counts)


def lt_aoi(model: Model, policy: str, u: float, route: str = "auto",
           solver: SolverOptions | None = None) -> float:
    """Transform E~ exp(-u age(0)) of the stationary age."""
    if u <= 0:
        raise ValueError("u must be positive")
    tau, sigma = model.tau, model.sigma
    if policy == "pushout":
        return equilibrium_lt(tau, u) * reading_interval_lt(model, u)
    if policy != "blocking":
        raise ValueError("closed forms cover the pushout and blocking policies")
    r = _route(model, route)
    if r == "mgi":
        lam = tau.rate
        e_fp = lam * sigma.laplace(u) / (lam + u)
        e_counts = 1.0 + lam * sigma.mean()
    elif r == "gim":
        mu = sigma.rate
        L = tau.laplace
        e_fp = (L(u) - L(u + mu)) / (1.0 - L(u + mu))
        e_counts = 1.0 / (1.0 - L(mu))
    else:
        h, t_max = (solver or SolverOptions()).resolve(model)
        grids = renewal_grids(tau, u, t_max, h)
        e_fp = expect_against(grids.fp_lt, sigma, tau)
        e_counts = expect_against(grids.counts, sigma, tau)
    return sigma.laplace(u) * (1.0 - e_fp) / (u * tau.mean() * e_counts)


def lt_naoi(model: Model, policy: str, u: float, route: str = "auto",
            solver: SolverOptions | None = None) -> float:
    """Transform E~ exp(-u gap(0)) of the stationary arrival gap (atom included)."""
    if u <= 0:
        raise ValueError("u must be positive")
    tau, sigma = model.tau, model.sigma
    cm = model.cross()
    if policy == "pushout":
        atom = cm.e_pos / tau.mean()
        return atom + (cm.e_min / tau.mean()) * cycle_lt(model, u)
    if policy != "blocking":
        raise ValueError("closed forms cover the pushout and blocking policies")
    r = _route(model, route)
    m1 = tau.mean()
    if r == "mgi":
        lam = tau.rate
        Ls_u, Ls_l = sigma.laplace(u), sigma.laplace(lam)
        e_counts = 1.0 + lam * sigma.mean()
        e_fp = lam * Ls_u / (lam + u)
        if abs(u - lam) > 1e-6 * lam:
            e_h = (lam ** 2 * (1.0 - Ls_u) - u ** 2 * (1.0 - Ls_l)) \
                / (lam * u * (lam - u))
            e_step = (Ls_u - Ls_l) / (lam - u)
        else:  # removable singularity at u = lam
            dw = sigma.laplace_weighted_mean(lam)
            e_h = (2.0 - lam * dw - 2.0 * Ls_l) / lam
            e_step = dw
        cond = (e_fp * e_h + e_step) / (m1 * e_counts)
        return cm.e_pos / (m1 * e_counts) + cond
    if r == "gim":
        mu = sigma.rate
        L = tau.laplace
        e_counts = 1.0 / (1.0 - L(mu))
        e_fp = (L(u) - L(u + mu)) / (1.0 - L(u + mu))
        e_pre = 1.0 / (1.0 - L(u + mu))
        e_over = (mu * m1 - 1.0 + L(mu)) / (mu * (1.0 - L(u + mu)))
        e_step = L(u + mu) * (mu * m1 - 1.0 + L(mu)) / (mu * (1.0 - L(u + mu)))
    else:
        h, t_max = (solver or SolverOptions()).resolve(model)
        grids = renewal_grids(tau, u, t_max, h)
        e_counts = expect_against(grids.counts, sigma, tau)
        e_fp = expect_against(grids.fp_lt, sigma, tau)
        e_pre = expect_against(grids.pre_lt_sum, sigma, tau)
        e_over = expect_against(grids.overshoot_lt, sigma, tau)
        e_step = expect_against(grids.overshoot_lt_step, sigma, tau)
    atom = cm.e_pos / (m1 * e_counts)
    cond = (e_fp * (m1 * e_pre - e_over) + e_step) / (m1 * e_counts)
    return atom + cond


def table_means(model: Model, route: str = "auto",
                solver: SolverOptions | None = None) -> dict[tuple[str, str], float]:
    """The four stationary means: (policy, measure) -> value."""
    return {
        ("pushout", "aoi"): mean_aoi(model, "pushout", route, solver),
        ("pushout", "naoi"): mean_naoi(model, "pushout", route, solver),
        ("blocking", "aoi"): mean_aoi(model, "blocking", route, solver),
        ("blocking", "naoi"): mean_naoi(model, "blocking", route, solver),
    }


def gim_blocking_naoi_atom(tau: Dist, mu: float, plus_sign: bool = True) -> float:
    """Zero-atom of the blocking arrival gap with exponential(mu) services.

    ``plus_sign=True`` is the form implied by the general ratio
    E(tau-sigma)^+ / (E tau * E counts(sigma)) and is the one the solvers use.
    The ``plus_sign=False`` variant (minus sign on the transform term) is kept
    for comparison only: it fails the exponential-interarrival consistency
    check mu^2/(lam+mu)^2 and is never used internally.
    """
    L = tau.laplace(mu)
    m1 = tau.mean()
    term = mu * m1 - 1.0 + L if plus_sign else mu * m1 - 1.0 - L
    return (1.0 - L) * term / (mu * m1)


def mm_blocking_naoi_cond_lt(u: float, lam: float, mu: float) -> float:
    """Transform of the positive part of the blocking arrival gap, exp/exp."""
    return (mu ** 2 / (lam + 2.0 * mu)
            * (u ** 2 + (2.0 * lam + mu) * u + lam * (lam + 2.0 * mu))
            / ((u + lam) * (u + mu) ** 2))


def mm_blocking_naoi_cond_lt_scaled(u: float, rho: float) -> float:
    """Same transform with time rescaled by the service rate; rho = lam/mu."""
    return ((u ** 2 + (2.0 * rho + 1.0) * u + rho * (rho + 2.0))
            / ((rho + 2.0) * (u + rho) * (u + 1.0) ** 2))


def mm_blocking_naoi_density(t, rho: float):
    """Density of the service-rate-scaled positive part of the blocking gap.

    Partial-fraction inversion of the transform above; at rho = 1 the double
    root forces the explicit limit form, which is also used in a small
    neighborhood to avoid cancellation in (rho - 1)^2.
    """
    t = np.asarray(t, dtype=float)
    if abs(rho - 1.0) < 1e-6:
        return (t * t + 2.0 * t + 2.0) * np.exp(-t) / 6.0
    a = rho / (rho - 1.0) ** 2
    b = (rho ** 2 - 3.0 * rho + 1.0) / (rho - 1.0) ** 2
    c = rho ** 2 / (rho - 1.0)
    return (a * np.exp(-rho * t) + (b + c * t) * np.exp(-t)) / (rho + 2.0)


def fifo_mean_aoi_mm(lam: float, mu: float) -> float:
    """Mean stationary age of the infinite-buffer FIFO queue with exponential
    interarrivals and services; finite only for lam < mu."""
    if not 0 < lam < mu:
        raise UnstableModel("fifo mean age needs 0 < lam < mu")
    return 1.0 / lam + 1.0 / mu + (lam ** 2 / mu ** 2) / (mu - lam)


def crossover(model_family, measure: str, lo: float, hi: float,
              tol: float = 1e-3, route: str = "auto") -> float:
    """Bisection root of mean_pushout(lam) - mean_blocking(lam).

    ``model_family`` maps an arrival rate to a Model; the bracket endpoints
    must give opposite signs.
    """
    fn = mean_aoi if measure == "aoi" else mean_naoi

    def diff(lam: float) -> float:
        m = model_family(lam)
        return fn(m, "pushout", route) - fn(m, "blocking", route)

    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
