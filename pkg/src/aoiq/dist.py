"""Parametric laws for interarrival and service times.

Every family carries an exact Laplace transform, exact first and second
moments, and a vectorized inverse-transform sampler, so the analytic engine
and the simulator draw from literally the same object.  The family is kept
deliberately small: anything richer is expressed through Erlang shapes and
two-level mixtures, which preserve transform exactness.

Sampling consumes a fixed number of uniforms per variate (``uniforms_per_draw``)
so that extending a sample path never reshuffles earlier draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .quadrature import integrate

__all__ = [
    "Dist", "Exponential", "Deterministic", "UniformInterval", "Erlang",
    "Mixture", "CrossMoments", "cross_moments", "DistValidationError",
    "dist_from_config", "dist_to_config",
]

_TAIL_EPS = 1e-10


class DistValidationError(ValueError):
    """Raised when a distribution is constructed with invalid parameters."""


class Dist:
    """Base class for the nonnegative distribution families."""

    # -- analytic surface -------------------------------------------------
    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def moment(self, p: int) -> float:
        """Exact p-th moment, p in {1, 2}."""
        if p == 1:
            return self.mean()
        if p == 2:
            return self.second_moment()
        raise ValueError("only moments of order 1 and 2 are supported")

    def laplace(self, u: float) -> float:
        """E exp(-u X) for u >= 0."""
        raise NotImplementedError

    def laplace_weighted_mean(self, u: float) -> float:
        """E[X exp(-u X)], i.e. minus the transform's derivative."""
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        """P(X > x)."""
        return 1.0 - self.cdf(x)

    def density(self, x):
        """Density of the absolutely continuous part (vectorized).

        At a jump of the density the midpoint value is returned, which keeps
        trapezoidal quadrature through the jump second-order accurate.
        """
        raise NotImplementedError

    def atoms(self) -> tuple[tuple[float, float], ...]:
        """Point masses as (location, mass) pairs."""
        return ()

    def atom_at(self, x: float) -> float:
        for loc, m in self.atoms():
            if loc == x:
                return m
        return 0.0

    def breakpoints(self) -> tuple[float, ...]:
        """Locations where cdf/density are not smooth (atoms, support edges)."""
        return ()

    def ppf(self, q: float) -> float:
        raise NotImplementedError

    def tail_cut(self, eps: float = _TAIL_EPS) -> float:
        """Quantile at 1 - eps; quadrature and grids truncate here."""
        return self.ppf(1.0 - eps)

    def partial_laplace_above(self, u: float, t: float) -> float:
        """E[exp(-u X); X > t] (strict inequality)."""
        raise NotImplementedError

    def mean_excess(self, t: float) -> float:
        """E (X - t)^+."""
        raise NotImplementedError

    @property
    def is_purely_atomic(self) -> bool:
        return False

    # -- sampling ----------------------------------------------------------
    @property
    def uniforms_per_draw(self) -> int:
        raise NotImplementedError

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Inverse-transform a (n, uniforms_per_draw) block of U(0,1) draws."""
        raise NotImplementedError

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        block = rng.random((n, self.uniforms_per_draw))
        return self.from_uniforms(block)

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.sample_n(rng, 1)[0])


@dataclass(frozen=True)
class Exponential(Dist):
    rate: float

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise DistValidationError("exponential rate must be positive")

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate ** 2

    def laplace(self, u):
        return self.rate / (self.rate + u)

    def laplace_weighted_mean(self, u):
        return self.rate / (self.rate + u) ** 2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0)))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)))

    def ppf(self, q):
        return -math.log1p(-q) / self.rate

    def partial_laplace_above(self, u, t):
        t = max(t, 0.0)
        return self.rate / (self.rate + u) * math.exp(-(self.rate + u) * t)

    def mean_excess(self, t):
        if t <= 0:
            return self.mean() - t
        return math.exp(-self.rate * t) / self.rate

    @property
    def uniforms_per_draw(self):
        return 1

    def from_uniforms(self, u):
        return -np.log1p(-u[:, 0]) / self.rate


@dataclass(frozen=True)
class Deterministic(Dist):
    value: float

    def __post_init__(self):
        if not self.value > 0 or not math.isfinite(self.value):
            raise DistValidationError("deterministic value must be positive")

    def mean(self):
        return self.value

    def second_moment(self):
        return self.value ** 2

    def laplace(self, u):
        return math.exp(-u * self.value)

    def laplace_weighted_mean(self, u):
        return self.value * math.exp(-u * self.value)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.value, 1.0, 0.0)

    def density(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def atoms(self):
        return ((self.value, 1.0),)

    def breakpoints(self):
        return (self.value,)

    def ppf(self, q):
        return self.value

    def partial_laplace_above(self, u, t):
        return math.exp(-u * self.value) if t < self.value else 0.0

    def mean_excess(self, t):
        return max(self.value - t, 0.0)

    @property
    def is_purely_atomic(self):
        return True

    @property
    def uniforms_per_draw(self):
        return 1  # consumed but unused, keeps block widths uniform

    def from_uniforms(self, u):
        return np.full(u.shape[0], self.value)


@dataclass(frozen=True)
class UniformInterval(Dist):
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or not math.isfinite(self.hi):
            raise DistValidationError("uniform interval needs 0 < lo < hi")

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def second_moment(self):
        a, b = self.lo, self.hi
        return (a * a + a * b + b * b) / 3.0

    def laplace(self, u):
        if u == 0:
            return 1.0
        w = self.hi - self.lo
        return math.exp(-u * self.lo) * (-math.expm1(-u * w)) / (u * w)

    def laplace_weighted_mean(self, u):
        if u == 0:
            return self.mean()
        a, b = self.lo, self.hi
        ia = (a / u + 1.0 / u ** 2) * math.exp(-u * a)
        ib = (b / u + 1.0 / u ** 2) * math.exp(-u * b)
        return (ia - ib) / (b - a)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        h = 1.0 / (self.hi - self.lo)
        inside = (x > self.lo) & (x < self.hi)
        edge = (x == self.lo) | (x == self.hi)
        return np.where(inside, h, 0.0) + np.where(edge, 0.5 * h, 0.0)

    def breakpoints(self):
        return (self.lo, self.hi)

    def ppf(self, q):
        return self.lo + q * (self.hi - self.lo)

    def tail_cut(self, eps=_TAIL_EPS):
        return self.hi

    def partial_laplace_above(self, u, t):
        if t >= self.hi:
            return 0.0
        m = max(t, self.lo)
        w = self.hi - self.lo
        if u == 0:
            return (self.hi - m) / w
        return math.exp(-u * m) * (-math.expm1(-u * (self.hi - m))) / (u * w)

    def mean_excess(self, t):
        if t >= self.hi:
            return 0.0
        if t <= self.lo:
            return self.mean() - t
        return (self.hi - t) ** 2 / (2.0 * (self.hi - self.lo))

    @property
    def uniforms_per_draw(self):
        return 1

    def from_uniforms(self, u):
        return self.lo + u[:, 0] * (self.hi - self.lo)


@dataclass(frozen=True)
class Erlang(Dist):
    shape: int
    rate: float

    def __post_init__(self):
        if not (isinstance(self.shape, int) and self.shape >= 1):
            raise DistValidationError("erlang shape must be a positive integer")
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise DistValidationError("erlang rate must be positive")

    def mean(self):
        return self.shape / self.rate

    def second_moment(self):
        return self.shape * (self.shape + 1) / self.rate ** 2

    def laplace(self, u):
        return (self.rate / (self.rate + u)) ** self.shape

    def laplace_weighted_mean(self, u):
        k, lam = self.shape, self.rate
        return k * lam ** k / (lam + u) ** (k + 1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return special.gammainc(self.shape, self.rate * np.maximum(x, 0.0))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return special.gammaincc(self.shape, self.rate * np.maximum(x, 0.0))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        k, lam = self.shape, self.rate
        out = lam ** k * xp ** (k - 1) * np.exp(-lam * xp) / math.gamma(k)
        return np.where(x < 0, 0.0, out)

    def breakpoints(self):
        return ()

    def ppf(self, q):
        return float(special.gammaincinv(self.shape, q)) / self.rate

    def partial_laplace_above(self, u, t):
        # e^{-ux} reweights the Erlang into one with rate lam+u
        k, lam = self.shape, self.rate
        scale = (lam / (lam + u)) ** k
        return scale * float(special.gammaincc(k, (lam + u) * max(t, 0.0)))

    def mean_excess(self, t):
        if t <= 0:
            return self.mean() - t
        k, lam = self.shape, self.rate
        tail_mean = (k / lam) * float(special.gammaincc(k + 1, lam * t))
        return tail_mean - t * float(special.gammaincc(k, lam * t))

    @property
    def uniforms_per_draw(self):
        return self.shape

    def from_uniforms(self, u):
        return -np.log1p(-u).sum(axis=1) / self.rate


@dataclass(frozen=True)
class Mixture(Dist):
    weights: tuple[float, ...]
    parts: tuple[Dist, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.parts) or not self.parts:
            raise DistValidationError("weights and parts must align and be nonempty")
        if any(w < 0 for w in self.weights):
            raise DistValidationError("mixture weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise DistValidationError("mixture weights must sum to 1")
        if self._depth() > 2:
            raise DistValidationError("mixture nesting deeper than 2 is not supported")

    def _depth(self) -> int:
        sub = [p._depth() for p in self.parts if isinstance(p, Mixture)]
        return 1 + max(sub, default=0)

    def _wsum(self, call, *args):
        return sum(w * call(p, *args) for w, p in zip(self.weights, self.parts))

    def mean(self):
        return self._wsum(lambda p: p.mean())

    def second_moment(self):
        return self._wsum(lambda p: p.second_moment())

    def laplace(self, u):
        return self._wsum(lambda p: p.laplace(u))

    def laplace_weighted_mean(self, u):
        return self._wsum(lambda p: p.laplace_weighted_mean(u))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * p.cdf(x) for w, p in zip(self.weights, self.parts))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * p.density(x) for w, p in zip(self.weights, self.parts))

    def atoms(self):
        acc: dict[float, float] = {}
        for w, p in zip(self.weights, self.parts):
            for loc, m in p.atoms():
                acc[loc] = acc.get(loc, 0.0) + w * m
        return tuple(sorted(acc.items()))

    def breakpoints(self):
        pts: set[float] = set()
        for p in self.parts:
            pts.update(p.breakpoints())
        return tuple(sorted(pts))

    def ppf(self, q):
        # generic bisection on the cdf; only used for tail cuts
        hi = max(p.ppf(min(q, 1 - 1e-15)) if not isinstance(p, Deterministic)
                 else p.value for p in self.parts)
        lo = 0.0
        hi = max(hi, 1e-12) * 1.0000001
        while float(self.cdf(hi)) < q:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.cdf(mid)) < q:
                lo = mid
            else:
                hi = mid
        return hi

    def tail_cut(self, eps=_TAIL_EPS):
        return max(p.tail_cut(eps) for p in self.parts)

    def partial_laplace_above(self, u, t):
        return self._wsum(lambda p: p.partial_laplace_above(u, t))

    def mean_excess(self, t):
        return self._wsum(lambda p: p.mean_excess(t))

    @property
    def is_purely_atomic(self):
        return all(p.is_purely_atomic for p in self.parts)

    @property
    def uniforms_per_draw(self):
        return 1 + max(p.uniforms_per_draw for p in self.parts)

    def from_uniforms(self, u):
        cum = np.cumsum(self.weights)
        which = np.searchsorted(cum, u[:, 0], side="right")
        which = np.minimum(which, len(self.parts) - 1)
        out = np.empty(u.shape[0])
        for i, p in enumerate(self.parts):
            rows = which == i
            if rows.any():
                out[rows] = p.from_uniforms(u[rows, 1:1 + p.uniforms_per_draw])
        return out


# -- cross moments ---------------------------------------------------------

@dataclass(frozen=True)
class CrossMoments:
    """Pairwise functionals of independent (tau, sigma): E min, P(tau>=sigma), E(tau-sigma)^+."""
    e_min: float
    p_ge: float
    e_pos: float


def _p_tau_ge(tau: Dist, s: float) -> float:
    return float(tau.sf(s)) + tau.atom_at(s)


def cross_moments(tau: Dist, sigma: Dist, tol: float = 1e-10) -> CrossMoments:
    """Cross moments of independent tau, sigma.

    Closed forms are used when either side is Exponential or Deterministic;
    otherwise adaptive quadrature over the known cdfs, truncated at the
    1 - 1e-10 quantile of the heavier distribution.
    """
    if isinstance(tau, Exponential):
        lam = tau.rate
        e_pos = sigma.laplace(lam) / lam
        p_ge = sigma.laplace(lam)
        e_min = tau.mean() - e_pos
        return CrossMoments(e_min, p_ge, e_pos)
    if isinstance(sigma, Exponential):
        mu = sigma.rate
        e_min = (1.0 - tau.laplace(mu)) / mu
        p_ge = 1.0 - tau.laplace(mu)
        e_pos = tau.mean() - e_min
        return CrossMoments(e_min, p_ge, e_pos)
    if isinstance(sigma, Deterministic):
        c = sigma.value
        cuts = tau.breakpoints()
        e_min = integrate(lambda x: float(tau.sf(x)), 0.0, c, cuts, tol)
        return CrossMoments(e_min, _p_tau_ge(tau, c), tau.mean_excess(c))
    if isinstance(tau, Deterministic):
        c = tau.value
        cuts = sigma.breakpoints()
        e_min = integrate(lambda x: float(sigma.sf(x)), 0.0, c, cuts, tol)
        p_ge = float(sigma.cdf(c))
        e_pos = integrate(lambda x: float(sigma.cdf(x)), 0.0, c, cuts, tol)
        return CrossMoments(e_min, p_ge, e_pos)

    upper = max(tau.tail_cut(), sigma.tail_cut())
    cuts = tuple(sorted({*tau.breakpoints(), *sigma.breakpoints()}))
    e_min = integrate(lambda x: float(tau.sf(x)) * float(sigma.sf(x)),
                      0.0, upper, cuts, tol)
    p_ge = sum(m * _p_tau_ge(tau, s) for s, m in sigma.atoms())
    p_ge += integrate(lambda s: float(sigma.density(s)) * float(tau.sf(s)),
                      0.0, upper, cuts, tol)
    e_pos = sum(m * tau.mean_excess(s) for s, m in sigma.atoms())
    e_pos += integrate(lambda s: float(sigma.density(s)) * tau.mean_excess(s),
                       0.0, upper, cuts, tol)
    return CrossMoments(e_min, min(max(p_ge, 0.0), 1.0), e_pos)


# -- config round trip -------------------------------------------------------

def dist_to_config(spec: Dist) -> dict:
    """Tagged-record form used by config files and trace headers."""
    if isinstance(spec, Exponential):
        return {"kind": "exp", "rate": spec.rate}
    if isinstance(spec, Deterministic):
        return {"kind": "det", "value": spec.value}
    if isinstance(spec, UniformInterval):
        return {"kind": "uniform", "lo": spec.lo, "hi": spec.hi}
    if isinstance(spec, Erlang):
        return {"kind": "erlang", "shape": spec.shape, "rate": spec.rate}
    if isinstance(spec, Mixture):
        return {"kind": "mixture", "weights": list(spec.weights),
                "parts": [dist_to_config(p) for p in spec.parts]}
    raise TypeError(f"unknown distribution {spec!r}")


def dist_from_config(obj: dict | str) -> Dist:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "exp":
        return Exponential(rate=float(obj["rate"]))
    if kind == "det":
        return Deterministic(value=float(obj["value"]))
    if kind == "uniform":
        return UniformInterval(lo=float(obj["lo"]), hi=float(obj["hi"]))
    if kind == "erlang":
        return Erlang(shape=int(obj["shape"]), rate=float(obj["rate"]))
    if kind == "mixture":
        return Mixture(weights=tuple(float(w) for w in obj["weights"]),
                       parts=tuple(dist_from_config(p) for p in obj["parts"]))
    raise DistValidationError(f"unknown distribution kind {kind!r}")
