"""Finite workload realizations: arrival epochs plus service times.

A workload is generated once and fed unchanged to every policy, which is what
makes pathwise policy comparisons meaningful.  Arrivals and services come from
disjoint Philox streams keyed by (seed, stream), so regeneration is bit-exact
and extending the horizon never perturbs earlier draws.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dist import Dist, dist_from_config, dist_to_config

__all__ = ["Workload", "generate", "save_workload", "load_workload",
           "TraceFormatError"]

_ARRIVAL_STREAM = 0
_SERVICE_STREAM = 1


class TraceFormatError(ValueError):
    """Raised by load_workload on a malformed or inconsistent trace file."""


@dataclass(frozen=True, eq=False)
class Workload:
    arrivals: np.ndarray
    services: np.ndarray
    seed: int
    tau: Dist
    sigma: Dist

    def __post_init__(self):
        a, s = self.arrivals, self.services
        if len(a) != len(s):
            raise ValueError("arrivals and services must have equal length")
        if len(a) == 0:
            raise ValueError("workload must contain at least one message")
        if a[0] < 0 or np.any(np.diff(a) <= 0):
            raise ValueError("arrival epochs must be strictly increasing and >= 0")
        if np.any(s <= 0):
            raise ValueError("service times must be strictly positive")
        a.setflags(write=False)
        s.setflags(write=False)

    def __len__(self) -> int:
        return len(self.arrivals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Workload):
            return NotImplemented
        return (self.seed == other.seed
                and self.tau == other.tau and self.sigma == other.sigma
                and np.array_equal(self.arrivals, other.arrivals)
                and np.array_equal(self.services, other.services))


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), stream]))


def generate(tau: Dist, sigma: Dist, n: int, seed: int) -> Workload:
    """Draw n i.i.d. (interarrival, service) pairs; first arrival at the first
    interarrival draw."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gaps = tau.sample_n(_stream(seed, _ARRIVAL_STREAM), n)
    services = sigma.sample_n(_stream(seed, _SERVICE_STREAM), n)
    return Workload(arrivals=np.cumsum(gaps), services=services,
                    seed=seed, tau=tau, sigma=sigma)


def save_workload(w: Workload, path) -> None:
    """Write a trace as CSV (full precision) with the generator metadata in
    comment lines, so load_workload(save_workload(w)) == w exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# seed={w.seed}\n")
        fh.write(f"# tau={json.dumps(dist_to_config(w.tau))}\n")
        fh.write(f"# sigma={json.dumps(dist_to_config(w.sigma))}\n")
        fh.write("index,arrival,service\n")
        for i, (a, s) in enumerate(zip(w.arrivals, w.services), start=1):
            fh.write(f"{i},{float(a)!r},{float(s)!r}\n")


def load_workload(path) -> Workload:
    meta: dict[str, str] = {}
    arrivals: list[float] = []
    services: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        header_seen = False
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if not header_seen:
                if line != "index,arrival,service":
                    raise TraceFormatError(
                        f"line {lineno}: expected header 'index,arrival,service'")
                header_seen = True
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise TraceFormatError(f"line {lineno}: expected 3 fields")
            try:
                arrivals.append(float(fields[1]))
                services.append(float(fields[2]))
            except ValueError as exc:
                raise TraceFormatError(f"line {lineno}: {exc}") from exc
    if not header_seen or not arrivals:
        raise TraceFormatError("trace file has no data rows")
    for key in ("seed", "tau", "sigma"):
        if key not in meta:
            raise TraceFormatError(f"missing '# {key}=' metadata line")
    a = np.asarray(arrivals)
    s = np.asarray(services)
    if a[0] < 0 or np.any(np.diff(a) <= 0):
        raise TraceFormatError("arrival epochs must be strictly increasing")
    if np.any(s <= 0):
        raise TraceFormatError("service times must be strictly positive")
    try:
        tau = dist_from_config(meta["tau"])
        sigma = dist_from_config(meta["sigma"])
        seed = int(meta["seed"])
    except (ValueError, KeyError) as exc:
        raise TraceFormatError(f"bad metadata: {exc}") from exc
    return Workload(arrivals=a, services=s, seed=seed, tau=tau, sigma=sigma)
