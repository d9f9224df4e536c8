"""Admission/service policy state machines.

Each policy maps a workload to per-message outcomes: the acceptance flag chi,
the success flag psi (full service delivered), and the departure epoch.  A
departure that lands exactly on an arrival epoch counts as freeing the server
for that arrival; the rule only matters for lattice-valued specs but is
enforced exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .workload import Workload

__all__ = [
    "Pushout", "Blocking", "BlockThenPush", "PushThenBlock", "PushoutTwo",
    "Fifo", "PreemptiveLifo", "OutcomeSeq", "simulate", "parse_policy",
    "policy_label", "InstabilityWarning", "ALL_POLICIES",
]


class InstabilityWarning(UserWarning):
    """Fifo run with mean service >= mean interarrival; output is flagged."""


@dataclass(frozen=True)
class Pushout:
    """Every arrival is accepted and preempts (discards) the message in service."""


@dataclass(frozen=True)
class Blocking:
    """Arrivals to a busy server are rejected; accepted messages always finish."""


@dataclass(frozen=True)
class BlockThenPush:
    """Within a busy period: first ell busy-arrivals blocked, later ones push out."""
    ell: int

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")


@dataclass(frozen=True)
class PushThenBlock:
    """Within a busy period: first ell busy-arrivals push out, later ones blocked."""
    ell: int

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("ell must be >= 0")


@dataclass(frozen=True)
class PushoutTwo:
    """One undisturbable service slot plus one waiting slot that newer arrivals
    overwrite."""


@dataclass(frozen=True)
class Fifo:
    """Infinite queue, first-in first-out, every message fully served."""


@dataclass(frozen=True)
class PreemptiveLifo:
    """Infinite-room preemptive-resume stack; a new arrival always seizes the
    server, interrupted messages later resume and finish."""


PolicyKind = (Pushout | Blocking | BlockThenPush | PushThenBlock
              | PushoutTwo | Fifo | PreemptiveLifo)

ALL_POLICIES = ("pushout", "blocking", "bp:1", "pb:1", "p2", "fifo", "plifo")


@dataclass(frozen=True, eq=False)
class OutcomeSeq:
    chi: np.ndarray     # accepted (0/1)
    psi: np.ndarray     # full service delivered (0/1)
    depart: np.ndarray  # departure epoch (rejection, eviction, or completion)
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        self.chi.setflags(write=False)
        self.psi.setflags(write=False)
        self.depart.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OutcomeSeq):
            return NotImplemented
        return (np.array_equal(self.chi, other.chi)
                and np.array_equal(self.psi, other.psi)
                and np.array_equal(self.depart, other.depart))


def parse_policy(text: str) -> PolicyKind:
    """Parse a policy flag: pushout|blocking|bp:L|pb:L|p2|fifo|plifo."""
    t = text.strip().lower()
    if t == "pushout":
        return Pushout()
    if t == "blocking":
        return Blocking()
    if t == "p2":
        return PushoutTwo()
    if t == "fifo":
        return Fifo()
    if t == "plifo":
        return PreemptiveLifo()
    if t.startswith("bp:"):
        return BlockThenPush(ell=int(t[3:]))
    if t.startswith("pb:"):
        return PushThenBlock(ell=int(t[3:]))
    raise ValueError(f"unknown policy {text!r}")


def policy_label(policy: PolicyKind) -> str:
    if isinstance(policy, Pushout):
        return "pushout"
    if isinstance(policy, Blocking):
        return "blocking"
    if isinstance(policy, BlockThenPush):
        return f"bp:{policy.ell}"
    if isinstance(policy, PushThenBlock):
        return f"pb:{policy.ell}"
    if isinstance(policy, PushoutTwo):
        return "p2"
    if isinstance(policy, Fifo):
        return "fifo"
    return "plifo"


def simulate(policy: PolicyKind, w: Workload) -> OutcomeSeq:
    """Run the policy over the workload.  Pure function of its arguments."""
    if isinstance(policy, Pushout):
        return _sim_pushout(w)
    if isinstance(policy, Blocking):
        return _sim_blocking(w)
    if isinstance(policy, BlockThenPush):
        return _sim_counted(w, block_first=True, ell=policy.ell)
    if isinstance(policy, PushThenBlock):
        return _sim_counted(w, block_first=False, ell=policy.ell)
    if isinstance(policy, PushoutTwo):
        return _sim_p2(w)
    if isinstance(policy, Fifo):
        return _sim_fifo(w)
    if isinstance(policy, PreemptiveLifo):
        return _sim_plifo(w)
    raise TypeError(f"unknown policy {policy!r}")


def _sim_pushout(w: Workload) -> OutcomeSeq:
    t, s = w.arrivals, w.services
    nxt = np.append(t[1:], np.inf)
    done = t + s
    psi = (done <= nxt).astype(np.int8)  # trailing message finishes undisturbed
    depart = np.minimum(done, nxt)
    return OutcomeSeq(chi=np.ones(len(t), dtype=np.int8), psi=psi, depart=depart)


def _sim_blocking(w: Workload) -> OutcomeSeq:
    t, s = w.arrivals, w.services
    n = len(t)
    chi = np.zeros(n, dtype=np.int8)
    depart = np.empty(n)
    busy_until = -np.inf
    for i in range(n):
        if t[i] >= busy_until:  # a departure exactly now frees the server
            chi[i] = 1
            busy_until = t[i] + s[i]
            depart[i] = busy_until
        else:
            depart[i] = t[i]
    return OutcomeSeq(chi=chi, psi=chi.copy(), depart=depart)


def _sim_counted(w: Workload, block_first: bool, ell: int) -> OutcomeSeq:
    """Shared machine for the two mixed policies.

    The busy-arrival counter restarts whenever the server empties; whether the
    first ell busy-arrivals are blocked or push out is the only difference
    between the two variants.
    """
    t, s = w.arrivals, w.services
    n = len(t)
    chi = np.zeros(n, dtype=np.int8)
    psi = np.zeros(n, dtype=np.int8)
    depart = np.empty(n)
    cur = -1            # index in service, -1 if idle
    cur_done = -np.inf  # its scheduled completion
    seen_busy = 0       # busy-arrivals since the busy period started
    for i in range(n):
        if cur >= 0 and cur_done <= t[i]:
            psi[cur] = 1
            depart[cur] = cur_done
            cur = -1
        if cur < 0:
            chi[i] = 1
            cur = i
            cur_done = t[i] + s[i]
            seen_busy = 0
            continue
        seen_busy += 1
        early = seen_busy <= ell
        if early == block_first:  # blocked
            depart[i] = t[i]
        else:  # pushes out the message in service
            depart[cur] = t[i]
            chi[i] = 1
            cur = i
            cur_done = t[i] + s[i]
    if cur >= 0:
        psi[cur] = 1
        depart[cur] = cur_done
    return OutcomeSeq(chi=chi, psi=psi, depart=depart)


def _sim_p2(w: Workload) -> OutcomeSeq:
    t, s = w.arrivals, w.services
    n = len(t)
    psi = np.zeros(n, dtype=np.int8)
    depart = np.empty(n)
    serving = -1
    serving_done = np.inf
    waiting = -1
    for i in range(n):
        # completions up to (and including) the arrival instant
        while serving >= 0 and serving_done <= t[i]:
            psi[serving] = 1
            depart[serving] = serving_done
            if waiting >= 0:
                start = serving_done
                serving = waiting
                serving_done = start + s[serving]
                waiting = -1
            else:
                serving = -1
                serving_done = np.inf
        if serving < 0:
            serving = i
            serving_done = t[i] + s[i]
        elif waiting < 0:
            waiting = i
        else:
            depart[waiting] = t[i]  # evicted by the fresher arrival
            waiting = i
    while serving >= 0:
        psi[serving] = 1
        depart[serving] = serving_done
        if waiting >= 0:
            start = serving_done
            serving = waiting
            serving_done = start + s[serving]
            waiting = -1
        else:
            serving = -1
    return OutcomeSeq(chi=np.ones(n, dtype=np.int8), psi=psi, depart=depart)


def _sim_fifo(w: Workload) -> OutcomeSeq:
    t, s = w.arrivals, w.services
    n = len(t)
    depart = np.empty(n)
    prev = -np.inf
    for i in range(n):
        prev = (t[i] if t[i] >= prev else prev) + s[i]
        depart[i] = prev
    flags: tuple[str, ...] = ()
    if w.sigma.mean() >= w.tau.mean():
        warnings.warn(InstabilityWarning(
            "fifo with mean service >= mean interarrival: queue is unstable"))
        flags = ("fifo-unstable",)
    ones = np.ones(n, dtype=np.int8)
    return OutcomeSeq(chi=ones, psi=ones.copy(), depart=depart, flags=flags)


def _sim_plifo(w: Workload) -> OutcomeSeq:
    t, s = w.arrivals, w.services
    n = len(t)
    depart = np.empty(n)
    stack: list[tuple[int, float]] = []  # (index, remaining service)
    now = 0.0
    for i in range(n):
        # serve the stack top until the next arrival
        while stack:
            idx, rem = stack[-1]
            finish = now + rem
            if finish <= t[i]:
                depart[idx] = finish
                now = finish
                stack.pop()
            else:
                stack[-1] = (idx, rem - (t[i] - now))
                break
        now = t[i]
        stack.append((i, s[i]))
    while stack:
        idx, rem = stack.pop()
        now += rem
        depart[idx] = now
    ones = np.ones(n, dtype=np.int8)
    return OutcomeSeq(chi=ones, psi=ones.copy(), depart=depart)
