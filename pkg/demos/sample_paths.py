"""Walk through a tiny workload by hand: policies, outcomes, and the two
freshness paths.

The age path grows at unit slope and drops at every completed read; the
arrival-gap path is flat, jumps up at arrivals, and resets to zero whenever
the latest arrival has been fully read.
"""

import numpy as np

from aoiq import (Blocking, Exponential, Pushout, Workload, extract_aoi_path,
                  extract_naoi_path, path_stats, simulate)

w = Workload(arrivals=np.array([1.0, 2.0, 3.5]),
             services=np.array([0.5, 2.0, 1.0]),
             seed=0, tau=Exponential(1.0), sigma=Exponential(1.0))

print("workload: arrivals", w.arrivals, "services", w.services)
print()

for policy in (Pushout(), Blocking()):
    o = simulate(policy, w)
    print(f"{type(policy).__name__}:")
    print("  accepted:", o.chi, " fully read:", o.psi)
    print("  departures:", o.depart)
    print()

o = simulate(Pushout(), w)
age = extract_aoi_path(w, o, (1.5, 4.5))
gap = extract_naoi_path(w, o, (1.5, 4.5))

print("pushout age path pieces (t0, t1, offset) with value t - offset:")
for piece in age.piece_list():
    print("  ", piece)
print("pushout arrival-gap path pieces (t0, t1, value):")
for piece in gap.piece_list():
    print("  ", piece)
print()

stats = path_stats(gap, u_grid=[1.0])
print(f"time-average gap on [1.5, 4.5): {stats.time_mean:.4f}")
print(f"fraction of time the gap is exactly zero: {stats.atom_zero:.4f}")
print(f"time-average of exp(-gap): {stats.lt[1.0]:.4f}")
