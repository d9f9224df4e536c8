"""Closed-form means, transforms and atoms versus long simulations.

For exponential interarrivals and services with rates 1 the four stationary
means are exactly (2, 1, 2.5, 1.5) for (pushout age, pushout gap, blocking
age, blocking gap); the sample paths reproduce them, along with the zero
atoms 1/2 (pushout) and 1/4 (blocking) and the transforms at a few points.
"""

import numpy as np

from aoiq import (Exponential, default_window, extract_aoi_path,
                  extract_naoi_path, generate, lt_naoi, naoi_atom,
                  parse_policy, path_stats, simulate, table_means)
from aoiq.analytic import Model

model = Model(Exponential(1.0), Exponential(1.0))
n, reps = 50_000, 4

print("analytic means:", {f"{p}/{m}": v for (p, m), v
                          in table_means(model).items()})
print()

for ptxt in ("pushout", "blocking"):
    means_a, means_b, atoms, lts = [], [], [], []
    for rep in range(reps):
        w = generate(model.tau, model.sigma, n, seed=100 + rep)
        o = simulate(parse_policy(ptxt), w)
        win = default_window(w, o)
        sa = path_stats(extract_aoi_path(w, o, win))
        sb = path_stats(extract_naoi_path(w, o, win), u_grid=[1.0])
        means_a.append(sa.time_mean)
        means_b.append(sb.time_mean)
        atoms.append(sb.atom_zero)
        lts.append(sb.lt[1.0])
    print(f"{ptxt}: simulated age mean {np.mean(means_a):.4f}, "
          f"gap mean {np.mean(means_b):.4f}")
    print(f"  zero-atom  sim {np.mean(atoms):.4f}   "
          f"analytic {naoi_atom(model, ptxt):.4f}")
    print(f"  gap transform at u=1  sim {np.mean(lts):.4f}   "
          f"analytic {lt_naoi(model, ptxt, 1.0):.4f}")
    print()
