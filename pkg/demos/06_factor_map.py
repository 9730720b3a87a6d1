"""From drift-SDE trajectories to a sign-valued spin configuration.

Running the system to dyadic times 2^0, 2^1, ... and taking signs gives
a sequence G_n of spin configurations that stabilizes: the drift pushes
|X_t| to grow linearly while the Brownian fluctuation grows like sqrt(t),
so the flip probability between consecutive dyadic times decays like a
Gaussian tail.  The limiting signs reproduce the broadcast two-point
function theta^distance.
"""

import math

import numpy as np

from isingtree import NoiseSource, build_tree, dyadic_times, factor_signs, integrate, uniform
from isingtree.harness import flip_bound

theta = 0.2
beta = math.atanh(theta)
topo = build_tree(3, 2)
times = dyadic_times(4)  # 1, 2, 4, 8, 16
reps = 4000

traj = integrate(topo, uniform(beta), NoiseSource(13), times[-1], 0.01,
                 n_replicas=reps, record=times)
signs = factor_signs(traj)

print("root sign flip probability between dyadic times:")
for n in range(4):
    p = float((signs[n, :, 0] != signs[n + 1, :, 0]).mean())
    print(f"  P(G_{n} != G_{n + 1}) = {p:.4f}   tail bound {flip_bound(n):.4f}")

print("\ntwo-point function of the final signs vs theta^distance:")
for u, v in [((), (0,)), ((0,), (1,)), ((0, 0), (1,))]:
    prod = signs[-1, :, topo.index[u]] * signs[-1, :, topo.index[v]]
    d = topo.distance(u, v)
    print(f"  dist {d}: {float(prod.mean()):+.4f} vs {theta ** d:+.4f}")
