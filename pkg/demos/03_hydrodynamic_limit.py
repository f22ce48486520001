"""The hydrodynamic limit as a convergence experiment.

The empirical strain pairing (1/n) sum_i G(i/n) r_i(t) approaches
int G(x) r(x, t) dx with r solving dt r = gamma^-1 dxx tau(r, beta(x)).
This script runs the scan at a desk-friendly scale (the acceptance suite
runs n up to 128 with 200 replicas) and prints the L1 pairing error per n,
which decays like the local-Gibbs CLT floor ~ sqrt(2 int G^2 T / (pi n)).
"""

import numpy as np

from gradchain import harness

cfg = harness.merge_config(
    {
        "potential": {"name": "harmonic-cosine"},
        "micro": {"replicas": 100, "seed": 3},
        "hydro": {"n_list": [16, 32, 64], "t_eval": 0.25, "K": 4, "ref_M": 128},
    }
)
rep = harness.hydro_compare(cfg)

print("PDE reference pairings:", np.round(rep.ref_values, 5))
print("\n   n    E|<pi,G> - ref|      SE     |mean dev|")
for n, e, s, m in zip(rep.n_list, rep.err, rep.err_se, rep.err_of_mean):
    print(f"{n:5d}   {e:12.5f}   {s:8.5f}   {m:9.5f}")
print("\nmonotone decrease:", rep.monotone, " ratio test:", rep.ratio_ok)
clt = [np.sqrt(2 * 0.625 / (np.pi * n)) for n in rep.n_list]
print("CLT floor estimate:", np.round(clt, 5))
