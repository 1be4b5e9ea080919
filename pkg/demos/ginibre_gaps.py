"""
Minimal gaps of the Ginibre gas
===============================

At beta = 2 with quadratic confinement the planar gas is the eigenvalue
process of a Ginibre matrix. Its smallest pairwise distance shrinks like
N^{-1/4}, and the rescaled gap follows a law with density proportional to
x^3 e^{-x^4} once x is measured in units of 4^{1/4}. A short run at two
sizes shows both the scaling and the shape. Expect about a minute.
"""

import numpy as np

from gaslab import stats
from gaslab.experiments import gap_limit_cdf, ks_distance
from gaslab.gas import ginibre
from gaslab.sampler import run

samples = {}
for N in (64, 128):
    batch = run(ginibre(N), sweeps=1000 + 2000, burn_in=1000, thin=5, seed=N, n_chains=2)
    samples[N] = N ** 0.25 * stats.eta_k_batch(batch, 1)
    print(f"N={N}: {samples[N].size} configurations, acceptance {np.mean(batch.acceptance):.2f}, "
          f"median N^(1/4) eta_1 = {np.median(samples[N]):.3f}")

# The limit law: P(N^(1/4) eta_1 <= y) = 1 - exp(-y^4 / 4).
limit_median = 4 ** 0.25 * np.log(2) ** 0.25
print(f"limit median {limit_median:.3f}")

# Compare the empirical distribution with the limit on a few quantiles.
y = np.quantile(samples[128], [0.1, 0.25, 0.5, 0.75, 0.9])
print("\nquantile  empirical y  limit CDF at y")
for q, v in zip([0.1, 0.25, 0.5, 0.75, 0.9], y):
    print(f"{q:8}  {v:11.3f}  {gap_limit_cdf(v):.3f}")
print(f"\nKS distance at N=128: {ks_distance(samples[128], gap_limit_cdf):.3f}")
