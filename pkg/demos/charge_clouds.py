"""
Charge clouds and the mean value inequality
===========================================

Replacing a point charge by a radially symmetric cloud never raises its
interaction with anything outside the cloud, and lowers the interaction
with anything inside. This script walks through the exact potentials that
make the statement quantitative, then averages a tight cluster of
particles and watches the energy drop.
"""

import numpy as np

from gaslab.averaging import iso_energy_change, verify_prop21
from gaslab.gas import GasModel, RadialQuadratic
from gaslab.kernel import RadialMeasure, coulomb_g, l1_deficit, radial_pair, radial_point, shell_point

# A uniform shell acts on exterior points like a point charge at its centre
# and is constant inside.
for t in (0.25, 0.5, 1.0, 2.0, 4.0):
    print(f"t={t:4}: shell(s=1) potential {shell_point(3, 1.0, t):.6f}   g(t) {coulomb_g(3, t):.6f}")

# Solid clouds sit below the point-charge potential everywhere.
annulus = RadialMeasure.annulus(0.5, 1.0, 2)
bump = RadialMeasure.mollifier(1.0, 2)
print("\n  t    g(t)     annulus   bump")
for t in (0.1, 0.5, 0.9, 1.5):
    print(f"{t:4}  {coulomb_g(2, t):7.4f}  {radial_point(annulus, t):7.4f}  {radial_point(bump, t):7.4f}")

# Two clouds interact no more strongly than their centres do.
print(f"\ntwo bumps at distance 0.3: {radial_pair(bump, bump, 0.3):.4f} <= g = {coulomb_g(2, 0.3):.4f}")

# Smoothing the kernel at scale r removes an L1 mass proportional to r^2.
for r in (1.0, 2.0, 4.0):
    print(f"r={r}: L1 deficit / r^2 = {l1_deficit(r, 2) / r ** 2:.10f}")

# Average a cluster of five particles packed inside a ball of radius 0.05.
rng = np.random.default_rng(0)
N = 40
X = rng.normal(size=(N, 2)) * 3
X[:5] = rng.normal(size=(5, 2)) * 0.02
model = GasModel(2, 2.0, N, RadialQuadratic(0.5))
rep = iso_energy_change(model, X, range(5), RadialMeasure.annulus(1.0, 1.9, 2))
print(f"\nenergy drop from averaging the cluster: {rep.exact_delta:.3f}")
print(f"  pair part {rep.pair_term:.3f}, confinement part {rep.potential_term:.3f}")

# The local inequality that turns this drop into an overcrowding estimate.
res = verify_prop21(X, [0.0, 0.0], 0.05, 2.0, model)
print(f"local averaging inequality: lhs {res.lhs:.3f} <= rhs {res.rhs:.3f} "
      f"with {res.n} particles averaged: {res.holds}")
