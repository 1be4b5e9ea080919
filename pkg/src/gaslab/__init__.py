"""Coulomb gas toolkit: exact electrostatics of radial charges, Metropolis
sampling of the Gibbs measure, isotropic-averaging energy calculators and
estimators for overcrowding, gap and discrepancy statistics."""

__version__ = "0.1.0"

from .kernel import (RadialMeasure, coulomb_g, l1_deficit, mollified_g, radial_pair,
                     radial_point, shell_point, sup_density)
from .gas import (BlownUp, Configuration, CustomPerturbation, CustomPotential,
                  EquilibriumMeasure, Flat, GasModel, ProductOneBody, RadialQuadratic,
                  energy, energy_delta_move, equilibrium, ginibre)
from .sampler import ChainState, SampleBatch, adapt_step, init_config, metropolis_sweep, run
from .averaging import (IndexSet, IsoReport, adjoint_volume_factor, iso_energy_change,
                        mimicry_energy_change, verify_prop21)
from .bounds import (BoundConstants, cluster_bound, gap_scaling, incompressibility_bound,
                     jlm_bound)
from .stats import (Annulus, Ball, Histogram, TestFunction, compression, count, discrepancy,
                    eta_k, fluct, one_point_density, pair_correlation, tail_probability)
