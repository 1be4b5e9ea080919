"""Energy changes under isotropic averaging and mimicry, computed exactly.

Isotropic averaging replaces each particle ``x_i``, ``i in I``, by an
independent charge cloud ``x_i + Y_i`` with ``Y_i ~ nu``; mimicry replaces
``x_j`` by a cloud centred at ``x_i``. Every interaction of a cloud with a
point or with another cloud is a radial integral (see :mod:`gaslab.kernel`),
so ``H - Iso H`` and ``H - Mim H`` are available in closed form up to
quadrature error.

Indices are zero-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gas import Flat, ProductOneBody, _as_points
from .kernel import (RadialMeasure, _g, _g_scalar, ball_volume, radial_pair,
                     radial_point, radial_potential, sup_density)

PROP21_TOLERANCE = 1e-9


class UnsupportedAveragingError(NotImplementedError):
    """The confinement or perturbation has no declared averaging rule."""


@dataclass(frozen=True)
class IndexSet:
    """Sorted distinct zero-based particle indices."""

    indices: tuple
    N: int

    def __init__(self, indices, N):
        idx = tuple(sorted({int(i) for i in indices}))
        if not idx:
            raise ValueError("index set must be nonempty")
        if idx[0] < 0 or idx[-1] >= N:
            raise IndexError(f"indices must lie in [0, {N}), got {idx}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "N", int(N))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def mask(self):
        m = np.zeros(self.N, dtype=bool)
        m[list(self.indices)] = True
        return m


@dataclass(frozen=True)
class IsoReport:
    """Decomposition of ``H - Iso_{I,nu} H``.

    ``exact_delta = pair_term + potential_term + perturbation_term``. The
    mean value inequality makes the pair and perturbation terms nonnegative,
    so ``exact_delta >= -bound_rhs`` with ``bound_rhs = supLapW / (2d) * E|Y|^2 * |I|``.
    """

    exact_delta: float
    pair_term: float
    potential_term: float
    perturbation_term: float
    bound_rhs: float

    @property
    def holds(self):
        return self.exact_delta >= -self.bound_rhs - PROP21_TOLERANCE * (1 + abs(self.bound_rhs))


def _potential_average_shift(model, points, nu):
    """``E W(x + Y) - W(x)`` for each row of ``points``."""
    W = model.W
    if isinstance(W, Flat):
        return np.zeros(len(points))
    c = W.quadratic_coefficient
    if c is not None:
        return np.full(len(points), c * nu.second_moment())
    if getattr(W, "average", None) is not None:
        return np.array([W.average(p, nu) for p in points]) - W(points)
    raise UnsupportedAveragingError("custom confinement needs a declared averaging rule")


def _cloud_potential(nu, t):
    """Vectorised potential of ``nu`` at distances ``t``."""
    t = np.asarray(t, dtype=float)
    if nu.kind in ("shell", "annulus"):
        return radial_potential(nu, t)
    return np.array([radial_point(nu, float(x)) for x in t.ravel()]).reshape(t.shape)


def _point_minus_cloud(nu, t):
    """``g(t) - (g * nu)(t)``; zero exactly where ``t`` is outside the support."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    near = t < nu.outer
    if np.any(near):
        out[near] = _g(nu.d, t[near]) - _cloud_potential(nu, t[near])
    return out


def _perturbation_charges(model):
    U = model.U
    if U is None:
        return None
    if isinstance(U, ProductOneBody):
        return U.charges
    raise UnsupportedAveragingError("only product one-body perturbations can be averaged exactly")


def iso_energy_change(model, X, I, nu):
    """Exact ``H(X) - Iso_{I,nu} H(X)``.

    Parameters
    ----------
    model : GasModel
    X : Configuration or array (N, d)
    I : IndexSet or iterable of int
    nu : RadialMeasure
        Shape of the charge cloud; must live in dimension ``model.d``.

    Returns
    -------
    IsoReport
    """
    pts = _as_points(X)
    N, d = pts.shape
    if nu.d != d:
        raise ValueError("averaging measure lives in the wrong dimension")
    if not isinstance(I, IndexSet):
        I = IndexSet(I, N)
    inside = I.mask()
    idx = np.flatnonzero(inside)
    rest = np.flatnonzero(~inside)

    pair = 0.0
    # one endpoint averaged: point against cloud
    if rest.size:
        for i in idx:
            t = np.linalg.norm(pts[rest] - pts[i], axis=1)
            pair += math.fsum(_point_minus_cloud(nu, t))
    # both endpoints averaged: cloud against cloud
    for a in range(idx.size):
        for b in range(a + 1, idx.size):
            t = float(np.linalg.norm(pts[idx[a]] - pts[idx[b]]))
            pair += _g_scalar(d, t) - radial_pair(nu, nu, t)

    shift = _potential_average_shift(model, pts[idx], nu)
    potential = -math.fsum(shift)

    perturbation = 0.0
    charges = _perturbation_charges(model)
    if charges is not None:
        for i in idx:
            t = np.linalg.norm(charges - pts[i], axis=1)
            perturbation += math.fsum(_point_minus_cloud(nu, t))

    rhs = model.laplacian_bound / (2 * d) * nu.second_moment() * len(idx)
    return IsoReport(pair + potential + perturbation, pair, potential, perturbation, rhs)


@dataclass(frozen=True)
class Prop21Result:
    """Outcome of the local isotropic-averaging energy inequality check."""

    lhs: float
    rhs: float
    n: int
    holds: bool


def prop21_constant(model):
    """Default constant for the potential part: ``supLapW / (2d)``.

    For ``W = c|x|^2`` the averaged confinement rises by exactly
    ``c E|Y|^2 <= (LapW / 2d) R^2`` per averaged particle.
    """
    return model.laplacian_bound / (2 * model.d)


def prop21_measure(r, R, d):
    """Uniform annulus ``[R/2, R - 2r]`` used by the local averaging inequality."""
    return RadialMeasure.annulus(R / 2, R - 2 * r, d)


def verify_prop21(X, z, r, R, model, C=None):
    """Check ``Iso H - H <= C R^2 n + binom(n, 2) (g(R/2) - g(2r))``.

    The averaged set is the ``n`` particles in the open ball ``B_r(z)`` and
    the cloud is the uniform annulus ``[R/2, R - 2r]``.
    """
    if not 0 < r < R / 10:
        raise ValueError(f"need 0 < r < R/10, got r={r}, R={R}")
    pts = _as_points(X)
    d = pts.shape[1]
    C = prop21_constant(model) if C is None else C
    idx = np.flatnonzero(np.linalg.norm(pts - np.asarray(z, dtype=float), axis=1) < r)
    n = int(idx.size)
    if n == 0:
        return Prop21Result(0.0, 0.0, 0, True)
    report = iso_energy_change(model, pts, IndexSet(idx, len(pts)), prop21_measure(r, R, d))
    lhs = -report.exact_delta
    rhs = C * R * R * n + math.comb(n, 2) * (_g_scalar(d, R / 2) - _g_scalar(d, 2 * r))
    holds = lhs <= rhs + PROP21_TOLERANCE * (1 + abs(rhs))
    return Prop21Result(lhs, rhs, n, bool(holds))


@dataclass(frozen=True)
class MimicryReport:
    """``H - Mim_{i,j,nu} H`` and ``H - Mim_{j,i,nu} H``.

    ``pair_ij`` is the interaction of the cloud with the particle it mimics,
    i.e. ``Delta_nu = int g dnu``. ``lower_bound`` is
    ``g(x_i - x_j) - Delta_nu - C r^2``, which ``max(delta_ij, delta_ji)`` must exceed.
    """

    delta_ij: float
    delta_ji: float
    pair_ij: float
    lower_bound: float

    @property
    def holds(self):
        best = max(self.delta_ij, self.delta_ji)
        return best >= self.lower_bound - PROP21_TOLERANCE * (1 + abs(self.lower_bound))


def _mimic(model, pts, i, j, nu, delta_nu, charges):
    """``H - Mim_{i,j,nu} H``: particle ``j`` becomes a ``nu``-cloud around ``x_i``."""
    d = pts.shape[1]
    others = np.ones(len(pts), dtype=bool)
    others[[i, j]] = False
    xo = pts[others]
    old = _g(d, np.linalg.norm(xo - pts[j], axis=1))
    new = _cloud_potential(nu, np.linalg.norm(xo - pts[i], axis=1))
    total = math.fsum(old - new)
    total += _g_scalar(d, float(np.linalg.norm(pts[i] - pts[j]))) - delta_nu
    total += float(model.W(pts[j])) - float(model.W(pts[i])) \
        - float(_potential_average_shift(model, pts[i:i + 1], nu)[0])
    if charges is not None:
        total += math.fsum(_g(d, np.linalg.norm(charges - pts[j], axis=1))
                           - _cloud_potential(nu, np.linalg.norm(charges - pts[i], axis=1)))
    return total


def mimicry_energy_change(model, X, i, j, nu, C=None):
    """Exact energy changes of the two mimicry moves between particles ``i`` and ``j``.

    Parameters
    ----------
    C : float, optional
        Constant in the lower bound; defaults to ``supLapW / (2d)``, with
        ``r`` taken as the outer radius of ``nu``.

    Returns
    -------
    MimicryReport
    """
    pts = _as_points(X)
    if i == j:
        raise ValueError("mimicry needs two distinct particles")
    d = pts.shape[1]
    charges = _perturbation_charges(model)
    delta_nu = radial_point(nu, 0.0)
    dij = _mimic(model, pts, i, j, nu, delta_nu, charges)
    dji = _mimic(model, pts, j, i, nu, delta_nu, charges)
    C = prop21_constant(model) if C is None else C
    gij = _g_scalar(d, float(np.linalg.norm(pts[i] - pts[j])))
    return MimicryReport(dij, dji, delta_nu, gij - delta_nu - C * nu.outer ** 2)


def adjoint_volume_factor(nu, k, r, R=None):
    """Phase-space factor ``(sup nu * |B_r|)^k`` of the adjoint averaging bound."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return (sup_density(nu) * ball_volume(nu.d) * r ** nu.d) ** k
