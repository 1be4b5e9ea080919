"""Estimators for the statistics whose tails and scalings the theory controls.

Counts, minimal gaps, discrepancies and smooth linear statistics act on a
single configuration; pair correlation, one-point density and tail
probabilities act on a batch (a :class:`~gaslab.sampler.SampleBatch` or an
``(M, N, d)`` array).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree
from scipy.stats import binomtest

from .gas import BlownUp, Flat, RadialQuadratic, UnsupportedPotentialError, _as_points
from .kernel import ball_volume, coulomb_constant, sphere_area
from .quadrature import integrate

BRUTE_FORCE_MAX_N = 256
FLUCT_TOL = 1e-8


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Ball:
    """Open ball ``|x - z| < radius``."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def d(self):
        return len(self.center)

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        return np.linalg.norm(pts - np.asarray(self.center), axis=-1) < self.radius

    def volume(self):
        return ball_volume(self.d) * self.radius ** self.d


@dataclass(frozen=True)
class Annulus:
    """Half-open shell ``inner <= |x - z| < outer``, so a ball splits into a smaller ball and an annulus."""

    center: tuple
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not (0 < self.inner < self.outer):
            raise ValueError(f"annulus needs 0 < inner < outer, got [{self.inner}, {self.outer})")

    @property
    def d(self):
        return len(self.center)

    def contains(self, points):
        r = np.linalg.norm(np.asarray(points, dtype=float) - np.asarray(self.center), axis=-1)
        return (r >= self.inner) & (r < self.outer)

    def volume(self):
        return ball_volume(self.d) * (self.outer ** self.d - self.inner ** self.d)


def count(X, region):
    """Number of points of ``X`` in ``region``; vectorised over leading batch axes."""
    pts = _as_points(X)
    return np.sum(region.contains(pts), axis=-1)


# ---------------------------------------------------------------------------
# minimal gaps


def _pair_distances(pts, i, j):
    diff = pts[i] - pts[j]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def eta_k(X, k):
    """``k``-th smallest pairwise distance.

    Brute force for ``N <= 256``. Larger configurations use a k-d tree
    range query whose radius starts at the Poisson estimate of the
    ``k``-th gap and doubles until ``k`` pairs are found. Both paths
    evaluate distances with the same expression, so they agree exactly.
    """
    pts = np.asarray(_as_points(X), dtype=float)
    N, d = pts.shape
    n_pairs = N * (N - 1) // 2
    if not 1 <= k <= n_pairs:
        raise ValueError(f"k must lie in [1, {n_pairs}], got {k}")
    if N <= BRUTE_FORCE_MAX_N:
        i, j = np.triu_indices(N, 1)
        dist = _pair_distances(pts, i, j)
        return float(np.partition(dist, k - 1)[k - 1])
    tree = cKDTree(pts)
    extent = np.ptp(pts, axis=0)
    vol = float(np.prod(np.maximum(extent, 1e-12)))
    h = 2.0 * (2.0 * k * vol / (N * N * ball_volume(d))) ** (1.0 / d)
    while True:
        pairs = tree.query_pairs(h, output_type="ndarray")
        if len(pairs) >= k:
            dist = _pair_distances(pts, pairs[:, 0], pairs[:, 1])
            return float(np.partition(dist, k - 1)[k - 1])
        h *= 2.0


def eta_k_batch(batch, k):
    """``eta_k`` of every configuration in a batch, in storage order."""
    return np.array([eta_k(p, k) for p in _flat(batch)])


# ---------------------------------------------------------------------------
# histograms and correlation estimators


@dataclass
class Histogram:
    """Binned estimate. ``values`` is ``counts`` after the estimator's normalisation."""

    edges: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("histogram edges must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("histogram counts must be nonnegative")

    @property
    def centers(self):
        if self.meta.get("spacing") == "log":
            return np.sqrt(self.edges[1:] * self.edges[:-1])
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def log_edges(lo=0.01, hi=2.0, bins=40):
    return np.geomspace(lo, hi, bins + 1)


def _flat(batch):
    if hasattr(batch, "flat") and callable(batch.flat):
        return batch.flat()
    arr = np.asarray(batch, dtype=float)
    return arr[None] if arr.ndim == 2 else arr.reshape(-1, *arr.shape[-2:])


def default_probe(eqm):
    """Bulk probe ball of radius 0.6 times the droplet radius."""
    return Ball((0.0,) * eqm.d, 0.6 * eqm.radius)


def pair_correlation(batch, edges=None, probe=None, eqm=None):
    """Probe-averaged estimate of the two-point function at separation ``r``.

    For every configuration the ordered pairs ``(x_i, x_j)`` with ``x_i``
    in the probe region and ``|x_i - x_j|`` in a bin are counted; dividing
    by the number of configurations, the probe volume and the bin's shell
    volume gives an estimate that equals ``density^2`` for a Poisson process.
    """
    configs = _flat(batch)
    if len(configs) == 0:
        raise ValueError("empty batch")
    edges = log_edges() if edges is None else np.asarray(edges, dtype=float)
    if probe is None:
        if eqm is None:
            raise ValueError("need a probe region or an equilibrium measure")
        probe = default_probe(eqm)
    counts = np.zeros(edges.size - 1)
    for pts in configs:
        inside = pts[probe.contains(pts)]
        if not len(inside):
            continue
        cum = cKDTree(inside).count_neighbors(cKDTree(pts), edges)
        counts += np.diff(cum)
    d = configs.shape[-1]
    shells = ball_volume(d) * np.diff(edges ** d)
    values = counts / (len(configs) * probe.volume() * shells)
    spacing = "log" if np.allclose(np.diff(np.log(edges)), np.log(edges[1] / edges[0])) else "linear"
    return Histogram(edges, counts, values,
                     {"estimator": "pair_correlation", "configs": len(configs),
                      "probe_volume": probe.volume(), "spacing": spacing, "d": d})


def log_log_slope(hist, lo, hi, method="poisson"):
    """Exponent ``s`` of a power law ``values ~ r^s`` fitted on bins with centres in ``[lo, hi]``.

    ``method="poisson"`` (default) maximises the Poisson likelihood of the raw
    bin counts under ``count_k = A * integral_{bin k} r^s dV``, which uses
    empty bins correctly. ``method="lsq"`` is ordinary least squares on
    ``log values`` over the populated bins; it is biased upwards when the
    smallest bins are sparsely populated.
    """
    r = hist.centers
    keep = (r >= lo) & (r <= hi)
    if method == "lsq":
        keep &= hist.values > 0
        if keep.sum() < 2:
            raise ValueError("fewer than two populated bins in the fitting range")
        slope, _ = np.polyfit(np.log(r[keep]), np.log(hist.values[keep]), 1)
        return float(slope)
    if method != "poisson":
        raise ValueError(f"unknown method {method!r}")
    counts = hist.counts[keep]
    lo_e, hi_e = hist.edges[:-1][keep], hist.edges[1:][keep]
    if counts.sum() == 0 or keep.sum() < 2:
        raise ValueError("no pairs in the fitting range")
    d = int(hist.meta.get("d", 2))
    total = counts.sum()

    def shell_moment(s):
        p = s + d
        if abs(p) < 1e-12:
            return np.log(hi_e / lo_e)
        return (hi_e ** p - lo_e ** p) / p

    def nll(s):
        m = shell_moment(s)
        # amplitude profiled out: A = total / sum(m)
        return -(np.sum(counts * np.log(m)) - total * np.log(m.sum()))

    res = minimize_scalar(nll, bounds=(-d + 1e-6, 30.0), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


@dataclass
class DensityField:
    """Binned one-point density on a rectangular grid; ``values`` integrates to ``N``."""

    edges: tuple
    counts: np.ndarray
    values: np.ndarray

    def cell_volume(self):
        widths = np.meshgrid(*[np.diff(e) for e in self.edges], indexing="ij")
        return np.prod(widths, axis=0)

    def centers(self):
        return np.meshgrid(*[0.5 * (e[1:] + e[:-1]) for e in self.edges], indexing="ij")

    def integral(self):
        return float(np.sum(self.values * self.cell_volume()))


def one_point_density(batch, edges):
    """Histogram estimate of the one-point density.

    ``edges`` is one array of bin edges per coordinate (or a single array
    reused for every axis). Points outside the grid are dropped, so the
    integral equals ``N`` exactly when the grid covers the configurations.
    """
    configs = _flat(batch)
    d = configs.shape[-1]
    if np.ndim(edges[0]) == 0:
        edges = [np.asarray(edges, dtype=float)] * d
    edges = tuple(np.asarray(e, dtype=float) for e in edges)
    counts, _ = np.histogramdd(configs.reshape(-1, d), bins=edges)
    field_ = DensityField(edges, counts, counts)
    field_.values = counts / (len(configs) * field_.cell_volume())
    return field_


# ---------------------------------------------------------------------------
# discrepancy and smooth statistics


def equilibrium_mass(eqm, region):
    """``mu(region)`` for the constant-density droplet (exact lens formulas)."""
    if isinstance(region, Ball):
        return eqm.mass_in_ball(region.center, region.radius)
    if isinstance(region, Annulus):
        return (eqm.mass_in_ball(region.center, region.outer)
                - eqm.mass_in_ball(region.center, region.inner))
    raise TypeError(f"unsupported region {region!r}")


def discrepancy(X, eqm, region):
    """``X(region) - mu_eq^N(region)``."""
    if not eqm.blown_up:
        raise ValueError("discrepancy needs the blown-up equilibrium measure")
    return count(X, region) - equilibrium_mass(eqm, region)


def compression(X, model, region):
    """``X(region) - (1/c_d) int_region LapW``.

    Exact for quadratic and flat confinement, whose Laplacian is constant.
    """
    W = model.W
    d = model.d
    if isinstance(W, Flat):
        lap = 0.0
    elif isinstance(W, (RadialQuadratic, BlownUp)):
        lap = W.laplacian_bound(d)
    else:
        raise UnsupportedPotentialError("compression needs a confinement with constant Laplacian")
    return count(X, region) - lap / coulomb_constant(d) * region.volume()


# smoothstep S(u) = u^5 (126 - 420u + 540u^2 - 315u^3 + 70u^4); coefficients of u^0..u^9
_SMOOTHSTEP = np.polynomial.Polynomial([0, 0, 0, 0, 0, 126, -420, 540, -315, 70])


def _derivative_constants():
    u = np.linspace(0.0, 1.0, 200001)
    return tuple(float(np.max(np.abs(_SMOOTHSTEP.deriv(k)(u)))) for k in range(1, 5))


#: sup |S^{(k)}| on [0, 1] for k = 1..4, so |xi^{(k)}| <= C_k (alpha R)^{-k}
SMOOTHSTEP_CONSTANTS = _derivative_constants()


@dataclass(frozen=True)
class TestFunction:
    """Radial cutoff ``xi_{R,alpha}``: 1 on ``[0, R]``, 0 beyond ``R(1 + alpha)``.

    The transition is the degree-9 smoothstep, whose first four derivatives
    vanish at both ends, so ``xi`` is C^4.
    """

    R: float
    alpha: float

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not (self.R > 0 and self.alpha > 0):
            raise ValueError("R and alpha must be positive")

    @property
    def width(self):
        return self.alpha * self.R

    @property
    def outer(self):
        return self.R + self.width

    def derivative(self, x, k=0):
        """``k``-th derivative in the radial variable (``k = 0`` is the value)."""
        x = np.abs(np.asarray(x, dtype=float))
        u = np.clip((x - self.R) / self.width, 0.0, 1.0)
        if k == 0:
            return np.clip(1.0 - _SMOOTHSTEP(u), 0.0, 1.0)
        inside = (x > self.R) & (x < self.outer)
        return np.where(inside, -_SMOOTHSTEP.deriv(k)(u) / self.width ** k, 0.0)

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative_bound(self, k):
        return SMOOTHSTEP_CONSTANTS[k - 1] / self.width ** k


def smooth_mass(eqm, xi, center):
    """``int xi(|x - z|) mu(dx)`` by radial quadrature over spheres around ``z``."""
    c = float(np.linalg.norm(center))
    d = eqm.d
    area = sphere_area(d)

    def f(s):
        return area * s ** (d - 1) * xi(s) * eqm.sphere_fraction(s, c)

    top = min(xi.outer, eqm.radius + c)
    kinks = (xi.R, abs(eqm.radius - c), eqm.radius + c)
    return eqm.density * integrate(f, 0.0, top, breakpoints=kinks, tol=FLUCT_TOL)


def fluct(X, eqm, xi, center):
    """``sum_i xi(|x_i - z|) - int xi(|x - z|) mu_eq^N(dx)``."""
    if not eqm.blown_up:
        raise ValueError("fluct needs the blown-up equilibrium measure")
    pts = _as_points(X)
    r = np.linalg.norm(pts - np.asarray(center, dtype=float), axis=-1)
    return math.fsum(xi(r).ravel()) - smooth_mass(eqm, xi, center)


# ---------------------------------------------------------------------------
# tail probabilities


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    successes: int
    n: int


def tail_probability(batch, event, confidence=0.95):
    """Frequency of ``event`` with a Wilson score interval.

    ``event`` is a predicate on one ``(N, d)`` configuration, or a boolean
    array with one entry per configuration. The sample size is the number
    of stored (thinned) configurations.
    """
    if callable(event):
        hits = np.array([bool(event(p)) for p in _flat(batch)])
    else:
        hits = np.asarray(event, dtype=bool).ravel()
    n = hits.size
    if n == 0:
        raise ValueError("need at least one sample")
    k = int(hits.sum())
    ci = binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return TailEstimate(k / n, float(ci.low), float(ci.high), k, n)


# ---------------------------------------------------------------------------
# CSV output


def write_histogram_csv(path, hist):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_lo", "edge_hi", "count", "value"])
        for lo, hi, c, v in zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.values):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c), repr(float(v))])


def write_tail_csv(path, rows):
    """``rows``: iterables of ``(Q, TailEstimate, bound)``; ``bound`` may be None."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Q", "estimate", "ci_low", "ci_high", "successes", "n", "bound"])
        for Q, t, bound in rows:
            w.writerow([Q, repr(t.estimate), repr(t.ci_low), repr(t.ci_high), t.successes, t.n,
                        "" if bound is None else repr(float(bound))])


def write_gap_csv(path, gaps, k=1, scale=1.0):
    """One row per configuration: index, ``eta_k``, and ``scale * eta_k``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", f"eta_{k}", f"scaled_eta_{k}"])
        for m, g in enumerate(gaps):
            w.writerow([m, repr(float(g)), repr(float(scale * g))])
