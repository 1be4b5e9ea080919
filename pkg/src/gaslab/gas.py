"""Gas model: configurations, confinement, perturbations and the Hamiltonian.

The Hamiltonian is

    H(X) = 1/2 sum_{i != j} g(x_i - x_j) + sum_i W(x_i) + U(X)

with Coulomb kernel ``g``, confinement ``W`` and a superharmonic
perturbation ``U``. Quadratic confinement and fixed repelling charges run
through compiled kernels; custom callables use a slower Python path.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .kernel import ball_volume, coulomb_constant

SUPPORTED_DIMS = (2, 3)


class CoincidentPointsError(ValueError):
    """Two particles occupy the same position."""


class UnsupportedPotentialError(NotImplementedError):
    """The requested operation is only available for built-in potentials."""


# ---------------------------------------------------------------------------
# confinement


@dataclass(frozen=True)
class RadialQuadratic:
    """``W(x) = c |x|^2``; the Laplacian is ``2 d c`` everywhere."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"quadratic coefficient must be positive, got {self.c}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.c * np.sum(x * x, axis=-1)

    def laplacian_bound(self, d):
        return 2.0 * d * self.c

    @property
    def quadratic_coefficient(self):
        return self.c

    box = None


@dataclass(frozen=True)
class BlownUp:
    """Blown-up potential ``V_N(x) = N^{2/d} V(N^{-1/d} x)``.

    For quadratic ``V`` this coincides with ``V``; the distinction matters
    for the equilibrium measure, which is then the mass-``N`` droplet.
    """

    base: RadialQuadratic
    N: int

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        return self.N ** (2.0 / d) * self.base(x * self.N ** (-1.0 / d))

    def laplacian_bound(self, d):
        return self.base.laplacian_bound(d)

    @property
    def quadratic_coefficient(self):
        return self.base.quadratic_coefficient

    box = None


@dataclass(frozen=True)
class Flat:
    """No confinement. ``box`` is the half-width of the cube used for initial
    configurations and, when ``clamp`` is set, as a hard wall."""

    box: float = 10.0
    clamp: bool = True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])

    def laplacian_bound(self, d):
        return 0.0

    quadratic_coefficient = 0.0


@dataclass(frozen=True)
class CustomPotential:
    """User-supplied confinement.

    ``func`` maps an ``(..., d)`` array to values; ``laplacian`` is the
    declared upper bound of its Laplacian. ``average(x, nu)``, if given,
    returns the average of ``W(x + Y)`` over ``Y ~ nu``.
    """

    func: object
    laplacian: float
    box: float = 10.0
    average: object = None

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def laplacian_bound(self, d):
        return float(self.laplacian)

    quadratic_coefficient = None


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class ProductOneBody:
    """``U(X) = sum_i sum_a g(x_i - z_a)`` for fixed unit charges ``z_a``."""

    charges: np.ndarray

    def __post_init__(self):
        z = np.array(self.charges, dtype=float, ndmin=2)
        z.setflags(write=False)
        object.__setattr__(self, "charges", z)

    def one_body(self, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        diff = x[..., None, :] - self.charges
        r2 = np.sum(diff * diff, axis=-1)
        with np.errstate(divide="ignore"):
            g = -0.5 * np.log(r2) if d == 2 else r2 ** (0.5 * (2 - d))
        return np.sum(g, axis=-1)

    def __call__(self, points):
        return float(np.sum(self.one_body(points)))


@dataclass(frozen=True)
class CustomPerturbation:
    """Arbitrary symmetric superharmonic ``U``, called with the ``(N, d)`` point array."""

    func: object

    def __call__(self, points):
        return float(self.func(np.asarray(points)))


# ---------------------------------------------------------------------------
# model and configurations


@dataclass(frozen=True)
class GasModel:
    """Coulomb gas at inverse temperature ``beta`` with ``N`` particles in R^d."""

    d: int
    beta: float
    N: int
    W: object
    U: object = None

    def __post_init__(self):
        if self.d not in SUPPORTED_DIMS:
            raise ValueError(f"dimension must be one of {SUPPORTED_DIMS}, got {self.d}")
        if not (0 < self.beta < math.inf):
            raise ValueError(f"beta must be finite and positive, got {self.beta}")
        if self.N < 1:
            raise ValueError("need at least one particle")
        if isinstance(self.U, ProductOneBody) and self.U.charges.shape[1] != self.d:
            raise ValueError("perturbation charges have the wrong dimension")

    @property
    def compiled(self):
        """True when energies can use the compiled kernels."""
        return (self.W.quadratic_coefficient is not None
                and (self.U is None or isinstance(self.U, ProductOneBody)))

    @property
    def laplacian_bound(self):
        return self.W.laplacian_bound(self.d)

    def _charges(self):
        if isinstance(self.U, ProductOneBody):
            return np.ascontiguousarray(self.U.charges)
        return np.zeros((0, self.d))

    def describe(self):
        """JSON-friendly summary of the model."""
        W = self.W
        if isinstance(W, BlownUp):
            w = {"kind": "blown_up_quadratic", "c": W.base.c, "N": W.N}
        elif isinstance(W, RadialQuadratic):
            w = {"kind": "quadratic", "c": W.c}
        elif isinstance(W, Flat):
            w = {"kind": "flat", "box": W.box, "clamp": W.clamp}
        else:
            w = {"kind": "custom", "laplacian_bound": W.laplacian}
        if self.U is None:
            u = None
        elif isinstance(self.U, ProductOneBody):
            u = {"kind": "product_one_body", "charges": self.U.charges.tolist()}
        else:
            u = {"kind": "custom"}
        return {"d": self.d, "beta": self.beta, "N": self.N, "W": w, "U": u}


def ginibre(N, beta=2.0):
    """Blown-up gas with ``V = |x|^2 / 2`` in the plane; ``beta = 2`` is the Ginibre ensemble."""
    return GasModel(d=2, beta=beta, N=N, W=BlownUp(RadialQuadratic(0.5), N))


class Configuration:
    """Immutable labelled point configuration in R^d."""

    __slots__ = ("_points",)

    def __init__(self, points, validate=True):
        pts = np.array(points, dtype=float, ndmin=2)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a nonempty (N, d) array")
        if validate and pts.shape[0] > 1:
            dist, _ = cKDTree(pts).query(pts, k=2)
            if np.any(dist[:, 1] == 0):
                raise CoincidentPointsError("configuration has coincident points")
        pts.setflags(write=False)
        self._points = pts

    @property
    def points(self):
        return self._points

    @property
    def N(self):
        return self._points.shape[0]

    @property
    def d(self):
        return self._points.shape[1]

    def __len__(self):
        return self.N

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self._points, other._points)

    def __hash__(self):
        return hash(self._points.tobytes())

    def __repr__(self):
        return f"Configuration(N={self.N}, d={self.d})"

    def moved(self, i, p):
        pts = self._points.copy()
        pts[i] = p
        return Configuration(pts, validate=False)


def _as_points(X):
    return X.points if isinstance(X, Configuration) else np.asarray(X, dtype=float)


def energy(model, X):
    """Full Hamiltonian ``H^{W,U}(X)``; ``inf`` for coincident points."""
    pts = np.ascontiguousarray(_as_points(X))
    if model.compiled:
        return float(_kernels.energy(pts, float(model.W.quadratic_coefficient), model._charges()))
    # python path, same summation order
    n, d = pts.shape
    total = 0.0
    comp = 0.0
    for i in range(n):
        diff = pts[i + 1:] - pts[i]
        r2 = np.sum(diff * diff, axis=1)
        if np.any(r2 == 0):
            return math.inf
        for term in (-0.5 * np.log(r2) if d == 2 else r2 ** (0.5 * (2 - d))):
            y = term - comp
            t = total + y
            comp = (t - total) - y
            total = t
    total += float(np.sum(model.W(pts)))
    if model.U is not None:
        total += model.U(pts)
    return total


def energy_delta_move(model, X, i, p):
    """``H(X with x_i := p) - H(X)`` in O(N)."""
    pts = np.ascontiguousarray(_as_points(X))
    p = np.asarray(p, dtype=float)
    if np.array_equal(p, pts[i]):
        return 0.0
    if model.compiled:
        return float(_kernels.delta_move(pts, int(i), p, float(model.W.quadratic_coefficient),
                                         model._charges()))
    d = pts.shape[1]
    others = np.delete(pts, i, axis=0)
    a, b = others - p, others - pts[i]
    r2_new = np.sum(a * a, axis=1)
    if np.any(r2_new == 0):
        return math.inf
    r2_old = np.sum(b * b, axis=1)
    # differenced form: r2_new - r2_old = (p - x_i) . ((p - y) + (x_i - y))
    q = np.sum((p - pts[i]) * (-a - b), axis=1) / r2_old
    if d == 2:
        pair = -0.5 * np.log1p(q)
    else:
        e = 0.5 * (2 - d)
        pair = r2_old ** e * np.expm1(e * np.log1p(q))
    delta = float(math.fsum(pair)) + float(model.W(p) - model.W(pts[i]))
    if isinstance(model.U, ProductOneBody):
        delta += float(model.U.one_body(p) - model.U.one_body(pts[i]))
    elif model.U is not None:
        moved = pts.copy()
        moved[i] = p
        delta += model.U(moved) - model.U(pts)
    return delta


# ---------------------------------------------------------------------------
# equilibrium measure


@dataclass(frozen=True)
class EquilibriumMeasure:
    """Uniform droplet of constant density for radial quadratic confinement.

    ``mass`` is 1 for the macroscopic measure and ``N`` for its blown-up
    version.
    """

    d: int
    density: float
    radius: float
    mass: float
    blown_up: bool

    def blow_up(self, N):
        if self.blown_up:
            return self
        return EquilibriumMeasure(self.d, self.density, self.radius * N ** (1.0 / self.d),
                                  self.mass * N, True)

    def density_at(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.linalg.norm(x, axis=-1) < self.radius, self.density, 0.0)

    def mass_in_ball(self, center, R):
        """Exact ``mu(B_R(center))`` via the lens area/volume of two balls."""
        c = float(np.linalg.norm(center))
        return self.density * ball_intersection_volume(self.d, self.radius, R, c)

    def sphere_fraction(self, s, c):
        """Fraction of the sphere of radius ``s`` centred at distance ``c`` inside the droplet."""
        return sphere_fraction_inside(self.d, s, c, self.radius)

    def potential(self, t):
        """``g * mu`` at distance ``t`` from the centre (exact)."""
        from .kernel import RadialMeasure, radial_potential

        ball = RadialMeasure.annulus(0.0, self.radius, self.d)
        return self.mass * radial_potential(ball, t)


def ball_intersection_volume(d, r1, r2, c):
    """Volume of the intersection of balls of radii ``r1``, ``r2`` whose centres are ``c`` apart."""
    if r1 <= 0 or r2 <= 0:
        return 0.0
    if c >= r1 + r2:
        return 0.0
    small = min(r1, r2)
    if c <= abs(r1 - r2):
        return ball_volume(d) * small ** d
    if d == 2:
        a1 = r1 * r1 * math.acos((c * c + r1 * r1 - r2 * r2) / (2 * c * r1))
        a2 = r2 * r2 * math.acos((c * c + r2 * r2 - r1 * r1) / (2 * c * r2))
        k = (-c + r1 + r2) * (c + r1 - r2) * (c - r1 + r2) * (c + r1 + r2)
        return a1 + a2 - 0.5 * math.sqrt(max(k, 0.0))
    if d == 3:
        return (math.pi * (r1 + r2 - c) ** 2
                * (c * c + 2 * c * r1 - 3 * r1 * r1 + 2 * c * r2 + 6 * r1 * r2 - 3 * r2 * r2)
                / (12 * c))
    raise ValueError(f"lens volumes implemented for d in {SUPPORTED_DIMS}")


def sphere_fraction_inside(d, s, c, R):
    """Fraction of the sphere (radius ``s``, centre at distance ``c``) inside ``B_R(0)``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if d == 2:
            # the point at angle theta from the outward direction is inside iff cos(theta) < K
            K = (R * R - s * s - c * c) / (2 * s * c)
            frac = 1.0 - np.arccos(np.clip(K, -1.0, 1.0)) / math.pi
        elif d == 3:
            frac = np.clip((R * R - (s - c) ** 2) / (4 * s * c), 0.0, 1.0)
        else:
            raise ValueError(f"implemented for d in {SUPPORTED_DIMS}")
    if c == 0:
        frac = np.where(s < R, 1.0, 0.0)
    return np.clip(frac, 0.0, 1.0)


def equilibrium(model):
    """Equilibrium measure for radial quadratic confinement.

    Returns the blown-up droplet (mass ``N``) when the confinement is a
    :class:`BlownUp` potential and the macroscopic one (mass 1) otherwise.
    """
    W = model.W
    if isinstance(W, BlownUp):
        base = W.base
    elif isinstance(W, RadialQuadratic):
        base = W
    else:
        raise UnsupportedPotentialError("equilibrium measure needs radial quadratic confinement")
    d = model.d
    density = base.laplacian_bound(d) / coulomb_constant(d)
    radius = (1.0 / (density * ball_volume(d))) ** (1.0 / d)
    eq = EquilibriumMeasure(d, density, radius, 1.0, False)
    return eq.blow_up(model.N) if isinstance(W, BlownUp) else eq


# ---------------------------------------------------------------------------
# serialisation

_MAGIC = b"GASLAB01"
_HEADER = struct.Struct("<8sIQQq")


def save_csv(path, X, seed=None):
    """Write one configuration as CSV: a comment header then ``x1..xd`` rows."""
    pts = _as_points(X)
    n, d = pts.shape
    head = f"gaslab configuration v1 d={d} N={n} seed={'' if seed is None else seed}\n"
    head += ",".join(f"x{k + 1}" for k in range(d))
    np.savetxt(path, pts, delimiter=",", header=head, comments="# ", fmt="%.17g")


def load_csv(path):
    """Read a configuration written by :func:`save_csv`; returns ``(Configuration, seed)``."""
    seed = None
    with open(path) as fh:
        first = fh.readline()
    for tok in first.split():
        if tok.startswith("seed=") and tok[5:]:
            seed = int(tok[5:])
    pts = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return Configuration(pts), seed


def save_binary(path, configs, seed=None):
    """Write one or more configurations (same ``N``, ``d``) as little-endian float64."""
    if isinstance(configs, Configuration):
        arr = configs.points[None]
    else:
        arr = np.asarray([_as_points(c) for c in configs] if isinstance(configs, list) else configs,
                         dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
    m, n, d = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, d, n, m, -1 if seed is None else int(seed)))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_binary(path):
    """Read configurations written by :func:`save_binary`; returns ``(array (M, N, d), seed)``."""
    raw = Path(path).read_bytes()
    magic, d, n, m, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not a gaslab configuration file")
    arr = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=m * n * d)
    return arr.reshape(m, n, d).astype(float), (None if seed < 0 else seed)
