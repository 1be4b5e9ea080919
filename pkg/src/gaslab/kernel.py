"""Coulomb kernel and the electrostatics of radial charge distributions.

Everything here rests on Newton's theorem: a uniform spherical shell of
radius ``s`` acts on a point at distance ``t`` from its centre like a point
charge when ``t >= s`` and exerts the constant potential ``g(s)`` inside.
Radial measures are treated as superpositions of shells, so their
potentials and mutual interactions reduce to one-dimensional radial
integrals (or closed forms for shells and uniform annuli).

Energies are plain floats. Coincident points are represented by
``math.inf``; callers must branch on it rather than rely on overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .quadrature import DEFAULT_TOL, integrate

SUPPORTED_PAIR_DIMS = (2, 3)
# radii below this carry no mass at double precision; keeps weight * g finite
_FLOOR = 1e-150


class DomainError(ValueError):
    """An argument lies outside the domain of a kernel operation."""


def sphere_area(d):
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d):
    """Volume of the unit ball in R^d."""
    return sphere_area(d) / d


def coulomb_constant(d):
    """The constant ``c_d`` with ``-Laplace g = c_d * delta_0`` (2*pi in d=2, 4*pi in d=3)."""
    return sphere_area(d) * (d - 2 + (d == 2))


def _g(d, t):
    """Vectorised kernel, +inf at zero separation."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        if d == 2:
            return -np.log(t)
        return np.power(t, 2.0 - d)


def coulomb_g(d, t):
    """Coulomb kernel as a function of the separation ``t > 0``.

    ``-log t`` in two dimensions and ``t**(2 - d)`` for ``d >= 3``.
    """
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if not t > 0:
        raise DomainError(f"separation must be positive, got {t!r} (coincident points?)")
    return _g_scalar(d, t)


def _g_scalar(d, t):
    if t <= 0:
        return math.inf
    if d == 2:
        return -math.log(t)
    try:
        return t ** (2 - d)
    except OverflowError:  # subnormal separations
        return math.inf


def shell_point(d, s, t):
    """Interaction of a unit shell of radius ``s`` with a unit point charge at distance ``t``."""
    if not s > 0:
        raise DomainError(f"shell radius must be positive, got {s!r}")
    if t < 0:
        raise DomainError(f"distance must be nonnegative, got {t!r}")
    return _g_scalar(d, max(s, t))


# ---------------------------------------------------------------------------
# radial measures


@lru_cache(maxsize=None)
def _bump_normalisation(d):
    # mass of exp(-1/(1-|x|^2)) over the unit ball
    area = sphere_area(d)
    mass = integrate(lambda s: area * s ** (d - 1) * np.exp(-1.0 / (1.0 - s * s)),
                     0.0, 1.0, tol=1e-15)
    return 1.0 / mass


def bump_profile(d, x):
    """Normalised bump ``c * exp(-1/(1-|x|^2))`` on the unit ball, as a function of ``|x|``."""
    x = np.asarray(x, dtype=float)
    inside = x < 1.0
    xx = np.where(inside, x, 0.0)
    return np.where(inside, _bump_normalisation(d) * np.exp(-1.0 / (1.0 - xx * xx)), 0.0)


@dataclass(frozen=True)
class RadialMeasure:
    """Rotationally symmetric probability measure on R^d.

    Build instances with :meth:`shell`, :meth:`annulus` or :meth:`mollifier`.
    ``inner`` and ``outer`` are the radii bounding the support; for a shell
    they coincide and for a mollifier ``inner`` is zero and ``outer`` is the
    mollification scale.
    """

    kind: str
    d: int
    inner: float
    outer: float

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"dimension must be >= 2, got {self.d}")
        if self.kind not in ("shell", "annulus", "mollifier"):
            raise DomainError(f"unknown radial profile {self.kind!r}")
        if self.kind == "shell" and not self.outer > 0:
            raise DomainError("shell radius must be positive")
        if self.kind == "annulus" and not (0 <= self.inner < self.outer):
            raise DomainError(f"annulus needs 0 <= a < b, got [{self.inner}, {self.outer}]")
        if self.kind == "mollifier" and not self.outer > 0:
            raise DomainError("mollifier scale must be positive")

    @classmethod
    def shell(cls, s, d=2):
        return cls("shell", d, float(s), float(s))

    @classmethod
    def annulus(cls, a, b, d=2):
        return cls("annulus", d, float(a), float(b))

    @classmethod
    def mollifier(cls, r, d=2):
        return cls("mollifier", d, 0.0, float(r))

    @property
    def is_shell(self):
        return self.kind == "shell"

    def weight(self, s):
        """Radial mass density: ``nu(B_s)`` has derivative ``weight(s)``. Undefined for shells."""
        s = np.asarray(s, dtype=float)
        d = self.d
        if self.kind == "annulus":
            a, b = self.inner, self.outer
            inside = (s >= a) & (s <= b)
            return np.where(inside, d * s ** (d - 1) / (b ** d - a ** d), 0.0)
        if self.kind == "mollifier":
            r = self.outer
            return sphere_area(d) * s ** (d - 1) * bump_profile(d, s / r) / r ** d
        raise DomainError("a shell has no radial density")

    def density(self, x):
        """Lebesgue density at distance ``|x| = x`` from the centre."""
        x = np.asarray(x, dtype=float)
        if self.kind == "annulus":
            a, b = self.inner, self.outer
            inside = (x >= a) & (x <= b)
            return np.where(inside, 1.0 / (ball_volume(self.d) * (b ** self.d - a ** self.d)), 0.0)
        if self.kind == "mollifier":
            r = self.outer
            return bump_profile(self.d, x / r) / r ** self.d
        raise DomainError("a shell has a singular density")

    def second_moment(self):
        """``E|Y|^2`` for ``Y ~ nu``."""
        d = self.d
        if self.kind == "shell":
            return self.outer ** 2
        if self.kind == "annulus":
            a, b = self.inner, self.outer
            return d / (d + 2) * (b ** (d + 2) - a ** (d + 2)) / (b ** d - a ** d)
        r = self.outer
        return integrate(lambda s: s * s * self.weight(s), 0.0, r, tol=1e-14 * r * r)

    def sample(self, rng, size):
        """Draw ``size`` displacement vectors distributed as ``nu``."""
        d = self.d
        direction = rng.standard_normal((size, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        if self.kind == "shell":
            radius = np.full(size, self.outer)
        elif self.kind == "annulus":
            a, b = self.inner, self.outer
            radius = (a ** d + rng.random(size) * (b ** d - a ** d)) ** (1.0 / d)
        else:
            radius = np.empty(size)
            peak = float(self.weight(np.linspace(0, self.outer, 2049)).max()) * 1.01
            filled = 0
            while filled < size:
                m = 2 * (size - filled) + 16
                cand = rng.random(m) * self.outer
                keep = cand[rng.random(m) * peak < self.weight(cand)]
                take = min(keep.size, size - filled)
                radius[filled:filled + take] = keep[:take]
                filled += take
        return direction * radius[:, None]


def sup_density(nu):
    """Supremum of the Lebesgue density of ``nu``."""
    if nu.kind == "shell":
        raise DomainError("a shell has a singular density")
    if nu.kind == "annulus":
        return 1.0 / (ball_volume(nu.d) * (nu.outer ** nu.d - nu.inner ** nu.d))
    # the bump peaks at the centre
    return float(bump_profile(nu.d, 0.0)) / nu.outer ** nu.d


def self_potential(nu):
    """``int g d nu``: the potential of ``nu`` at its own centre."""
    return radial_point(nu, 0.0)


# ---------------------------------------------------------------------------
# potentials of shells and annuli in closed form
#
# On each radial interval [lo, hi) the potential of a shell or uniform
# annulus has the form alpha + beta * g(u) + gamma * u**2.


def _pieces(nu):
    d = nu.d
    if nu.kind == "shell":
        s = nu.outer
        return [(0.0, s, _g_scalar(d, s), 0.0, 0.0), (s, math.inf, 0.0, 1.0, 0.0)]
    if nu.kind != "annulus":
        return None
    a, b = nu.inner, nu.outer
    D = b ** d - a ** d
    if d == 2:
        alpha = (0.5 * b * b - b * b * math.log(b)) / D
        beta = -a * a / D
        gamma = -0.5 / D
    else:
        alpha = d * b * b / (2 * D)
        beta = -a ** d / D
        gamma = (1 - d / 2) / D
    pieces = []
    if a > 0:
        # beta * g(a) = -a^d g(a) / D, written so tiny a cannot give 0 * inf
        ag = -a * a * math.log(a) if d == 2 else a * a
        inner_value = alpha - ag / D + gamma * a * a
        pieces.append((0.0, a, inner_value, 0.0, 0.0))
    pieces.append((a, b, alpha, beta, gamma))
    pieces.append((b, math.inf, 0.0, 1.0, 0.0))
    return pieces


def _eval_pieces(d, pieces, u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for lo, hi, alpha, beta, gamma in pieces:
        m = (u >= lo) & (u < hi)
        if not np.any(m):
            continue
        val = alpha + gamma * u[m] ** 2
        if beta != 0.0:
            with np.errstate(invalid="ignore", over="ignore"):
                term = beta * _g(d, u[m])
            # 0 * inf only when beta underflowed; the true product is below a^2
            val = val + np.where(np.isnan(term), 0.0, term)
        out[m] = val
    return out


def _dilog_arc(q, phi):
    """``int_0^phi log|1 + q e^{i psi}| d psi`` for ``0 <= q <= 1``."""
    z = 1.0 + q * np.exp(1j * phi)
    # Li2(w) = spence(1 - w), evaluated at w = -q e^{i phi}
    return -np.imag(special.spence(z))


def _sphere_moments(d, s, t, lo, hi):
    """Averages of ``1{lo<=u<hi}``, ``g(u) 1{..}`` and ``u^2 1{..}`` over a sphere.

    The sphere has radius ``s`` and centre at distance ``t`` from the origin;
    ``u`` is the distance from the origin of a uniform point on it.
    """
    s, t, lo, hi = (np.asarray(v, dtype=float) for v in (s, t, lo, hi))
    s, t, lo, hi = np.broadcast_arrays(s, t, lo, hi)
    shape = s.shape
    s, t, lo, hi = (v.ravel() for v in (s, t, lo, hi))
    m0 = np.zeros(s.size)
    mg = np.zeros(s.size)
    m2 = np.zeros(s.size)

    # also catches products that underflow, where one sphere is effectively a point
    degenerate = s * t == 0
    if np.any(degenerate):
        u = np.maximum(s[degenerate], t[degenerate])
        inside = (u >= lo[degenerate]) & (u < hi[degenerate])
        m0[degenerate] = inside
        m2[degenerate] = np.where(inside, u * u, 0.0)
        mg[degenerate] = np.where(inside, _g(d, u), 0.0)

    ok = ~degenerate
    if np.any(ok):
        ss, tt, ll, hh = s[ok], t[ok], lo[ok], hi[ok]
        if d == 2:
            def angle(c):
                with np.errstate(invalid="ignore"):
                    cos = np.clip((c * c - tt * tt - ss * ss) / (2 * tt * ss), -1.0, 1.0)
                return np.where(np.isinf(c), 0.0, np.arccos(cos))

            p_lo, p_hi = angle(ll), angle(hh)
            width = p_lo - p_hi
            m0[ok] = width / math.pi
            m2[ok] = ((tt * tt + ss * ss) * width
                      + 2 * tt * ss * (np.sin(p_lo) - np.sin(p_hi))) / math.pi
            big = np.maximum(tt, ss)
            q = np.minimum(tt, ss) / big
            logs = np.log(big) * width + _dilog_arc(q, p_lo) - _dilog_arc(q, p_hi)
            mg[ok] = np.where(width > 0, -logs / math.pi, 0.0)
        elif d == 3:
            L = np.maximum(ll, np.abs(tt - ss))
            H = np.minimum(hh, tt + ss)
            H = np.where(H > L, H, L)
            ts = tt * ss
            m0[ok] = (H * H - L * L) / (4 * ts)
            mg[ok] = (H - L) / (2 * ts)
            m2[ok] = (H ** 4 - L ** 4) / (8 * ts)
        else:
            raise DomainError(f"pair interactions are implemented for d in {SUPPORTED_PAIR_DIMS}")
    return m0.reshape(shape), mg.reshape(shape), m2.reshape(shape)


def _sphere_mean_of_pieces(d, pieces, s, t):
    total = 0.0
    for lo, hi, alpha, beta, gamma in pieces:
        m0, mg, m2 = _sphere_moments(d, s, t, lo, hi)
        term = alpha * m0 + gamma * m2
        if beta != 0.0:
            term = term + beta * mg
        total = total + term
    return total


def _shell_shell(d, s1, s2, t):
    """Interaction of unit shells of radii ``s1`` (array) and ``s2`` with centres ``t`` apart."""
    s1 = np.asarray(s1, dtype=float)
    m0, _, _ = _sphere_moments(d, s2, t, 0.0, s1)
    _, mg_out, _ = _sphere_moments(d, s2, t, s1, math.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner_val = np.where(m0 > 0, _g(d, np.where(s1 > 0, s1, 1.0)) * m0, 0.0)
    return inner_val + mg_out


# ---------------------------------------------------------------------------
# public interaction routines


def radial_point(nu, t, method="auto", tol=DEFAULT_TOL):
    """Interaction of a unit charge shaped like ``nu`` with a point at distance ``t``.

    Parameters
    ----------
    nu : RadialMeasure
    t : float
        Distance between the point and the centre of ``nu``.
    method : {"auto", "quadrature"}
        ``"auto"`` uses the exact shell superposition for shells and annuli
        and quadrature for mollifiers; ``"quadrature"`` always integrates
        ``shell_point`` against the radial weight of ``nu``.
    """
    if t < 0:
        raise DomainError(f"distance must be nonnegative, got {t!r}")
    d = nu.d
    t = float(t)
    if t >= nu.outer and t > 0:
        return _g_scalar(d, t)
    if nu.kind == "shell":
        return shell_point(d, nu.outer, t)
    if method == "auto" and nu.kind == "annulus":
        return float(_eval_pieces(d, _pieces(nu), np.array([t]))[0])
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")

    def f(s):
        return nu.weight(s) * _g(d, np.maximum(s, max(t, _FLOOR)))

    return integrate(f, nu.inner, nu.outer, breakpoints=(t,), tol=tol)


def radial_potential(nu, t):
    """Vectorised :func:`radial_point` for shells and annuli (exact)."""
    pieces = _pieces(nu)
    if pieces is None:
        t = np.asarray(t, dtype=float)
        return np.vectorize(lambda x: radial_point(nu, x))(t)
    return _eval_pieces(nu.d, pieces, t)


def _kinks(pieces, t):
    edges = {lo for lo, *_ in pieces} | {hi for _, hi, *_ in pieces if math.isfinite(hi)}
    out = {t}
    for e in edges:
        out.add(abs(t - e))
        out.add(t + e)
    return out


def radial_pair(nu1, nu2, t, tol=DEFAULT_TOL):
    """Interaction of two radial unit charges whose centres are ``t`` apart.

    Computes ``E g(x + Y1 - Y2)`` with ``|x| = t``, ``Y1 ~ nu1`` and ``Y2 ~ nu2``.
    """
    if nu1.d != nu2.d:
        raise DomainError("measures live in different dimensions")
    d = nu1.d
    if d not in SUPPORTED_PAIR_DIMS:
        raise DomainError(f"pair interactions are implemented for d in {SUPPORTED_PAIR_DIMS}")
    if t < 0:
        raise DomainError(f"distance must be nonnegative, got {t!r}")
    t = float(t)
    if t > 0 and t >= nu1.outer + nu2.outer:
        return _g_scalar(d, t)

    # integrate the closed-form potential of one measure over the shells of the other
    outer_measure, inner_measure = nu2, nu1
    if _pieces(nu1) is None and _pieces(nu2) is not None:
        outer_measure, inner_measure = nu1, nu2
    pieces = _pieces(inner_measure)

    if pieces is not None:
        if outer_measure.is_shell:
            return float(_sphere_mean_of_pieces(d, pieces, outer_measure.outer, t))

        def f(s):
            return outer_measure.weight(s) * _sphere_mean_of_pieces(d, pieces, s, t)

        return integrate(f, outer_measure.inner, outer_measure.outer,
                         breakpoints=_kinks(pieces, t), tol=tol)

    # both are mollifiers: nest over the shells of each
    r1 = inner_measure.outer

    def shell_mean(s2):
        def inner(s1):
            return inner_measure.weight(s1) * _shell_shell(d, s1, s2, t)

        return integrate(inner, 0.0, r1, breakpoints=(abs(t - s2), t + s2), tol=tol * 0.1)

    def f(s):
        s = np.atleast_1d(s)
        return outer_measure.weight(s) * np.array([shell_mean(x) for x in s])

    return integrate(f, 0.0, outer_measure.outer, breakpoints=(t,), tol=tol)


def mollified_g(phi, t, order=1):
    """``Phi_r g`` (order 1) or ``Phi_r^2 g`` (order 2) at distance ``t``.

    ``phi`` must be a mollifier; its ``outer`` radius is the scale ``r``.
    """
    if phi.kind != "mollifier":
        raise DomainError("mollified_g expects a mollifier profile")
    if order == 1:
        return radial_point(phi, t)
    if order == 2:
        return radial_pair(phi, phi, t)
    raise DomainError(f"order must be 1 or 2, got {order!r}")


def mollified_deficit(phi, t, order=1, tol=DEFAULT_TOL):
    """``g - Phi_r g`` (or ``g - Phi_r^2 g``) at distance ``t``, computed without cancellation for order 1."""
    d = phi.d
    if t < 0:
        raise DomainError(f"distance must be nonnegative, got {t!r}")
    if t == 0:
        return math.inf
    reach = phi.outer * order
    if t >= reach:
        return 0.0
    if order == 2:
        return max(_g_scalar(d, t) - radial_pair(phi, phi, t), 0.0)
    gt = _g_scalar(d, t)
    return integrate(lambda s: phi.weight(s) * (gt - _g(d, np.maximum(s, _FLOOR))), t, phi.outer, tol=tol)


def l1_deficit(r, d=2, tol=1e-11):
    """``int (g - Phi_r g) dx`` over R^d, by nested radial quadrature."""
    if not r > 0:
        raise DomainError(f"scale must be positive, got {r!r}")
    phi = RadialMeasure.mollifier(r, d)
    area = sphere_area(d)

    def f(t):
        return np.array([area * x ** (d - 1) * mollified_deficit(phi, x, tol=tol * 1e-1)
                         for x in np.atleast_1d(t)])

    return integrate(f, 0.0, r, tol=tol * r ** 2)
