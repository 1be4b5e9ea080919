"""Compiled O(N) / O(N^2) particle loops.

Energies are accumulated in fixed index order with Kahan compensation so
that Metropolis decisions do not depend on platform summation order.
The confinement is restricted to ``c |x|^2`` (``c = 0`` for none) and the
one-body perturbation to unit charges at fixed sites; anything else goes
through the pure-Python path in :mod:`gaslab.gas`.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def pair_kernel(d, r2):
    if r2 <= 0.0:
        return math.inf
    if d == 2:
        return -0.5 * math.log(r2)
    if d == 3:
        return 1.0 / math.sqrt(r2)
    return r2 ** (0.5 * (2 - d))


@njit(cache=True, nogil=True)
def _sqdist(x, y):
    s = 0.0
    for k in range(x.shape[0]):
        diff = x[k] - y[k]
        s += diff * diff
    return s


@njit(cache=True, nogil=True)
def _one_body(p, c, charges):
    d = p.shape[0]
    w = 0.0
    for k in range(d):
        w += p[k] * p[k]
    total = c * w
    for a in range(charges.shape[0]):
        total += pair_kernel(d, _sqdist(p, charges[a]))
    return total


@njit(cache=True, nogil=True)
def energy(points, c, charges):
    n, d = points.shape
    total = 0.0
    comp = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            term = pair_kernel(d, _sqdist(points[i], points[j]))
            if term == math.inf:
                return math.inf
            y = term - comp
            t = total + y
            comp = (t - total) - y
            total = t
        y = _one_body(points[i], c, charges) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@njit(cache=True, nogil=True)
def pair_difference(d, p, x, y):
    """``g(|p - y|) - g(|x - y|)`` without cancelling the two kernel values.

    With ``u = p - x`` the squared distances differ by
    ``u . ((p - y) + (x - y))``, which stays accurate for small moves.
    """
    r2n = 0.0
    r2o = 0.0
    num = 0.0
    for k in range(d):
        a = p[k] - y[k]
        b = x[k] - y[k]
        r2n += a * a
        r2o += b * b
        num += (p[k] - x[k]) * (a + b)
    if r2n <= 0.0:
        return math.inf
    if r2o <= 0.0:
        return -math.inf
    q = num / r2o
    if d == 2:
        return -0.5 * math.log1p(q)
    e = 0.5 * (2 - d)
    return r2o ** e * math.expm1(e * math.log1p(q))


@njit(cache=True, nogil=True)
def delta_move(points, i, p, c, charges):
    n, d = points.shape
    total = 0.0
    comp = 0.0
    xi = points[i]
    for j in range(n + charges.shape[0]):
        if j == i:
            continue
        y = points[j] if j < n else charges[j - n]
        term = pair_difference(d, p, xi, y)
        if term == math.inf:
            return math.inf
        y2 = term - comp
        t = total + y2
        comp = (t - total) - y2
        total = t
    w = 0.0
    for k in range(d):
        w += (p[k] - xi[k]) * (p[k] + xi[k])
    return total + c * w


@njit(cache=True, nogil=True)
def sweeps(points, normals, uniforms, sigma, beta, c, charges, box_half):
    """Sequential-scan single-particle Metropolis; returns the accepted count.

    ``normals`` has shape (n_sweeps, N, d), ``uniforms`` (n_sweeps, N).
    Proposals leaving the box ``|x_k| < box_half`` are rejected.
    """
    n_sweeps = normals.shape[0]
    n, d = points.shape
    prop = np.empty(d)
    accepted = 0
    for s in range(n_sweeps):
        for i in range(n):
            outside = False
            for k in range(d):
                prop[k] = points[i, k] + sigma * normals[s, i, k]
                if abs(prop[k]) >= box_half:
                    outside = True
            if outside:
                continue
            de = delta_move(points, i, prop, c, charges)
            if de == math.inf:
                continue
            if de <= 0.0 or math.log(uniforms[s, i]) < -beta * de:
                for k in range(d):
                    points[i, k] = prop[k]
                accepted += 1
    return accepted
