"""Closed-form evaluators of the overcrowding, cluster, gap and incompressibility bounds.

These bounds hold with constants that are only known to exist. Here every such
constant is an explicit argument, defaulting to :class:`BoundConstants`.
:func:`calibrate_constant` finds the smallest constant consistent with
measured tail probabilities, which separates "constant too small" from
"bound violated".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq


@dataclass(frozen=True)
class BoundConstants:
    """Existential constants: ``C`` multiplies or enters exponents, ``c`` is a rate."""

    C: float = 10.0
    c: float = 0.1


DEFAULTS = BoundConstants()


@dataclass(frozen=True)
class BoundValue:
    """A bound in log space, plus whether its hypotheses hold for the given parameters."""

    log_value: float
    valid: bool
    note: str = ""

    @property
    def value(self):
        return math.exp(self.log_value) if self.log_value < 700 else math.inf


def _C(C):
    return DEFAULTS.C if C is None else C


def jlm_threshold(d, beta, R, lam=100, C=None):
    """Smallest ``Q`` for which the overcrowding bound is asserted."""
    C = _C(C)
    if d == 2:
        return (C * lam * lam * R * R + C / beta) / math.log(lam / 4)
    return C * R ** d + C / beta * R ** (d - 2)


def jlm_bound(d, beta, R, Q, lam=100, C=None):
    """Upper bound on ``P(X(B_R(z)) >= Q)``.

    ``d = 2``: ``exp(-beta/2 log(lam/4) Q^2 + C (1 + beta lam^2 R^2) Q)``.
    ``d >= 3``: ``exp(-2^{-d} beta R^{2-d} Q (Q - 1))`` (``lam`` and ``C`` only
    enter the validity check).
    """
    C = _C(C)
    notes = []
    valid = R >= 1
    if R < 1:
        notes.append("R < 1")
    if d == 2:
        if lam < 100 or lam != int(lam):
            valid = False
            notes.append("lambda must be an integer >= 100")
        log_value = -0.5 * beta * math.log(lam / 4) * Q * Q + C * (1 + beta * lam * lam * R * R) * Q
    else:
        log_value = -(2.0 ** -d) * beta * R ** (2 - d) * Q * (Q - 1)
    if Q < jlm_threshold(d, beta, R, lam, C):
        valid = False
        notes.append("Q below the validity threshold")
    return BoundValue(log_value, valid, "; ".join(notes))


def jlm_simplified(beta, R, Q, C=None, C2=None):
    """Planar bound at ``lam = sqrt(Q / R^2)``: ``exp(-beta/4 log(Q/R^2) Q^2 + C2 beta Q^2 + C Q)``.

    Substituting ``lam = sqrt(Q)/R`` into :func:`jlm_bound` gives this form
    with ``C2 = C + log 2``; the stated form absorbs ``log 2`` into the
    constant, so ``C2`` defaults to ``C``.
    """
    C = _C(C)
    C2 = C if C2 is None else C2
    log_value = -0.25 * beta * math.log(Q / (R * R)) * Q * Q + C2 * beta * Q * Q + C * Q
    return BoundValue(log_value, R >= 1)


def cluster_bound(d, beta, Q, r, centered=False, C=None):
    """Upper bound on ``P(X(B_r(z)) >= Q)`` (or around a particle when ``centered``)."""
    if not r > 0:
        raise ValueError("r must be positive")
    if Q < 1 or (centered and Q < 2):
        raise ValueError(f"invalid cluster size Q={Q} (centered={centered})")
    if d < 2:
        raise ValueError("dimension must be >= 2")
    C = 1.0 if C is None else C
    logC = math.log(C)
    logr = math.log(r)
    if d == 2:
        power = (2 * (Q - 1) if centered else 2 * Q) + beta * math.comb(Q, 2)
        return BoundValue(logC + power * logr, True)
    inv = r ** -(d - 2)
    if not centered:
        return BoundValue(logC + d * Q * logr - beta / 2 ** (d - 2) * inv * math.comb(Q, 2), True)
    if Q == 2:
        return BoundValue(logC + (2 * d - 2) * logr - beta * inv, True)
    return BoundValue(logC + d * (Q - 1) * logr
                      - beta / 2 ** (d - 2) * inv * math.comb(Q - 1, 2)
                      - beta * inv * (Q - 1), True)


@dataclass(frozen=True)
class GapScaling:
    """Gap thresholds and the matching limiting tail bounds.

    ``lower_tail_bound`` bounds ``P(eta_k <= lower_threshold)`` and
    ``upper_tail_bound`` bounds ``P(eta_k >= upper_threshold)``.
    """

    leading: float
    lower_threshold: float
    upper_threshold: float
    lower_tail_bound: float
    upper_tail_bound: float
    lower_exponent: float


def gap_scaling(d, beta, N, k, gamma, C=None):
    """Scale of the ``k``-th smallest gap and its tail bounds at parameter ``gamma``."""
    if N < 2:
        raise ValueError("need N >= 2")
    C = 1.0 if C is None else C
    if d == 2:
        lead = N ** (-1.0 / (2 + beta))
        expo = k * (2 + beta)
        return GapScaling(lead, gamma * lead, gamma * lead, C * gamma ** expo,
                          C * gamma ** (-(4 + 2 * beta) / (4 + beta)), expo)
    L = math.log(N)
    lead = (beta / L) ** (1.0 / (d - 2))
    base = 1 + (2 * d - 2) / (d - 2) ** 2 * math.log(L) / L

    def eta(z):
        return lead * (base + z / ((d - 2) * L))

    return GapScaling(lead, eta(-gamma), eta(gamma), C * math.exp(-k * gamma),
                      C * math.exp(-0.5 * gamma), float(k))


def incompressibility_bound(d, R, T, c=None):
    """``(bound, threshold)`` for ``P(Disc_W(B_R) >= threshold)``.

    bound = ``e^{-c R^d T} + e^{-c R^{(d+2)/3} T^2} + e^{-R^{d+2}}``,
    threshold = ``T R^{d - 2/3} (1 + 1_{d=2} log R)``.
    """
    c = DEFAULTS.c if c is None else c
    if R < 1 or T < 1:
        raise ValueError("need R >= 1 and T >= 1")
    bound = (math.exp(-c * R ** d * T) + math.exp(-c * R ** ((d + 2) / 3) * T * T)
             + math.exp(-R ** (d + 2)))
    threshold = T * R ** (d - 2.0 / 3.0) * (1 + (math.log(R) if d == 2 else 0.0))
    return bound, threshold


def calibrate_constant(log_bound, targets, lo=0.0, hi=1e6):
    """Smallest constant ``C`` with ``log_bound(C, x) >= log p`` for every ``(x, p)`` in ``targets``.

    ``log_bound(C, x)`` must be nondecreasing in ``C``. Targets with
    ``p = 0`` impose nothing. Returns ``lo`` when every target already holds there.
    """
    best = lo
    for x, p in targets:
        if p <= 0:
            continue
        goal = math.log(p)

        def gap(C, x=x, goal=goal):
            return log_bound(C, x) - goal

        if gap(best) >= 0:
            continue
        if gap(hi) < 0:
            raise ValueError(f"no constant below {hi} dominates target at {x!r}")
        best = brentq(gap, best, hi, xtol=1e-12, rtol=1e-12)
    return best


def calibrate_jlm(d, beta, R, tail, lam=100):
    """Smallest JLM constant dominating ``tail``, an iterable of ``(Q, probability)``."""
    return calibrate_constant(lambda C, Q: jlm_bound(d, beta, R, Q, lam, C).log_value, tail)
