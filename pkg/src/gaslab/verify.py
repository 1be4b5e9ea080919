"""Electrostatic identity suite behind ``gaslab verify``.

Each check returns ``(passed, detail)``. Setting the environment variable
``GASLAB_INJECT_FAULT`` to a check name (or ``all``) flips the sign of the
quantity that check inspects; the suite must then fail. This is the
negative control for the harness itself.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .averaging import IndexSet, iso_energy_change, mimicry_energy_change, verify_prop21
from .gas import Flat, GasModel, RadialQuadratic, energy, energy_delta_move, equilibrium
from .kernel import (RadialMeasure, ball_volume, coulomb_g, l1_deficit, radial_pair,
                     radial_point, shell_point, sup_density)
from .quadrature import integrate

FAULT_ENV = "GASLAB_INJECT_FAULT"


def _fault(name, value):
    target = os.environ.get(FAULT_ENV, "")
    return -value if target in (name, "all") else value


def _rng():
    return np.random.default_rng(20240601)


def _random_measure(rng, d):
    a = rng.uniform(0.0, 1.0)
    b = a + rng.uniform(0.1, 1.5)
    u = rng.random()
    if u < 0.6:
        return RadialMeasure.annulus(a, b, d)
    return RadialMeasure.shell(b, d) if u < 0.8 else RadialMeasure.mollifier(b, d)


def check_newton_exterior():
    worst = 0.0
    for d in (2, 3):
        for s in (0.3, 1.0, 2.5):
            for t in np.linspace(s, 4 * s, 13):
                worst = max(worst, abs(_fault("newton_exterior", shell_point(d, s, t)) - coulomb_g(d, t)))
    return worst == 0.0, f"max |shell - g| = {worst:.1e}"


def check_newton_interior():
    worst = 0.0
    for d in (2, 3):
        for s in (0.5, 1.0, 3.0):
            for t in np.linspace(0, s, 9, endpoint=False):
                worst = max(worst, abs(_fault("newton_interior", shell_point(d, s, t)) - coulomb_g(d, s)))
    return worst <= 1e-12, f"max |shell(t<s) - g(s)| = {worst:.1e}"


def check_mean_value():
    rng = _rng()
    worst = -math.inf
    for _ in range(200):
        d = int(rng.choice([2, 3]))
        nu = _random_measure(rng, d)
        t = rng.uniform(0.01, 1.5 * nu.outer)
        gap = _fault("mean_value", coulomb_g(d, t) - radial_point(nu, t))
        if t >= nu.outer and gap != 0.0:
            return False, f"exterior mismatch at t={t}"
        worst = max(worst, -gap)
    return worst <= 1e-9, f"max violation = {worst:.1e}"


def check_monotone():
    rng = _rng()
    for _ in range(40):
        d = int(rng.choice([2, 3]))
        nu = _random_measure(rng, d)
        t = np.linspace(0, 1.5 * nu.outer, 60)
        v = np.array([_fault("monotone", radial_point(nu, x)) for x in t])
        if np.any(np.diff(v) > 1e-12):
            return False, f"increase for {nu}"
    return True, "radial potentials non-increasing"


def check_pair_symmetry():
    rng = _rng()
    worst = 0.0
    for _ in range(20):
        d = int(rng.choice([2, 3]))
        a, b = _random_measure(rng, d), _random_measure(rng, d)
        t = rng.uniform(0, a.outer + b.outer)
        worst = max(worst, abs(_fault("pair_symmetry", radial_pair(a, b, t)) - radial_pair(b, a, t)))
    return worst <= 1e-9, f"max asymmetry = {worst:.1e}"


def check_closed_form():
    rng = _rng()
    worst = 0.0
    for _ in range(20):
        d = int(rng.choice([2, 3]))
        nu = RadialMeasure.annulus(rng.uniform(0, 1), rng.uniform(1.1, 2), d)
        t = rng.uniform(0, nu.outer)
        exact = radial_point(nu, t)
        quad = radial_point(nu, t, method="quadrature")
        worst = max(worst, abs(_fault("closed_form", exact) - quad))
    return worst <= 1e-9, f"closed form vs quadrature = {worst:.1e}"


def check_mollifier_scaling():
    c1 = l1_deficit(1.0, 2)
    c2 = _fault("mollifier_scaling", l1_deficit(2.0, 2)) / 4
    rel = abs(c2 - c1) / c1
    return rel <= 5e-3, f"l1(2)/4 vs l1(1): rel diff {rel:.1e}"


def check_sup_density():
    nu = RadialMeasure.annulus(0.5, 1.0, 2)
    v = _fault("sup_density", sup_density(nu))
    return abs(v - 4 / (3 * math.pi)) <= 1e-15, f"{v:.15f}"


def check_second_moment():
    worst = 0.0
    for d in (2, 3):
        nu = RadialMeasure.annulus(0.4, 1.3, d)
        quad = integrate(lambda s: s * s * nu.weight(s), nu.inner, nu.outer, tol=1e-14)
        worst = max(worst, abs(_fault("second_moment", nu.second_moment()) - quad))
    return worst <= 1e-12, f"closed form vs quadrature = {worst:.1e}"


def check_energy_delta():
    rng = _rng()
    worst = 0.0
    for _ in range(50):
        d = int(rng.choice([2, 3]))
        n = int(rng.integers(2, 24))
        model = GasModel(d, 2.0, n, RadialQuadratic(0.5))
        X = rng.normal(size=(n, d)) * 2
        i = int(rng.integers(n))
        p = rng.normal(size=d) * 2
        Y = X.copy()
        Y[i] = p
        full = energy(model, Y) - energy(model, X)
        fast = _fault("energy_delta", energy_delta_move(model, X, i, p))
        worst = max(worst, abs(fast - full) / max(1.0, abs(full)))
    return worst <= 1e-9, f"max rel error = {worst:.1e}"


def check_iso_dominance():
    rng = _rng()
    worst = math.inf
    for _ in range(20):
        d = int(rng.choice([2, 3]))
        n = int(rng.integers(2, 9))
        model = GasModel(d, 1.0, n, Flat())
        X = rng.normal(size=(n, d))
        I = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        rep = iso_energy_change(model, X, IndexSet(I, n), _random_measure(rng, d))
        worst = min(worst, _fault("iso_dominance", rep.pair_term))
    return worst >= -1e-9, f"min pair term = {worst:.3e}"


def check_prop21():
    rng = _rng()
    failures = 0
    for _ in range(100):
        d = int(rng.choice([2, 3]))
        R = rng.uniform(1.0, 4.0)
        r = rng.uniform(0.01, 0.099) * R
        k = int(rng.integers(0, 5))
        pts = np.concatenate([rng.normal(size=(k, d)) * r / 3, rng.normal(size=(6, d)) * R])
        model = GasModel(d, 2.0, len(pts), RadialQuadratic(0.5))
        res = verify_prop21(pts, np.zeros(d), r, R, model)
        margin = _fault("prop21", res.rhs - res.lhs)
        if res.n and margin < -1e-9 * (1 + abs(res.rhs)):
            failures += 1
    return failures == 0, f"{failures} counterexamples in 100 configurations"


def check_mimicry():
    rng = _rng()
    for _ in range(20):
        d = int(rng.choice([2, 3]))
        n = int(rng.integers(2, 9))
        model = GasModel(d, 2.0, n, RadialQuadratic(0.5))
        X = rng.normal(size=(n, d))
        s = rng.uniform(0.1, 1.0)
        rep = mimicry_energy_change(model, X, 0, 1, RadialMeasure.shell(s, d))
        if _fault("mimicry", rep.pair_ij) != coulomb_g(d, s) or not rep.holds:
            return False, f"shell pair term {rep.pair_ij} vs g(s) {coulomb_g(d, s)}"
    return True, "shell pair term equals g(s); max(delta_ij, delta_ji) above bound"


def check_frostman():
    worst = 0.0
    for d, c in ((2, 0.5), (3, 0.5)):
        model = GasModel(d, 2.0, 1, RadialQuadratic(c))
        eq = equilibrium(model)
        t = np.linspace(0, eq.radius, 10)
        total = _fault("frostman", np.array([eq.potential(x) for x in t])) + c * t * t
        worst = max(worst, float(np.ptp(total)))
        if abs(eq.density * ball_volume(d) * eq.radius ** d - 1) > 1e-12:
            return False, "equilibrium mass is not 1"
    return worst <= 1e-6, f"variation of g*mu + V on droplet = {worst:.1e}"


CHECKS = {
    "newton_exterior": check_newton_exterior,
    "newton_interior": check_newton_interior,
    "mean_value": check_mean_value,
    "monotone": check_monotone,
    "pair_symmetry": check_pair_symmetry,
    "closed_form": check_closed_form,
    "mollifier_scaling": check_mollifier_scaling,
    "sup_density": check_sup_density,
    "second_moment": check_second_moment,
    "energy_delta": check_energy_delta,
    "iso_dominance": check_iso_dominance,
    "prop21": check_prop21,
    "mimicry": check_mimicry,
    "frostman": check_frostman,
}


def run_all(names=None):
    """Run the named checks (all by default); returns a list of ``(name, passed, detail)``."""
    out = []
    for name in names or CHECKS:
        try:
            ok, detail = CHECKS[name]()
        except Exception as exc:  # a crash is a failure of that property
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
