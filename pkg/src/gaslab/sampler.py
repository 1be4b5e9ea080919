"""Single-particle Metropolis sampling of the Coulomb gas Gibbs measure.

Every chain draws its randomness from its own Philox stream, derived from
the master seed with ``SeedSequence(seed, spawn_key=(k,))``. Chains share
no mutable state, so they can run on a thread pool (the compiled sweep
releases the GIL) and the merged batch does not depend on scheduling.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .gas import (BlownUp, Configuration, Flat, RadialQuadratic, energy,
                  energy_delta_move, equilibrium, load_binary, save_binary)

TARGET_ACCEPTANCE = 0.35
DEFAULT_BURN_IN = 2000
DEFAULT_THIN = 10
ADAPT_WINDOW = 25
# sweeps handed to the compiled kernel per call when nothing is recorded in between
_BLOCK = 256


def chain_rng(seed, k):
    """Generator for chain ``k`` of master ``seed``; independent of every other chain."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))


@dataclass
class ChainState:
    """Mutable state of one Markov chain. Confined to a single worker at a time."""

    points: np.ndarray
    rng: np.random.Generator
    sigma: float
    sweep: int = 0
    accepted: int = 0
    proposed: int = 0
    window_accepted: int = 0
    window_proposed: int = 0
    adaptations: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"step size must be positive, got {self.sigma}")
        self.points = np.array(self.points, dtype=float, order="C")

    @property
    def config(self):
        return Configuration(self.points.copy(), validate=False)

    @property
    def acceptance(self):
        return self.accepted / self.proposed if self.proposed else float("nan")

    @property
    def window_acceptance(self):
        return self.window_accepted / self.window_proposed if self.window_proposed else float("nan")


def _droplet(model):
    W = model.W
    if isinstance(W, (BlownUp, RadialQuadratic)):
        return equilibrium(model).blow_up(model.N)
    return None


def default_sigma(model):
    """Initial proposal scale: a third of the mean interparticle spacing."""
    eq = _droplet(model)
    if eq is not None:
        return 0.3 * eq.density ** (-1.0 / model.d)
    box = getattr(model.W, "box", None) or 1.0
    return 0.3 * (2 * box) / model.N ** (1.0 / model.d)


def init_config(model, seed, k=0):
    """Uniform i.i.d. start on the blown-up droplet, or on the declared box otherwise."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k, 1))))
    N, d = model.N, model.d
    eq = _droplet(model)
    if eq is not None:
        direction = rng.standard_normal((N, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = eq.radius * rng.random(N) ** (1.0 / d)
        pts = direction * radius[:, None]
    else:
        box = model.W.box
        pts = rng.uniform(-box, box, size=(N, d))
    return Configuration(pts)


def _box_half(model):
    W = model.W
    if isinstance(W, Flat) and not W.clamp:
        return math.inf
    box = getattr(W, "box", None)
    return math.inf if box is None else float(box)


def _python_sweeps(state, model, normals, uniforms, box_half):
    pts = state.points
    accepted = 0
    for s in range(normals.shape[0]):
        for i in range(model.N):
            prop = pts[i] + state.sigma * normals[s, i]
            if np.any(np.abs(prop) >= box_half):
                continue
            de = energy_delta_move(model, pts, i, prop)
            if de == math.inf:
                continue
            if de <= 0 or math.log(uniforms[s, i]) < -model.beta * de:
                pts[i] = prop
                accepted += 1
    return accepted


def _advance(state, model, n_sweeps):
    """Run ``n_sweeps`` sweeps in place."""
    N, d = model.N, model.d
    box_half = _box_half(model)
    done = 0
    while done < n_sweeps:
        m = min(_BLOCK, n_sweeps - done)
        normals = state.rng.standard_normal((m, N, d))
        uniforms = state.rng.random((m, N))
        if model.compiled:
            acc = _kernels.sweeps(state.points, normals, uniforms, state.sigma, model.beta,
                                  float(model.W.quadratic_coefficient), model._charges(), box_half)
        else:
            acc = _python_sweeps(state, model, normals, uniforms, box_half)
        state.accepted += int(acc)
        state.window_accepted += int(acc)
        state.proposed += m * N
        state.window_proposed += m * N
        state.sweep += m
        done += m
    return state


def metropolis_sweep(state, model):
    """One sequential scan of ``N`` Gaussian single-particle proposals."""
    return _advance(state, model, 1)


def adapt_step(state, target=TARGET_ACCEPTANCE, rate=None):
    """Robbins-Monro update of ``log sigma`` from the current window's acceptance.

    The gain decays like ``k^{-0.6}`` in the number of adaptations ``k``.
    Call only during burn-in; the step size must stay frozen afterwards.
    """
    acc = state.window_acceptance
    if not math.isnan(acc):
        gain = rate if rate is not None else 2.0 / (1.0 + state.adaptations) ** 0.6
        state.sigma *= math.exp(gain * (acc - target))
        state.adaptations += 1
    state.window_accepted = 0
    state.window_proposed = 0
    return state


@dataclass
class SampleBatch:
    """Thinned post-burn-in configurations from one or more chains.

    ``points`` has shape ``(chains, samples, N, d)``; ``energies`` holds
    ``H`` of every stored configuration and ``sweep_index`` the sweep
    after which each sample was taken.
    """

    points: np.ndarray
    energies: np.ndarray
    sweep_index: np.ndarray
    acceptance: np.ndarray
    sigma: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.points.ndim != 4:
            raise ValueError("points must have shape (chains, samples, N, d)")

    @property
    def n_chains(self):
        return self.points.shape[0]

    @property
    def n_samples(self):
        return self.points.shape[0] * self.points.shape[1]

    @property
    def N(self):
        return self.points.shape[2]

    @property
    def d(self):
        return self.points.shape[3]

    def flat(self):
        """All stored configurations as an ``(M, N, d)`` array."""
        return self.points.reshape(-1, self.N, self.d)

    def configurations(self):
        return [Configuration(p, validate=False) for p in self.flat()]

    def __len__(self):
        return self.n_samples

    def save(self, directory):
        """Write ``manifest.json`` and one binary configuration file per chain."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for k in range(self.n_chains):
            name = f"chain_{k:03d}.bin"
            save_binary(out / name, self.points[k], seed=self.metadata.get("seed"))
            files.append(name)
        manifest = {
            "format": "gaslab-batch-v1",
            "metadata": self.metadata,
            "files": files,
            "energies": self.energies.tolist(),
            "sweep_index": self.sweep_index.tolist(),
            "acceptance": self.acceptance.tolist(),
            "sigma": self.sigma.tolist(),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2))

    @classmethod
    def load(cls, directory):
        src = Path(directory)
        manifest = json.loads((src / "manifest.json").read_text())
        points = np.stack([load_binary(src / f)[0] for f in manifest["files"]])
        return cls(points=points,
                   energies=np.asarray(manifest["energies"], dtype=float),
                   sweep_index=np.asarray(manifest["sweep_index"], dtype=int),
                   acceptance=np.asarray(manifest["acceptance"], dtype=float),
                   sigma=np.asarray(manifest["sigma"], dtype=float),
                   metadata=manifest["metadata"])


def _run_chain(model, sweeps, burn_in, thin, seed, k, sigma, adapt, deadline):
    state = ChainState(points=init_config(model, seed, k).points, rng=chain_rng(seed, k),
                       sigma=sigma if sigma is not None else default_sigma(model))
    while state.sweep < burn_in:
        _advance(state, model, min(ADAPT_WINDOW, burn_in - state.sweep))
        if adapt:
            adapt_step(state)
    state.accepted = state.proposed = 0
    state.window_accepted = state.window_proposed = 0
    n_keep = (sweeps - burn_in) // thin
    pts = np.empty((n_keep, model.N, model.d))
    energies = np.empty(n_keep)
    kept = 0
    for m in range(n_keep):
        if deadline is not None and time.monotonic() > deadline:
            break
        _advance(state, model, thin)
        pts[m] = state.points
        energies[m] = energy(model, state.points)
        kept += 1
    return pts[:kept], energies[:kept], state


def worker_count(n_chains, threads=None):
    """Pool size: ``threads`` if given, else ``GASLAB_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get("GASLAB_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(threads), n_chains))


def run(model, sweeps, burn_in=DEFAULT_BURN_IN, thin=DEFAULT_THIN, seed=0, n_chains=1, *,
        sigma=None, adapt=True, threads=None, time_budget=None):
    """Run ``n_chains`` independent chains and collect thinned samples.

    Parameters
    ----------
    model : GasModel
    sweeps : int
        Total sweeps per chain, burn-in included.
    burn_in, thin : int
        Samples are taken after sweeps ``burn_in + thin, burn_in + 2 thin, ...``.
    seed : int
        Master seed; chain ``k`` uses stream ``k`` of it.
    sigma : float, optional
        Initial proposal scale (default: a third of the interparticle spacing).
    adapt : bool
        Adapt ``sigma`` during burn-in.
    threads : int, optional
        Worker pool size, capped by ``GASLAB_THREADS`` when unset.
    time_budget : float, optional
        Seconds after which chains stop collecting. The batch is then
        truncated to the shortest chain and ``metadata["partial"]`` is set.
    """
    if not sweeps > burn_in:
        raise ValueError(f"sweeps ({sweeps}) must exceed burn_in ({burn_in})")
    if thin < 1:
        raise ValueError("thinning interval must be >= 1")
    deadline = None if time_budget is None else time.monotonic() + time_budget
    args = [(model, sweeps, burn_in, thin, seed, k, sigma, adapt, deadline)
            for k in range(n_chains)]
    workers = worker_count(n_chains, threads)
    if workers == 1:
        results = [_run_chain(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _run_chain(*a), args))
    kept = min(r[0].shape[0] for r in results)
    n_keep = (sweeps - burn_in) // thin
    states = [r[2] for r in results]
    metadata = {
        "model": model.describe(),
        "seed": int(seed),
        "sweeps": int(sweeps),
        "burn_in": int(burn_in),
        "thin": int(thin),
        "n_chains": int(n_chains),
        "samples_per_chain": int(kept),
        "acceptance": float(np.mean([s.acceptance for s in states])),
        "partial": kept < n_keep,
    }
    return SampleBatch(
        points=np.stack([r[0][:kept] for r in results]),
        energies=np.stack([r[1][:kept] for r in results]),
        sweep_index=burn_in + thin * np.arange(1, kept + 1),
        acceptance=np.array([s.acceptance for s in states]),
        sigma=np.array([s.sigma for s in states]),
        metadata=metadata,
    )


def autocorrelation_time(series, c=5.0):
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        return float("nan")
    x = x - x.mean()
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    if acf[0] == 0:
        return 1.0
    acf /= acf[0]
    tau = 2.0 * np.cumsum(acf) - 1.0
    for m in range(1, n):
        if m >= c * tau[m]:
            return float(tau[m])
    return float(tau[-1])


def effective_sample_size(series):
    return len(series) / max(autocorrelation_time(series), 1.0)
