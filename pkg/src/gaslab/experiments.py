"""The four canonical experiments: gaps, overcrowding tails, pair repulsion, discrepancy.

Each runner samples the blown-up quadratic gas described by a parsed
configuration, writes CSV tables into the output directory and returns a
JSON-friendly summary. Column names are fixed per table version
(``CSV_SCHEMA``) so downstream plotting can rely on them.
"""

from __future__ import annotations

import csv
import math
import time

import numpy as np
from scipy.special import gammainc

from . import bounds, stats
from .gas import BlownUp, GasModel, RadialQuadratic, equilibrium
from .sampler import run

CSV_SCHEMA = {
    "gaps_N{N}.csv": ["config", "eta_k", "scaled_eta_k"],
    "gaps_summary.csv": ["N", "samples", "median_scaled", "mean_scaled", "ks_limit", "acceptance"],
    "tail.csv": ["Q", "estimate", "ci_low", "ci_high", "successes", "n", "bound", "bound_valid"],
    "pair_correlation.csv": ["edge_lo", "edge_hi", "count", "value"],
    "one_point_density.csv": ["x", "y", "count", "value"],
    "discrepancy.csv": ["R", "samples", "mean", "variance", "variance_over_volume",
                        "variance_se", "fluct_variance", "threshold_T1", "tail_T1", "bound_T1"],
}
CSV_VERSION = 1


def gap_limit_cdf(y, k=1, scale=4 ** 0.25):
    """Limiting CDF of ``N^{1/4} eta_k`` for the planar gas at ``beta = 2``.

    Pairs closer than ``y`` form asymptotically a Poisson family with mean
    ``(y / scale)^4``, so ``P(N^{1/4} eta_k <= y) = P(Poisson >= k)``, the
    law with density proportional to ``x^{4k-1} e^{-x^4}`` in ``x = y / scale``.
    The default scale ``4^{1/4}`` is exact for ``V = |x|^2 / 2``, where the
    pair function is ``pi^{-2} (1 - e^{-r^2})``.
    """
    x = np.asarray(y, dtype=float) / scale
    return gammainc(k, x ** 4)


def ks_distance(samples, cdf):
    """Two-sided Kolmogorov-Smirnov distance between samples and a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def model_for(config, N):
    m = config["model"]
    return GasModel(d=m["d"], beta=m["beta"], N=N, W=BlownUp(RadialQuadratic(m["c"]), N))


def _Ns(config):
    N = config["model"]["N"]
    return N if isinstance(N, list) else [N]


def _Rs(config):
    R = config["experiment"]["R"]
    return R if isinstance(R, list) else [R]


class Context:
    """Seed, chain count and time budget shared by one experiment run."""

    def __init__(self, config, seed=None, chains=None, threads=None):
        s = config["sampler"]
        self.config = config
        self.seed = s["seed"] if seed is None else seed
        self.chains = s["chains"] if chains is None else chains
        self.threads = threads
        self.deadline = None if s.get("time_budget") is None else time.monotonic() + s["time_budget"]
        self.partial = False
        self.warnings = []

    def sample(self, model, offset=0):
        s = self.config["sampler"]
        budget = None if self.deadline is None else max(self.deadline - time.monotonic(), 0.0)
        batch = run(model, s["sweeps"], s["burn_in"], s["thin"], seed=self.seed + offset,
                    n_chains=self.chains, sigma=s.get("sigma"), threads=self.threads,
                    time_budget=budget)
        if batch.metadata["partial"]:
            self.partial = True
            self.warnings.append(f"time budget exhausted at N={model.N}: "
                                 f"{batch.metadata['samples_per_chain']} samples per chain")
        return batch


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def bulk_centers(eqm, R, fraction=0.6):
    """Centres of disjoint radius-``R`` balls on a square grid inside the bulk probe."""
    reach = fraction * eqm.radius - R
    if reach < 0:
        return np.zeros((1, eqm.d))
    ticks = np.arange(-math.floor(reach / (2 * R)), math.floor(reach / (2 * R)) + 1) * 2 * R
    grid = np.stack(np.meshgrid(*[ticks] * eqm.d, indexing="ij"), -1).reshape(-1, eqm.d)
    return grid[np.linalg.norm(grid, axis=1) <= reach]


def ball_counts(points, centers, R):
    """``X(B_R(z))`` for every configuration (rows) and centre (columns)."""
    pts = np.asarray(points)
    out = np.empty((pts.shape[0], len(centers)), dtype=int)
    for j, z in enumerate(centers):
        out[:, j] = np.sum(np.linalg.norm(pts - z, axis=-1) < R, axis=-1)
    return out


def log_concave_in_q(log_p):
    """Concavity of a sequence on the extended reals.

    Zero probabilities (``-inf``) are allowed only as a tail; the finite part
    must have nonpositive second differences.
    """
    lp = np.asarray(log_p, dtype=float)
    finite = np.isfinite(lp)
    if finite.any():
        last = np.flatnonzero(finite)[-1]
        if not finite[: last + 1].all():
            return False
    f = lp[finite]
    return bool(np.all(np.diff(f, 2) <= 1e-12)) if f.size >= 3 else True


# ---------------------------------------------------------------------------


def run_gaps(ctx, out):
    cfg = ctx.config
    k = cfg["experiment"]["k"]
    beta = cfg["model"]["beta"]
    rows = []
    files = []
    for n, N in enumerate(_Ns(cfg)):
        model = model_for(cfg, N)
        batch = ctx.sample(model, offset=n)
        gaps = stats.eta_k_batch(batch, k)
        scale = N ** (1.0 / (2 + beta))
        name = f"gaps_N{N}.csv"
        _write(out / name, CSV_SCHEMA["gaps_N{N}.csv"],
               [(m, g, scale * g) for m, g in enumerate(gaps)])
        files.append(name)
        scaled = scale * gaps
        ks = ks_distance(scaled, lambda y: gap_limit_cdf(y, k)) \
            if cfg["model"]["d"] == 2 and beta == 2 else float("nan")
        rows.append((N, len(gaps), float(np.median(scaled)), float(np.mean(scaled)), ks,
                     float(np.mean(batch.acceptance))))
    _write(out / "gaps_summary.csv", CSV_SCHEMA["gaps_summary.csv"], rows)
    files.append("gaps_summary.csv")
    medians = [r[2] for r in rows]
    spread = (max(medians) - min(medians)) / float(np.mean(medians))
    return files, {"medians": dict(zip([str(r[0]) for r in rows], medians)),
                   "median_spread": spread, "ks_limit": {str(r[0]): r[4] for r in rows}}


def run_jlm(ctx, out):
    cfg = ctx.config
    e = cfg["experiment"]
    d, beta = cfg["model"]["d"], cfg["model"]["beta"]
    R = _Rs(cfg)[0]
    N = _Ns(cfg)[0]
    model = model_for(cfg, N)
    batch = ctx.sample(model)
    eqm = equilibrium(model)
    centers = bulk_centers(eqm, R, e["probe_fraction"])
    counts = ball_counts(batch.flat(), centers, R)
    rows = []
    tails = []
    for Q in e["Q"]:
        t = stats.tail_probability(None, (counts >= Q).ravel())
        b = bounds.jlm_bound(d, beta, R, Q, e["lam"], e["C"])
        tails.append(t)
        rows.append((Q, t.estimate, t.ci_low, t.ci_high, t.successes, t.n, b.value,
                     int(b.valid)))
    _write(out / "tail.csv", CSV_SCHEMA["tail.csv"], rows)
    with np.errstate(divide="ignore"):
        log_p = np.log([t.estimate for t in tails])
    calibrated = bounds.calibrate_jlm(d, beta, R, [(Q, t.ci_high) for Q, t in zip(e["Q"], tails)],
                                      e["lam"]) if d == 2 else None
    return ["tail.csv"], {
        "N": N, "R": R, "balls_per_config": len(centers),
        "log_concave": log_concave_in_q(log_p),
        "below_bound": all(r[1] <= r[6] for r in rows),
        "calibrated_C": calibrated,
    }


def run_kpoint(ctx, out):
    cfg = ctx.config
    e = cfg["experiment"]
    N = _Ns(cfg)[0]
    model = model_for(cfg, N)
    batch = ctx.sample(model)
    eqm = equilibrium(model)
    edges = stats.log_edges(e["r_min"], e["r_max"], e["bins"])
    probe = stats.Ball((0.0,) * model.d, e["probe_fraction"] * eqm.radius)
    hist = stats.pair_correlation(batch, edges, probe)
    stats.write_histogram_csv(out / "pair_correlation.csv", hist)
    slope = stats.log_log_slope(hist, e["fit_lo"], e["fit_hi"])
    files = ["pair_correlation.csv"]
    summary = {"N": N, "slope": slope, "beta": cfg["model"]["beta"],
               "slope_lsq": stats.log_log_slope(hist, e["fit_lo"], e["fit_hi"], method="lsq")}
    if model.d == 2:
        h = e["grid_step"]
        half = h * math.ceil((eqm.radius + 4.0) / h)
        grid = np.arange(-half, half + h / 2, h)
        dens = stats.one_point_density(batch, grid)
        cx, cy = dens.centers()
        _write(out / "one_point_density.csv", CSV_SCHEMA["one_point_density.csv"],
               [(x, y, int(c), v) for x, y, c, v in
                zip(cx.ravel(), cy.ravel(), dens.counts.ravel(), dens.values.ravel())])
        files.append("one_point_density.csv")
        bulk = np.hypot(cx, cy) + h / math.sqrt(2) <= e["probe_fraction"] * eqm.radius
        summary.update(bulk_mean_density=float(dens.values[bulk].mean()),
                       bulk_max_density=float(dens.values[bulk].max()),
                       equilibrium_density=eqm.density, integral=dens.integral())
    return files, summary


def run_discrepancy(ctx, out):
    cfg = ctx.config
    d = cfg["model"]["d"]
    N = _Ns(cfg)[0]
    model = model_for(cfg, N)
    batch = ctx.sample(model)
    eqm = equilibrium(model)
    configs = batch.flat()
    origin = np.zeros(d)
    rows = []
    for R in _Rs(cfg):
        ball = stats.Ball(origin, R)
        disc = np.array([stats.discrepancy(p, eqm, ball) for p in configs], dtype=float)
        xi = stats.TestFunction(R, 0.5)
        fl = np.array([stats.fluct(p, eqm, xi, origin) for p in configs])
        var = float(np.var(disc, ddof=1))
        n = disc.size
        # standard error of the sample variance from the fourth central moment
        m4 = float(np.mean((disc - disc.mean()) ** 4))
        se = math.sqrt(max(m4 - var * var * (n - 3) / (n - 1), 0.0) / n)
        Rb = max(R, 1.0)
        bound, thr = bounds.incompressibility_bound(d, Rb, 1.0)
        tail = float(np.mean(disc >= thr))
        rows.append((R, n, float(disc.mean()), var, var / ball.volume(), se, float(np.var(fl, ddof=1)),
                     thr, tail, bound))
    _write(out / "discrepancy.csv", CSV_SCHEMA["discrepancy.csv"], rows)
    ratios = [r[4] for r in rows]
    return ["discrepancy.csv"], {
        "N": N, "variance_over_volume": dict(zip([str(r[0]) for r in rows], ratios)),
        "strictly_decreasing": bool(all(b < a for a, b in zip(ratios, ratios[1:]))),
    }


RUNNERS = {"gaps": run_gaps, "jlm": run_jlm, "kpoint": run_kpoint, "discrepancy": run_discrepancy}
