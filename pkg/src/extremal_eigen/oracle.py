"""Independent brute-force verification of extremal eigenvalue claims.

Samples potentials on the L^p sphere (maxima live there: lambda_1 is
monotone in V), takes the best eigenvalue as a lower bound on the supremum,
and cross-checks gradients by central differences.  For up to three free
vertices a dense enumeration over the sphere parameterization brackets the
supremum; its eigenvalues come from closed-form 1x1/2x2/3x3 formulas rather
than the solver's LAPACK path, so the two routes stay independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core_form import Array, DirichletFormSpec, MeasuredSpace, lp_norm
from .eigensolver import EigenOptions, lambda1
from .extremal_pgt1 import LpBudget

__all__ = [
    "SampleConfig",
    "sample_ball",
    "brute_force_sup",
    "fd_gradient",
    "grid_enumerate_sup",
]

STRATEGIES = ("random_sphere", "corners", "dirichlet_simplex", "structured")


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    count: int = 1000
    strategy: str = "random_sphere"

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; pick from {STRATEGIES}")


def _rescale_to_sphere(space, free, direction, budget):
    """Scale a nonnegative free-set direction onto the sphere ||V||_p = A."""
    V = np.zeros(space.n)
    V[free] = direction
    nrm = lp_norm(space, V, budget.p)
    if nrm == 0.0:
        raise ValueError("zero direction cannot be scaled to the sphere")
    return V * (budget.A / nrm)


def sample_ball(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    budget: LpBudget,
    config: SampleConfig,
):
    """Yield `count` nonnegative potentials with ||V||_p = A, deterministically.

    random_sphere draws generalized-Gaussian-shaped magnitudes (the density
    that makes the rescaled point uniform on the L^p sphere); corners put the
    whole budget on one vertex; dirichlet_simplex (p = 1 only) samples the
    measure-weighted probability simplex; structured sweeps scaled indicator
    windows.  At p = inf the constant potential V = A is always the first
    sample, since it dominates everything by the shift identity.
    """
    rng = np.random.default_rng(config.seed)
    free = spec.free_set
    nf = free.size
    if config.strategy == "dirichlet_simplex" and budget.p != 1:
        raise ValueError("dirichlet_simplex sampling requires p = 1")

    emitted = 0

    def finalize(V):
        nrm = lp_norm(space, V, budget.p)
        assert nrm <= budget.A * (1.0 + 1e-12), "sampler left the ball"
        return V

    if budget.p == math.inf:
        V = np.zeros(space.n)
        V[free] = budget.A
        yield finalize(V)
        emitted += 1

    while emitted < config.count:
        if config.strategy == "random_sphere":
            if budget.p == math.inf:
                d = rng.uniform(0.0, 1.0, size=nf)
            else:
                # |x| with density exp(-x^p): gamma(1/p) magnitudes
                d = rng.gamma(1.0 / budget.p, 1.0, size=nf) ** (1.0 / budget.p)
            if not np.any(d):
                continue
        elif config.strategy == "corners":
            d = np.zeros(nf)
            d[emitted % nf] = 1.0
        elif config.strategy == "dirichlet_simplex":
            y = rng.dirichlet(np.ones(nf))
            d = y / space.m[free]
        else:  # structured: indicator windows of every width and offset
            width = emitted % nf + 1
            start = (emitted // nf) % (nf - width + 1) if nf > width else 0
            d = np.zeros(nf)
            d[start : start + width] = 1.0
        yield finalize(_rescale_to_sphere(space, free, d, budget))
        emitted += 1


def _eval_chunk(args):
    space, spec, samples, offset, eigen = args
    best = (-math.inf, -1, None)
    for k, V in enumerate(samples):
        lam = lambda1(space, spec, V, eigen).lam
        if lam > best[0]:
            best = (lam, offset + k, V)
    return best


def brute_force_sup(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    budget: LpBudget,
    config: SampleConfig,
    eigen: EigenOptions | None = None,
    jobs: int = 1,
):
    """Best lambda_1 over the sample stream: a lower bound on the supremum.

    Ties break to the lowest sample index, so the result is independent of
    the number of worker processes.
    """
    eigen = eigen or EigenOptions()
    samples = list(sample_ball(space, spec, budget, config))
    if jobs <= 1:
        lam, _, V = _eval_chunk((space, spec, samples, 0, eigen))
        return lam, V
    chunk = (len(samples) + jobs - 1) // jobs
    tasks = [
        (space, spec, samples[k : k + chunk], k, eigen)
        for k in range(0, len(samples), chunk)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_eval_chunk, tasks))
    lam, _, V = max(results, key=lambda r: (r[0], -r[1]))
    return lam, V


def fd_gradient(fn, u, h: float = 1e-6) -> Array:
    """Coordinate-wise central differences (fn(u+he_i) - fn(u-he_i)) / 2h."""
    if h <= 0:
        raise ValueError("h must be positive")
    u = np.asarray(u, dtype=float)
    g = np.zeros_like(u)
    for i in range(u.size):
        up = u.copy()
        um = u.copy()
        up[i] += h
        um[i] -= h
        g[i] = (fn(up) - fn(um)) / (2.0 * h)
    return g


def _smallest_eig_batch(S0: Array, Vb: Array) -> Array:
    """Smallest eigenvalue of S0 + diag(v) for every row v of Vb (n <= 3)."""
    n = S0.shape[0]
    if n == 1:
        return S0[0, 0] + Vb[:, 0]
    if n == 2:
        a = S0[0, 0] + Vb[:, 0]
        c = S0[1, 1] + Vb[:, 1]
        b = S0[0, 1]
        mid = 0.5 * (a + c)
        return mid - np.sqrt(0.25 * (a - c) ** 2 + b * b)
    a = S0[0, 0] + Vb[:, 0]
    d = S0[1, 1] + Vb[:, 1]
    f = S0[2, 2] + Vb[:, 2]
    b, c, e = S0[0, 1], S0[0, 2], S0[1, 2]
    q = (a + d + f) / 3.0
    p2 = (a - q) ** 2 + (d - q) ** 2 + (f - q) ** 2 + 2.0 * (b * b + c * c + e * e)
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    safe = np.where(p > 0, p, 1.0)
    aa, dd, ff = (a - q) / safe, (d - q) / safe, (f - q) / safe
    bb, cc, ee = b / safe, c / safe, e / safe
    detB = aa * (dd * ff - ee * ee) - bb * (bb * ff - ee * cc) + cc * (bb * ee - dd * cc)
    r = np.clip(detB / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    return np.where(p2 > 0, lam, q)


def grid_enumerate_sup(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    budget: LpBudget,
    step: float = 1e-3,
    chunk: int = 200_000,
):
    """Dense sweep of the nonnegative L^p sphere for up to 3 free vertices.

    Directions come from a spherical-angle grid with the given step; each is
    scaled onto ||V||_p = A and the smallest eigenvalue evaluated in closed
    form.  Returns (best_lambda, best_V).
    """
    free = spec.free_set
    nf = free.size
    if nf > 3:
        raise ValueError("dense enumeration is limited to 3 free vertices")
    mf = space.m[free]
    sq = np.sqrt(mf)
    S0 = spec.stiffness_free().toarray() / np.outer(sq, sq)

    def directions():
        if nf == 1:
            yield np.ones((1, 1))
            return
        grid = np.arange(0.0, 0.5 * np.pi + step, step)
        if nf == 2:
            for lo in range(0, grid.size, chunk):
                th = grid[lo : lo + chunk]
                yield np.stack([np.cos(th), np.sin(th)], axis=1)
            return
        for th in grid:
            s, c = np.sin(th), np.cos(th)
            for lo in range(0, grid.size, chunk):
                ph = grid[lo : lo + chunk]
                yield np.stack(
                    [s * np.cos(ph), s * np.sin(ph), np.full(ph.size, c)], axis=1
                )

    best_lam = -math.inf
    best_dir = None
    for D in directions():
        D = np.abs(D)
        if budget.p == math.inf:
            nrm = np.max(D, axis=1)
        else:
            nrm = np.einsum("ij,j->i", D ** budget.p, mf) ** (1.0 / budget.p)
        keep = nrm > 0
        Vb = budget.A * D[keep] / nrm[keep, None]
        lams = _smallest_eig_batch(S0, Vb)
        k = int(np.argmax(lams))
        if lams[k] > best_lam:
            best_lam = float(lams[k])
            best_dir = Vb[k]
    V = np.zeros(space.n)
    V[free] = best_dir
    return best_lam, V
