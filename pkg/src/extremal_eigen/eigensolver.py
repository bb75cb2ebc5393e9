"""First eigenpair of L + V in the m-weighted inner product.

The generalized problem on the free vertices is

    (K + diag(V m)) u = lambda diag(m) u,

with K the stiffness operator of the form.  Symmetrizing by diag(m)^(1/2)
gives an ordinary symmetric eigenproblem; we solve it densely below a size
cutoff and by shifted inverse iteration (sparse LU, warm-startable) above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core_form import Array, DirichletFormSpec, MeasuredSpace

__all__ = ["EigenOptions", "EigenPair", "rayleigh", "lambda1"]


@dataclass
class EigenOptions:
    tol: float = 1e-10          # residual tolerance for a returned pair
    max_iter: int = 10_000      # inverse-iteration step cap
    dense_cutoff: int = 512     # free-set size up to which we use dense eigh


@dataclass
class EigenPair:
    """(lambda, u) with u m-normalized, zero on grounded vertices, sign-fixed."""

    lam: float
    u: Array
    residual: float           # m-weighted norm of (L+V)u - lambda u
    residual_alg: float       # plain 2-norm of (K + diag(Vm))u - lambda diag(m) u
    iterations: int
    converged: bool
    degenerate: bool = False  # disconnected free graph: Perron positivity waived


def _check_inputs(space: MeasuredSpace, spec: DirichletFormSpec, V, u=None):
    if space.n != spec.n:
        raise ValueError(f"space has {space.n} vertices but form has {spec.n}")
    if V is not None:
        V = np.asarray(V, dtype=float)
        if V.shape != (space.n,):
            raise ValueError(f"potential must have length {space.n}, got {V.shape}")
        if np.any(V < 0):
            raise ValueError("potential must be nonnegative")
    if u is not None:
        u = np.asarray(u, dtype=float)
        if u.shape != (space.n,):
            raise ValueError(f"function must have length {space.n}, got {u.shape}")
    return V, u


def rayleigh(space: MeasuredSpace, spec: DirichletFormSpec, V, u) -> float:
    """R_V(u) = (a[u,u] + sum V u^2 m) / (sum u^2 m)."""
    V, u = _check_inputs(space, spec, V, u)
    u = spec.member(u)
    den = float(np.sum(u * u * space.m))
    if den == 0.0:
        raise ValueError("Rayleigh quotient undefined for u = 0 on the free set")
    K = spec.stiffness()
    num = float(u @ (K @ u))
    if V is not None:
        num += float(np.sum(V * u * u * space.m))
    return num / den


def _sign_fix(u: Array) -> Array:
    k = int(np.argmax(np.abs(u)))  # ties resolve to the lowest index
    return -u if u[k] < 0 else u


def _residuals(H, mf, u, lam):
    r = H @ u - lam * (mf * u)
    res_alg = float(np.linalg.norm(r))
    res_m = float(np.sqrt(np.sum(r * r / mf)))
    return res_m, res_alg


def lambda1(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    V=None,
    opts: EigenOptions | None = None,
    v0=None,
) -> EigenPair:
    """Smallest eigenpair of (K + diag(Vm)) u = lambda diag(m) u on the free set.

    The minimum of the Rayleigh quotient over nonzero functions vanishing on
    the grounded set.  v0 warm-starts the iterative path.
    """
    opts = opts or EigenOptions()
    V, _ = _check_inputs(space, spec, V)
    free = spec.free_set
    nf = free.size
    if nf == 0:
        raise ValueError("free set is empty")
    mf = space.m[free]
    H = spec.stiffness_free().astype(float)
    if V is not None:
        H = H + sp.diags(V[free] * mf)
    H = H.tocsr()

    if nf <= opts.dense_cutoff:
        lam, uf, iters, converged = _dense_smallest(H, mf)
    else:
        w0 = None if v0 is None else np.asarray(v0, dtype=float)[free]
        lam, uf, iters, converged = _inverse_iteration(H, mf, opts, w0)

    uf = uf / np.sqrt(np.sum(uf * uf * mf))
    uf = _sign_fix(uf)
    res_m, res_alg = _residuals(H, mf, uf, lam)
    u = np.zeros(space.n)
    u[free] = uf
    return EigenPair(
        lam=float(lam),
        u=u,
        residual=res_m,
        residual_alg=res_alg,
        iterations=iters,
        converged=converged,
        degenerate=not spec.free_connected,
    )


def _dense_smallest(H, mf):
    sq = np.sqrt(mf)
    S = H.toarray() / np.outer(sq, sq)
    if S.shape[0] == 1:
        return float(S[0, 0]), np.array([1.0 / sq[0]]), 1, True
    vals, vecs = sla.eigh(S, subset_by_index=[0, 0])
    return float(vals[0]), vecs[:, 0] / sq, 1, True


def _inverse_iteration(H, mf, opts: EigenOptions, v0=None):
    """Shifted inverse power iteration on the pencil (H, diag(mf)).

    The shift starts below the spectrum (H is positive semidefinite) and is
    pulled up as the Rayleigh estimate settles; the 2*residual safety margin
    keeps it below lambda_1, so the iteration cannot lock onto an excited
    state.
    """
    nf = mf.size
    scale = float(np.max(H.diagonal() / mf)) + 1.0
    sigma = -1e-2 * scale
    M = sp.diags(mf)
    lu = spla.splu((H - sigma * M).tocsc())
    if v0 is not None and np.linalg.norm(v0) > 0:
        u = v0.astype(float)
    else:
        u = np.ones(nf)
    u = u / np.sqrt(np.sum(u * u * mf))
    lam = float(u @ (H @ u))
    for it in range(1, opts.max_iter + 1):
        w = lu.solve(mf * u)
        w = w / np.sqrt(np.sum(w * w * mf))
        lam = float(w @ (H @ w))
        res_m, res_alg = _residuals(H, mf, w, lam)
        u = w
        if max(res_m, res_alg) <= opts.tol:
            return lam, u, it, True
        if it % 20 == 0:
            margin = 2.0 * res_m + 1e-12 * (1.0 + abs(lam))
            new_sigma = lam - margin
            if new_sigma > sigma + 0.1 * margin:
                sigma = new_sigma
                lu = spla.splu((H - sigma * M).tocsc())
    return lam, u, opts.max_iter, False
