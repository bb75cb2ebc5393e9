"""Finite measured spaces and discrete Dirichlet forms on weighted graphs.

A space is a finite vertex set with strictly positive measure weights m_i.
A form is a weighted edge list plus a set of grounded (Dirichlet) vertices
on which functions are pinned to zero.  The bilinear form is

    a[u, v] = sum_edges w_ij (u_i - u_j)(v_i - v_j),

which is symmetric, nonnegative, and Markovian (clamping to [0, 1] never
increases energy).  The per-edge products are the discrete energy measure:
they sum to a[u, v] and vanish on any edge where u is locally constant.

Grounded vertices are pinned rather than deleted, so index bookkeeping is
uniform; since admissible functions and potentials vanish there, grounded
vertices contribute nothing to the weighted norms used by the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

Array = np.ndarray


def _as_float_vector(values, name: str) -> Array:
    out = np.asarray(values, dtype=float)
    if out.ndim != 1:
        raise ValueError(f"{name} must be a 1-D sequence, got shape {out.shape}")
    return out


@dataclass(eq=False)
class MeasuredSpace:
    """Finite vertex set with strictly positive measure weights."""

    m: Array
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.m = _as_float_vector(self.m, "m")
        if self.m.size < 1:
            raise ValueError("a measured space needs at least one vertex")
        if not np.all(np.isfinite(self.m)) or not np.all(self.m > 0):
            raise ValueError("measure weights must be finite and strictly positive")
        if self.labels is not None and len(self.labels) != self.m.size:
            raise ValueError("labels length must match vertex count")

    @property
    def n(self) -> int:
        return self.m.size

    def total_measure(self, indices=None) -> float:
        """m(S) for a vertex subset (whole space by default)."""
        if indices is None:
            return float(np.sum(self.m))
        return float(np.sum(self.m[np.asarray(indices, dtype=int)]))


@dataclass(eq=False)
class DirichletFormSpec:
    """Weighted edge list plus grounded vertex set; induces a[u,v] and L.

    Edges are (i, j, w) with i != j and conductance w > 0.  The stiffness
    operator K (graph Laplacian of the weights) satisfies a[u,v] = u.K v.
    """

    n: int
    edges: list
    dirichlet: frozenset = frozenset()

    edge_i: Array = field(init=False, repr=False)
    edge_j: Array = field(init=False, repr=False)
    edge_w: Array = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one vertex")
        edges = list(self.edges)
        if edges:
            ei = np.asarray([e[0] for e in edges], dtype=int)
            ej = np.asarray([e[1] for e in edges], dtype=int)
            ew = np.asarray([e[2] for e in edges], dtype=float)
        else:
            ei = np.zeros(0, dtype=int)
            ej = np.zeros(0, dtype=int)
            ew = np.zeros(0, dtype=float)
        if ei.size and (ei.min() < 0 or ej.min() < 0 or ei.max() >= self.n or ej.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        if np.any(ei == ej):
            raise ValueError("self-loops are not allowed")
        if np.any(~np.isfinite(ew)) or np.any(ew <= 0):
            raise ValueError("edge conductances must be finite and positive")
        self.edge_i, self.edge_j, self.edge_w = ei, ej, ew
        self.dirichlet = frozenset(int(d) for d in self.dirichlet)
        for d in self.dirichlet:
            if d < 0 or d >= self.n:
                raise ValueError(f"dirichlet vertex {d} out of range")
        if len(self.dirichlet) == self.n:
            raise ValueError("grounding every vertex leaves no degrees of freedom")
        self._dirichlet_arr = np.array(sorted(self.dirichlet), dtype=int)
        free_mask = np.ones(self.n, dtype=bool)
        free_mask[self._dirichlet_arr] = False
        self._free_mask = free_mask
        self._free = np.nonzero(free_mask)[0]
        self._stiffness = self._assemble_stiffness()
        self._free_components = self._count_free_components()

    def _assemble_stiffness(self) -> sp.csr_matrix:
        i, j, w = self.edge_i, self.edge_j, self.edge_w
        rows = np.concatenate([i, j, i, j])
        cols = np.concatenate([i, j, j, i])
        vals = np.concatenate([w, w, -w, -w])
        K = sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        return K.tocsr()

    def _count_free_components(self) -> int:
        keep = self._free_mask[self.edge_i] & self._free_mask[self.edge_j]
        pos = np.full(self.n, -1, dtype=int)
        pos[self._free] = np.arange(self._free.size)
        i = pos[self.edge_i[keep]]
        j = pos[self.edge_j[keep]]
        nf = self._free.size
        adj = sp.coo_matrix((np.ones(i.size), (i, j)), shape=(nf, nf))
        ncomp, _ = csgraph.connected_components(adj, directed=False)
        return int(ncomp)

    @property
    def dirichlet_set(self) -> Array:
        return self._dirichlet_arr

    @property
    def free_set(self) -> Array:
        """Indices of vertices not pinned to zero."""
        return self._free

    @property
    def free_mask(self) -> Array:
        return self._free_mask

    @property
    def n_free(self) -> int:
        return self._free.size

    @property
    def free_connected(self) -> bool:
        return self._free_components <= 1

    def stiffness(self) -> sp.csr_matrix:
        """Full n-by-n stiffness operator K with a[u,v] = u.K v."""
        return self._stiffness

    def stiffness_free(self) -> sp.csr_matrix:
        """K restricted to free rows and columns.

        Edges into grounded vertices survive on the diagonal, which is what
        pinning (rather than deleting) boundary vertices means.
        """
        f = self._free
        return self._stiffness[f][:, f].tocsr()

    def member(self, values) -> Array:
        """Canonical injection into the form domain: zero out grounded entries."""
        u = _as_float_vector(values, "u").copy()
        if u.size != self.n:
            raise ValueError(f"dimension mismatch: expected {self.n} values, got {u.size}")
        u[self._dirichlet_arr] = 0.0
        return u


def _check_dims(spec: DirichletFormSpec, *vectors) -> None:
    for u in vectors:
        if np.asarray(u).shape != (spec.n,):
            raise ValueError(
                f"dimension mismatch: expected length {spec.n}, got shape {np.asarray(u).shape}"
            )


def a_form(spec: DirichletFormSpec, u, v) -> float:
    """Evaluate a[u,v] = sum_edges w (u_i - u_j)(v_i - v_j).

    Computed as the sum of the per-edge energies, so it is exactly symmetric
    in (u, v) and exactly consistent with edge_energy.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(spec, u, v)
    return float(np.sum(edge_energy(spec, u, v)))


def edge_energy(spec: DirichletFormSpec, u, v) -> Array:
    """Per-edge energies w (u_i - u_j)(v_i - v_j), the discrete energy measure.

    Edges interior to a region where u is constant carry exactly zero,
    whatever v does (locality of the energy measure).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(spec, u, v)
    du = u[spec.edge_i] - u[spec.edge_j]
    dv = v[spec.edge_i] - v[spec.edge_j]
    # grouping (du*dv) first keeps the energy exactly symmetric in (u, v)
    return spec.edge_w * (du * dv)


def lp_norm(space: MeasuredSpace, u, p) -> float:
    """m-weighted L^p norm; plain sup-norm at p = infinity.

    Scaled by max|u| before powering so that large exponents (p = 2q with q
    near 1/(p-1) blowing up) neither overflow nor underflow.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (space.n,):
        raise ValueError(f"dimension mismatch: expected length {space.n}, got {u.shape}")
    if p != math.inf and p < 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    absu = np.abs(u)
    if p == math.inf:
        return float(absu.max()) if absu.size else 0.0
    umax = float(absu.max())
    if umax == 0.0:
        return 0.0
    return umax * float(np.sum((absu / umax) ** p * space.m)) ** (1.0 / p)


def clamp_unit(u) -> Array:
    """Pointwise min{1, max{u, 0}}; never increases form energy (Markov property)."""
    return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


def _positive_at(fn, x, what: str) -> float:
    val = float(fn(x))
    if not np.isfinite(val) or val <= 0:
        raise ValueError(f"{what} must be strictly positive, got {val} at {x}")
    return val


def build_path(n: int, weight_fn=None, m_fn=None, grounded_ends: bool = False):
    """Path graph on vertices 0..n-1 with unit spacing.

    weight_fn is sampled at edge midpoints i + 1/2, m_fn at vertices;
    both default to 1.  With grounded_ends the two endpoints are pinned.
    """
    if grounded_ends and n < 3:
        raise ValueError("a path with both ends grounded needs n >= 3")
    if n < 2:
        raise ValueError("a path needs n >= 2")
    weight_fn = weight_fn or (lambda x: 1.0)
    m_fn = m_fn or (lambda x: 1.0)
    m = np.array([_positive_at(m_fn, i, "vertex measure") for i in range(n)])
    edges = [(i, i + 1, _positive_at(weight_fn, i + 0.5, "edge weight")) for i in range(n - 1)]
    dirichlet = frozenset({0, n - 1}) if grounded_ends else frozenset()
    return MeasuredSpace(m), DirichletFormSpec(n, edges, dirichlet)


def build_grid2d(nx: int, ny: int, coeff_fn=None, m_fn=None, grounded_boundary: bool = False):
    """5-point-stencil grid on nx-by-ny vertices with unit spacing.

    coeff_fn(x, y) is sampled at edge midpoints, m_fn(x, y) at vertices;
    both default to 1.  Vertex (ix, iy) has index ix*ny + iy.
    """
    if nx < 2 or ny < 2:
        raise ValueError("a 2-D grid needs nx, ny >= 2")
    if grounded_boundary and (nx < 3 or ny < 3):
        raise ValueError("grounding the boundary of a grid needs nx, ny >= 3")
    coeff_fn = coeff_fn or (lambda x, y: 1.0)
    m_fn = m_fn or (lambda x, y: 1.0)

    def idx(ix, iy):
        return ix * ny + iy

    n = nx * ny
    m = np.empty(n)
    for ix in range(nx):
        for iy in range(ny):
            val = float(m_fn(ix, iy))
            if not np.isfinite(val) or val <= 0:
                raise ValueError(f"vertex measure must be strictly positive, got {val}")
            m[idx(ix, iy)] = val
    edges = []
    for ix in range(nx):
        for iy in range(ny):
            if ix + 1 < nx:
                w = float(coeff_fn(ix + 0.5, iy))
                if not np.isfinite(w) or w <= 0:
                    raise ValueError("grid coefficient must be strictly positive")
                edges.append((idx(ix, iy), idx(ix + 1, iy), w))
            if iy + 1 < ny:
                w = float(coeff_fn(ix, iy + 0.5))
                if not np.isfinite(w) or w <= 0:
                    raise ValueError("grid coefficient must be strictly positive")
                edges.append((idx(ix, iy), idx(ix, iy + 1), w))
    dirichlet = frozenset()
    if grounded_boundary:
        dirichlet = frozenset(
            idx(ix, iy)
            for ix in range(nx)
            for iy in range(ny)
            if ix in (0, nx - 1) or iy in (0, ny - 1)
        )
    return MeasuredSpace(m), DirichletFormSpec(n, edges, dirichlet)


def build_interval_fd(n: int, a_coeff_fn=None, k_fn=None):
    """Finite differences for -(a u')' with measure k^2 dx on [0, 1].

    n vertices including both endpoints, which are always grounded;
    edge weights a(midpoint)/h, vertex measures k(x)^2 h.
    """
    if n < 3:
        raise ValueError("an interval discretization needs n >= 3")
    a_coeff_fn = a_coeff_fn or (lambda x: 1.0)
    k_fn = k_fn or (lambda x: 1.0)
    h = 1.0 / (n - 1)
    xs = np.linspace(0.0, 1.0, n)
    m = np.empty(n)
    for i, x in enumerate(xs):
        k = float(k_fn(x))
        if not np.isfinite(k) or k <= 0:
            raise ValueError(f"measure density must be strictly positive, got {k} at x={x}")
        m[i] = k * k * h
    edges = []
    for i in range(n - 1):
        a = _positive_at(a_coeff_fn, 0.5 * (xs[i] + xs[i + 1]), "diffusion coefficient")
        edges.append((i, i + 1, a / h))
    return MeasuredSpace(m), DirichletFormSpec(n, edges, frozenset({0, n - 1}))
