"""The p = 1 case: box-constrained ratio minimization and coincidence sets.

Minimizes T(v) = (a[v,v] + A) / ||v||_2^2 over K = {|v| <= 1} by Dinkelbach
iteration: each subproblem min a[v,v] + A - lambda ||v||_2^2 over K is a
box-constrained quadratic solved by projected gradient with clamp projection.
The minimizer touches the box on the coincidence set I = {u = 1}, carrying
the extremal potential (A/m(I)) chi_I.

At a finite resolution the contact boundary carries a strictly positive
reaction sum_I (K u)_i = lambda m(I) - A, so the continuum identities
A = lambda m(I) and lambda_1(V~) = A/m(I) hold only up to that defect; the
certificate measures them faithfully and raises a regime warning instead of
papering over the gap.  (On an ungrounded space the minimizer is constant,
the reaction vanishes, and the identities are exact.)

The general obstacle problem a[u, v-u] >= <f, v-u> over {v >= psi} is
solved by the same projected-gradient kernel with a one-sided projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import Certificate
from .core_form import (
    Array,
    DirichletFormSpec,
    MeasuredSpace,
    a_form,
    edge_energy,
    lp_norm,
)
from .eigensolver import EigenOptions, lambda1, rayleigh
from .extremal_pgt1 import ExtremalResult, LpBudget, j_value

__all__ = [
    "P1Options",
    "ObstacleOptions",
    "CoincidenceSet",
    "ObstacleProblemInput",
    "ComplementarityReport",
    "t_value",
    "projected_gradient_quadratic",
    "minimize_t",
    "variational_inequality_residual",
    "coincidence_set",
    "complementarity_check",
    "solve_p1",
    "solve_obstacle",
]


@dataclass
class P1Options:
    max_outer: int = 200        # Dinkelbach updates
    max_inner: int = 200_000    # projected-gradient steps per subproblem
    tol_lambda: float = 1e-12   # relative stagnation of the ratio value
    tol_inner: float = 1e-13    # sup-norm iterate change in the subproblem
    tol_I: float = 1e-8         # coincidence threshold u >= 1 - tol_I
    n_probes: int = 100         # random box points for the VI residual
    seed: int = 0
    eigen: EigenOptions = field(default_factory=EigenOptions)


@dataclass
class ObstacleOptions:
    max_iter: int = 500_000
    tol: float = 1e-12


@dataclass
class CoincidenceSet:
    """Vertices where the box binds, with their total measure."""

    indices: Array
    measure: float
    tol: float

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass
class ObstacleProblemInput:
    """Lower obstacle psi and forcing f, f paired against the m-weighted product."""

    psi: Array
    f: Array


@dataclass
class ComplementarityReport:
    """Row-wise eigen-equation / harmonicity residuals split by contact status."""

    scale: float
    off_residual: float          # max |(Ku)_i - lam m_i u_i| off the contact set
    on_residual: float           # max |(Ku)_i| on the contact set (boundary included)
    on_interior_residual: float  # same, contact vertices with all neighbours in contact
    reaction: float              # sum_I (Ku)_i, the discrete contact reaction
    energy_interior: float       # max |edge energy| on edges interior to the contact set
    tol_factor: float = 1e-7

    @property
    def off_passed(self) -> bool:
        return self.off_residual <= self.tol_factor * self.scale

    @property
    def on_passed(self) -> bool:
        return self.on_residual <= self.tol_factor * self.scale

    @property
    def energy_passed(self) -> bool:
        return self.energy_interior == 0.0

    def to_jsonable(self) -> dict:
        return {
            "scale": self.scale,
            "off_residual": self.off_residual,
            "on_residual": self.on_residual,
            "on_interior_residual": self.on_interior_residual,
            "reaction": self.reaction,
            "energy_interior": self.energy_interior,
            "off_passed": self.off_passed,
            "on_passed": self.on_passed,
            "energy_passed": self.energy_passed,
        }


def t_value(space: MeasuredSpace, spec: DirichletFormSpec, A: float, v) -> float:
    """T(v) = (a[v,v] + A) / ||v||_2^2 for v in the box |v| <= 1."""
    if A < 0:
        raise ValueError("budget A must be nonnegative")
    v = spec.member(v)
    if float(np.max(np.abs(v))) > 1.0 + 1e-12:
        raise ValueError("v violates the box constraint |v| <= 1 beyond 1e-12")
    den = float(np.sum(v * v * space.m))
    if den == 0.0:
        raise ValueError("T is undefined for v = 0 on the free set")
    return (a_form(spec, v, v) + A) / den


def projected_gradient_quadratic(
    hess_mul,
    lin,
    project,
    v0: Array,
    lipschitz: float,
    max_iter: int,
    tol: float,
    record_objective: bool = False,
):
    """Minimize 1/2 v.H v - lin.v over a convex set by projected gradient.

    Fixed step 1/lipschitz with lipschitz >= ||H||; each step is then
    guaranteed not to increase the objective, convex or not.  Returns
    (v, info) where info carries the iteration count, the final projected
    gradient step length, and per-step objectives when requested.
    """
    step = 1.0 / lipschitz
    v = project(v0.copy())

    def objective(x):
        return 0.5 * float(x @ hess_mul(x)) - float(lin @ x)

    objs = [objective(v)] if record_objective else None
    change = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = hess_mul(v) - lin
        v_new = project(v - step * g)
        change = float(np.max(np.abs(v_new - v)))
        v = v_new
        if record_objective:
            objs.append(objective(v))
        if change <= tol:
            break
    info = {"iterations": it, "last_change": change, "step": step}
    if record_objective:
        info["objectives"] = objs
    return v, info


def _box_subproblem(space, spec, lam, v0, opts, record=False):
    """min a[v,v] - lam ||v||_2^2 over the box, free coordinates only."""
    free = spec.free_set
    Kf = spec.stiffness_free()
    mf = space.m[free]
    # Gershgorin: row sums of K are at most twice the diagonal
    lip = 2.0 * (2.0 * float(Kf.diagonal().max(initial=0.0)) + lam * float(mf.max()))
    lip = max(lip, 1e-12)

    def hess_mul(x):
        return 2.0 * (Kf @ x - lam * mf * x)

    def project(x):
        return np.clip(x, -1.0, 1.0)

    vf, info = projected_gradient_quadratic(
        hess_mul,
        np.zeros(free.size),
        project,
        v0[free],
        lip,
        opts.max_inner,
        opts.tol_inner,
        record_objective=record,
    )
    v = np.zeros(space.n)
    v[free] = vf
    return v, info


def minimize_t(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    A: float,
    opts: P1Options | None = None,
    record_inner: bool = False,
):
    """Dinkelbach iteration for min T over the box; returns (u, lambda, trace).

    The iterate is replaced by its absolute value every outer step, so the
    output is nonnegative with sup-norm one (the ratio always scales up to
    the box).
    """
    opts = opts or P1Options()
    if A <= 0:
        raise ValueError("budget A must be positive")
    if spec.n_free == 0:
        raise ValueError("free set is empty")

    base = lambda1(space, spec, None, opts.eigen)
    u = np.abs(base.u)
    u = u / float(np.max(u)) if np.max(u) > 0 else spec.member(np.ones(space.n))
    lam = t_value(space, spec, A, u)
    lam_hist = [lam]
    inner_info = []
    converged = False
    outer = 0
    for outer in range(1, opts.max_outer + 1):
        v, info = _box_subproblem(space, spec, lam, u, opts, record=record_inner and outer == 1)
        inner_info.append(info)
        u_new = np.abs(v)
        if not np.any(u_new):
            u_new = u  # subproblem collapsed; keep the previous iterate
        lam_new = t_value(space, spec, A, u_new)
        lam_hist.append(lam_new)
        done = abs(lam_new - lam) <= opts.tol_lambda * (1.0 + abs(lam))
        u, lam = u_new, lam_new
        if done:
            converged = True
            break
    trace = {
        "lambda_history": lam_hist,
        "outer_iterations": outer,
        "inner": inner_info,
        "converged": converged,
    }
    return u, lam, trace


def _probe_corners(nf, rng, limit=12, n_seeded=256):
    if nf <= limit:
        for bits in range(2 ** nf):
            yield np.array([1.0 if bits >> k & 1 else -1.0 for k in range(nf)])
    else:
        for _ in range(n_seeded):
            yield rng.choice([-1.0, 1.0], size=nf)


def variational_inequality_residual(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    u,
    lam: float,
    n_probes: int = 100,
    seed: int = 0,
) -> dict:
    """Minimum first-order slack a[u, v-u] - lam (u, v-u)_m over probes v in K.

    Probes: the box corners (all of them up to 12 free vertices, 256 seeded
    random corners above), u +/- coordinate bumps clipped to the box, random
    box points, and u itself.  Also reports the weaker a[v, v-u] form, which
    dominates the first for symmetric nonnegative forms.
    """
    u = spec.member(u)
    if float(np.max(np.abs(u))) > 1.0 + 1e-12:
        raise ValueError("u violates the box constraint")
    free = spec.free_set
    nf = free.size
    rng = np.random.default_rng(seed)
    K = spec.stiffness()
    g = (K @ u - lam * u * space.m)[free]  # slack_u(v) = g . (v - u) on free coords

    def embed(vf):
        v = np.zeros(space.n)
        v[free] = vf
        return v

    probes = [u[free].copy()]
    probes.extend(_probe_corners(nf, rng))
    for i in range(nf):
        for delta in (1.0, -1.0):
            vf = u[free].copy()
            vf[i] = np.clip(vf[i] + delta, -1.0, 1.0)
            probes.append(vf)
    for _ in range(n_probes):
        probes.append(rng.uniform(-1.0, 1.0, size=nf))

    min_u_form = math.inf
    min_v_form = math.inf
    for vf in probes:
        d = vf - u[free]
        slack_u = float(g @ d)
        v_full = embed(vf)
        slack_v = float(v_full @ (K @ (v_full - u))) - lam * float(np.sum(u * (v_full - u) * space.m))
        min_u_form = min(min_u_form, slack_u)
        min_v_form = min(min_v_form, slack_v)
    return {
        "min_slack": min_u_form,
        "min_slack_weak_form": min_v_form,
        "n_probes": len(probes),
        "seed": seed,
    }


def coincidence_set(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    u,
    tol_I: float = 1e-8,
) -> CoincidenceSet:
    """I = {free i : u_i >= 1 - tol_I} with its measure m(I)."""
    u = spec.member(u)
    free = spec.free_set
    idx = free[u[free] >= 1.0 - tol_I]
    return CoincidenceSet(indices=idx, measure=space.total_measure(idx), tol=tol_I)


def complementarity_check(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    u,
    I,
    lam: float,
    seed: int = 0,
) -> ComplementarityReport:
    """Row-wise contact dichotomy: eigen-equation off I, harmonicity on I.

    Off the contact set the stationarity (K u)_i = lam m_i u_i holds to
    solver precision.  On it the continuum theory predicts (K u)_i = 0;
    discretely that is exact on the interior of I while contact-boundary
    rows carry the positive reaction w (1 - u_neighbour), which is reported
    rather than hidden.  Edges interior to I carry exactly zero energy
    against any probe (u is constant there).
    """
    u = spec.member(u)
    indices = I.indices if isinstance(I, CoincidenceSet) else np.asarray(I, dtype=int)
    on_mask = np.zeros(space.n, dtype=bool)
    on_mask[indices] = True
    free = spec.free_set
    Ku = spec.stiffness() @ u
    # row scale of the balanced equation; the lam m u floor keeps the check
    # meaningful when K u is pure cancellation noise (constant minimizers)
    scale = max(
        float(np.max(np.abs(Ku[free]))),
        abs(lam) * float(np.max(space.m[free] * np.abs(u[free]))),
    )

    off_free = free[~on_mask[free]]
    off_res = float(np.max(np.abs(Ku[off_free] - lam * space.m[off_free] * u[off_free]))) if off_free.size else 0.0
    on_res = float(np.max(np.abs(Ku[indices]))) if indices.size else 0.0

    # interior of I: contact vertices all of whose neighbours are in contact
    has_outside = np.zeros(space.n, dtype=bool)
    cross = on_mask[spec.edge_i] != on_mask[spec.edge_j]
    has_outside[spec.edge_i[cross]] = True
    has_outside[spec.edge_j[cross]] = True
    interior = indices[~has_outside[indices]] if indices.size else indices
    on_int_res = float(np.max(np.abs(Ku[interior]))) if interior.size else 0.0

    reaction = float(np.sum(Ku[indices])) if indices.size else 0.0

    rng = np.random.default_rng(seed)
    probe = spec.member(rng.standard_normal(space.n))
    energies = edge_energy(spec, u, probe)
    inside = on_mask[spec.edge_i] & on_mask[spec.edge_j]
    energy_int = float(np.max(np.abs(energies[inside]))) if inside.any() else 0.0

    return ComplementarityReport(
        scale=scale,
        off_residual=off_res,
        on_residual=on_res,
        on_interior_residual=on_int_res,
        reaction=reaction,
        energy_interior=energy_int,
    )


def solve_p1(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    A: float,
    opts: P1Options | None = None,
) -> ExtremalResult:
    """Extremal pair for p = 1: V~ = (A/m(I)) chi_I with lambda = A/m(I).

    The certificate measures the continuum identities against the discrete
    minimizer.  When the contact reaction makes them fail (any grounded
    instance at finite resolution) or the contact set swallows the whole
    free set, a regime warning is attached instead of a silent pass.
    """
    opts = opts or P1Options()
    u, lam_t, trace = minimize_t(space, spec, A, opts)
    coin = coincidence_set(space, spec, u, opts.tol_I)
    if coin.size == 0:
        raise ValueError(
            "empty coincidence set: the box never bound "
            "(solver failure or tol_I too tight)"
        )
    m_I = coin.measure
    lam = A / m_I
    V = np.zeros(space.n)
    V[coin.indices] = lam

    budget = LpBudget(1.0, A)
    pair = lambda1(space, spec, V, opts.eigen, v0=u)
    u_normed = u / math.sqrt(float(np.sum(u * u * space.m)))
    k = int(np.argmax(np.abs(u_normed)))
    if u_normed[k] < 0:
        u_normed = -u_normed
    efun_gap = float(np.max(np.abs(u_normed - pair.u)))

    vi = variational_inequality_residual(space, spec, u, lam_t, opts.n_probes, opts.seed)
    comp = complementarity_check(space, spec, u, coin, lam_t, opts.seed)
    r_v = rayleigh(space, spec, V, u)
    j_u = j_value(space, spec, budget, u)
    norm1 = lp_norm(space, V, 1.0)

    sens_lo = coincidence_set(space, spec, u, opts.tol_I / 10.0).size
    sens_hi = coincidence_set(space, spec, u, opts.tol_I * 10.0).size

    cert = Certificate()
    cert.add("solver_converged", trace["converged"], 0.0 if trace["converged"] else 1.0, 0.5)
    cert.add("coincidence_nonempty", m_I > 0, m_I, 0.0, detail="m(I) > 0")
    cert.add_bound("budget_identity", abs(lam_t - lam), 1e-8 * (1.0 + lam),
                   detail="A = lambda m(I) consistency via |T(u) - A/m(I)|")
    cert.add_bound("lambda1_matches", abs(pair.lam - lam), 1e-8 * abs(lam),
                   detail="lambda_1((A/m(I)) chi_I) vs A/m(I)")
    cert.add_bound("eigenfunction_matches", efun_gap, 1e-6)
    cert.add_bound("rayleigh_matches_t", abs(r_v - lam_t), 1e-8 * (1.0 + lam_t))
    cert.add_bound("j_matches_t", abs(j_u - lam_t), 1e-8 * (1.0 + lam_t))
    cert.add_bound("budget_l1", abs(norm1 - A), 1e-12 * A)
    cert.add("vi_slack", vi["min_slack"] >= -1e-8, vi["min_slack"], -1e-8,
             detail="min over probes of a[u, v-u] - lambda (u, v-u)_m")
    cert.add_bound("complementarity_off", comp.off_residual, comp.tol_factor * comp.scale)
    cert.add_bound("complementarity_on", comp.on_residual, comp.tol_factor * comp.scale)
    cert.add_bound("energy_measure_locality", comp.energy_interior, 0.0)
    cert.add("tol_I_sensitivity", sens_lo == sens_hi, float(sens_hi - sens_lo), 0.0,
             detail="|I| agrees under tol_I/10 and tol_I*10")
    cert.add_bound("sup_norm_one", abs(float(np.max(u)) - 1.0), 1e-10)

    regime = None
    if coin.size == spec.n_free:
        regime = "coincidence set is the entire free set"
    elif not cert["lambda1_matches"].passed:
        regime = (
            "contact-boundary reaction {:.3e} breaks the continuum identity "
            "A = lambda m(I) at this resolution".format(comp.reaction)
        )
    cert.info.update(
        m_I=m_I,
        t_value=lam_t,
        tol_I=opts.tol_I,
        I=[int(i) for i in coin.indices],
        vi_slack_min=vi["min_slack"],
        vi_slack_min_weak_form=vi["min_slack_weak_form"],
        complementarity=comp.to_jsonable(),
        regime_warning=regime,
    )
    cert.residuals.update(eigen=pair.residual, eigen_algebraic=pair.residual_alg)

    return ExtremalResult(
        space=space,
        spec=spec,
        budget=budget,
        u=u,
        V=V,
        lam=lam,
        j_value=lam_t,
        certificate=cert,
        iterations=trace["outer_iterations"],
        converged=trace["converged"],
        solver="p1",
        seed=opts.seed,
        trace=trace,
        coincidence=coin,
        vi=vi,
        complementarity=comp,
        regime_warning=regime,
    )


def solve_obstacle(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    problem: ObstacleProblemInput,
    opts: ObstacleOptions | None = None,
) -> Array:
    """Solve a[u, v-u] >= <f, v-u>_m over {v >= psi} by projected gradient.

    Equivalent to minimizing 1/2 a[v,v] - (f, v)_m over the feasible set;
    the projection is the pointwise maximum with psi.
    """
    opts = opts or ObstacleOptions()
    psi = np.asarray(problem.psi, dtype=float)
    f = np.asarray(problem.f, dtype=float)
    if psi.shape != (space.n,) or f.shape != (space.n,):
        raise ValueError("psi and f must have one value per vertex")
    if np.any(psi[spec.dirichlet_set] > 0):
        raise ValueError("infeasible: psi > 0 on a grounded vertex")
    free = spec.free_set
    if spec.dirichlet_set.size == 0 and float(np.sum(f * space.m)) > 1e-12 * (
        1.0 + float(np.max(np.abs(f)))
    ):
        raise ValueError(
            "unbounded problem: with no grounded vertex the forcing must not "
            "push along constants (sum f m <= 0 required)"
        )

    Kf = spec.stiffness_free()
    lip = max(2.0 * float(Kf.diagonal().max(initial=0.0)), 1e-12)
    psif = psi[free]
    b = (f * space.m)[free]

    def hess_mul(x):
        return Kf @ x

    def project(x):
        return np.maximum(x, psif)

    v0 = np.maximum(psif, 0.0)
    vf, _ = projected_gradient_quadratic(
        hess_mul, b, project, v0, lip, opts.max_iter, opts.tol
    )
    v = np.zeros(space.n)
    v[free] = vf
    return v
