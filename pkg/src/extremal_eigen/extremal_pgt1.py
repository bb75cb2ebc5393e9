"""Extremal potential for p in (1, inf): minimize J, build V, certify.

The functional

    J(u) = (a[u,u] + A ||u||_{2q}^2) / ||u||_2^2,     q = p/(p-1),

dominates every Rayleigh quotient R_V(u) with ||V||_p <= A (Hoelder), and its
minimizer u~ yields the closed-form extremal potential

    V~ = A ||u~^2||_q^(1-q) u~^(2(q-1)),

whose first eigenfunction is u~ again, with lambda_1(V~) = J(u~).  The solver
iterates that self-consistency: u <- first eigenfunction of L + V(u), damped
when J increases, with a Barzilai-Borwein projected-gradient fallback for the
stall regime (concentrated ground states whose translation mode makes the
fixed-point map contract arbitrarily slowly).

The p = inf case is the constant potential V = A (a pure shift of L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import Certificate
from .core_form import Array, DirichletFormSpec, MeasuredSpace, a_form, lp_norm
from .eigensolver import EigenOptions, lambda1, rayleigh

__all__ = [
    "LpBudget",
    "SolveOptions",
    "ExtremalResult",
    "j_value",
    "j_gradient",
    "extremal_potential",
    "minimize_j",
    "solve_p_gt_1",
    "check_linf_bounds",
    "solve_p_inf",
]

# below this exponent gap the closed-form potential is numerically meaningless
P_ONE_GUARD = 1.0 + 1e-6


@dataclass(frozen=True)
class LpBudget:
    """Constraint set B_A = {V >= 0 : ||V||_p <= A} for the potential."""

    p: float
    A: float

    def __post_init__(self):
        if not (self.p == math.inf or self.p >= 1):
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if not (self.A > 0 and math.isfinite(self.A)):
            raise ValueError(f"budget A must be positive and finite, got {self.A}")

    @property
    def q(self) -> float:
        """Conjugate exponent p/(p-1); inf at p=1, 1 at p=inf."""
        if self.p == math.inf:
            return 1.0
        if self.p == 1:
            return math.inf
        return self.p / (self.p - 1.0)

    def to_jsonable(self) -> dict:
        return {"p": "inf" if self.p == math.inf else float(self.p), "A": float(self.A)}

    @staticmethod
    def from_jsonable(obj: dict) -> "LpBudget":
        p = obj["p"]
        if isinstance(p, str):
            if p.lower() not in ("inf", "infinity"):
                raise ValueError(f'p must be a number or "inf", got {p!r}')
            p = math.inf
        return LpBudget(float(p), float(obj["A"]))


@dataclass
class SolveOptions:
    max_outer: int = 500            # self-consistent (eigensolve) steps
    max_fallback: int = 2000        # projected-gradient fallback steps
    tol_j: float = 1e-12            # relative J-stagnation tolerance
    # two orders tighter than the certified 1e-9 so that first-order errors
    # in V~ cannot eat the 1e-10 grace of the sup-norm bound checks
    tol_resid: float = 1e-11        # self-consistency residual tolerance
    damping_floor: float = 1.0 / 64.0
    seed: int = 0
    uniqueness_probe: bool = True   # re-solve twice from random starts
    eigen: EigenOptions = field(default_factory=EigenOptions)


@dataclass
class ExtremalResult:
    """Extremal pair with certificate; p=1 runs also carry the coincidence data."""

    space: MeasuredSpace
    spec: DirichletFormSpec
    budget: LpBudget
    u: Array
    V: Array
    lam: float
    j_value: float
    certificate: Certificate
    iterations: int
    converged: bool
    solver: str
    seed: int = 0
    trace: dict = field(default_factory=dict)
    bounds: dict | None = None
    coincidence: object | None = None
    vi: dict | None = None
    complementarity: object | None = None
    regime_warning: str | None = None


def _norms(space, spec, u):
    if np.asarray(u).shape != (space.n,):
        raise ValueError(f"dimension mismatch: expected length {space.n}")
    u = spec.member(u)
    nu2 = float(np.sum(u * u * space.m))
    if nu2 == 0.0:
        raise ValueError("J is undefined for u = 0 on the free set")
    return u, nu2


def j_value(space: MeasuredSpace, spec: DirichletFormSpec, budget: LpBudget, u) -> float:
    """J(u) = (a[u,u] + A ||u||_{2q}^2) / ||u||_2^2, all norms m-weighted.

    At p = 1 the 2q-norm degenerates to the sup-norm.
    """
    u, nu2 = _norms(space, spec, u)
    if budget.p == 1:
        pen = float(np.max(np.abs(u))) ** 2
    else:
        pen = lp_norm(space, u, 2.0 * budget.q) ** 2
    return (a_form(spec, u, u) + budget.A * pen) / nu2


def _potential_of(space, budget, u):
    # A * ||u^2||_q^(1-q) * u^(2(q-1)), computed as A * (u^2 / t)^(q-1)
    # so that exponents stay tame as q grows.
    q = budget.q
    t = lp_norm(space, u * u, q)
    if t == 0.0:
        raise ValueError("potential undefined for u = 0")
    return budget.A * np.power(u * u / t, q - 1.0)


def extremal_potential(space: MeasuredSpace, budget: LpBudget, u) -> Array:
    """Closed-form maximizing potential A ||u^2||_q^(1-q) u^(2(q-1)) for u >= 0.

    Saturates the budget exactly: ||V||_p = A, and supp(V) lies in supp(u).
    """
    if not (1 < budget.p < math.inf):
        raise ValueError("the closed-form potential needs p in (1, inf)")
    if budget.p < P_ONE_GUARD:
        raise ValueError("p <= 1 + 1e-6: route to the p = 1 solver instead")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("the extremal potential expects a nonnegative u")
    return _potential_of(space, budget, u)


def j_gradient(space: MeasuredSpace, spec: DirichletFormSpec, budget: LpBudget, u) -> Array:
    """Euclidean gradient of J at u with respect to the free coordinates.

    g = (2/||u||_2^2) [K u + (V(u) - J(u)) u m]  with V(u) the closed-form
    potential; grounded entries are fixed at zero, hence carry zero gradient.
    """
    if not (1 < budget.p < math.inf):
        raise ValueError("the Gateaux derivative needs p in (1, inf)")
    u, nu2 = _norms(space, spec, u)
    V = budget.A * np.power(u * u / lp_norm(space, u * u, budget.q), budget.q - 1.0)
    Ku = spec.stiffness() @ u
    g = (2.0 / nu2) * (Ku + (V - j_value(space, spec, budget, u)) * u * space.m)
    g[spec.dirichlet_set] = 0.0
    return g


def _m_normalize(space, u):
    nrm = math.sqrt(float(np.sum(u * u * space.m)))
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero function")
    return u / nrm


def _self_consistency(space, spec, budget, u):
    """Residual vector and m-norm of (K + diag(V(u)m) - J(u) M) u."""
    V = _potential_of(space, budget, u)
    j = j_value(space, spec, budget, u)
    r = spec.stiffness() @ u + (V - j) * u * space.m
    r[spec.dirichlet_set] = 0.0
    res = math.sqrt(float(np.sum(r * r / space.m)))
    return r, res, j, V


def _bb_fallback(space, spec, budget, u, opts, j_hist, res_hist):
    """Projected-gradient descent with Barzilai-Borwein steps on the m-sphere.

    Projection is |.| followed by m-normalization (admissible: J(|u|) <= J(u)
    and J is scale-invariant).  Alternating BB1/BB2 steps handle the
    ill-conditioned translation mode that stalls the fixed-point map.
    """
    g = j_gradient(space, spec, budget, u)
    step = 1.0 / max(np.linalg.norm(g), 1e-12)
    u_prev, g_prev = u, g
    for it in range(1, opts.max_fallback + 1):
        u_new = _m_normalize(space, np.abs(u - step * g))
        g_new = j_gradient(space, spec, budget, u_new)
        s = u_new - u_prev
        y = g_new - g_prev
        sy = float(s @ y)
        if sy > 0:
            step = float(s @ s) / sy if it % 2 == 0 else sy / max(float(y @ y), 1e-300)
        else:
            step = 1.0 / max(np.linalg.norm(g_new), 1e-12)
        u_prev, g_prev = u_new, g_new
        u, g = u_new, g_new
        _, res, j, _ = _self_consistency(space, spec, budget, u)
        j_hist.append(j)
        res_hist.append(res)
        if res <= opts.tol_resid:
            return u, it, True
    return u, opts.max_fallback, False


def minimize_j(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    budget: LpBudget,
    opts: SolveOptions | None = None,
    u0=None,
):
    """Self-consistent minimization of J; returns (u, J(u), trace).

    u is nonnegative with m-weighted norm one and, at convergence, is the
    first eigenfunction of L + V(u) up to the residual tolerance.
    """
    opts = opts or SolveOptions()
    if not (1 < budget.p < math.inf):
        raise ValueError("minimize_j needs p in (1, inf)")
    if budget.p < P_ONE_GUARD:
        raise ValueError("p <= 1 + 1e-6: route to the p = 1 solver instead")
    if spec.n_free == 0:
        raise ValueError("free set is empty")

    if u0 is None:
        u = np.abs(lambda1(space, spec, None, opts.eigen).u)
    else:
        u = np.abs(spec.member(u0))
    u = _m_normalize(space, u)

    j_prev = j_value(space, spec, budget, u)
    theta = 1.0
    j_hist = [j_prev]
    res_hist = []
    stagnant = 0
    scf_iters = 0
    bb_iters = 0
    fallback_rounds = 0
    converged = False

    for outer in range(1, opts.max_outer + 1):
        scf_iters = outer
        V = _potential_of(space, budget, u)
        pair = lambda1(space, spec, V, opts.eigen, v0=u)
        u_eig = _m_normalize(space, np.abs(pair.u))
        j_new = j_value(space, spec, budget, u_eig)
        if j_new > j_prev * (1.0 + 1e-15) + 1e-300:
            theta = max(theta / 2.0, opts.damping_floor)
            u_new = _m_normalize(space, (1.0 - theta) * u + theta * u_eig)
            j_new = j_value(space, spec, budget, u_new)
        else:
            theta = 1.0
            u_new = u_eig
        _, res, j_new, _ = _self_consistency(space, spec, budget, u_new)
        j_hist.append(j_new)
        res_hist.append(res)
        flat = abs(j_new - j_prev) <= opts.tol_j * (1.0 + abs(j_new))
        u, j_prev = u_new, j_new
        if flat and res <= opts.tol_resid:
            converged = True
            break
        stagnant = stagnant + 1 if flat else 0
        # fixed point is contracting too slowly for the J signal to move:
        # hand over to the gradient method
        if stagnant >= 3 or (outer >= 100 and res > opts.tol_resid):
            u, used, ok = _bb_fallback(space, spec, budget, u, opts, j_hist, res_hist)
            bb_iters += used
            j_prev = j_hist[-1]
            stagnant = 0
            fallback_rounds += 1
            if ok:
                converged = True
                break
            if fallback_rounds >= 2:
                break

    trace = {
        "j_history": j_hist,
        "residual_history": res_hist,
        "scf_iterations": scf_iters,
        "fallback_iterations": bb_iters,
        "converged": converged,
    }
    return u, j_prev, trace


def _linf_bound_report(space, spec, budget, u, V, lam):
    q = budget.q
    u_sup = float(np.max(np.abs(u)))
    u_2q = lp_norm(space, u, 2.0 * q)
    rhs_u = (lam / budget.A) ** ((budget.p - 1.0) / 2.0) * u_2q
    v_sup = float(np.max(V))
    return {
        "u_sup": {"lhs": u_sup, "rhs": rhs_u, "slack": rhs_u - u_sup},
        "v_sup": {"lhs": v_sup, "rhs": lam, "slack": lam - v_sup},
    }


def check_linf_bounds(result: ExtremalResult, budget: LpBudget | None = None) -> dict:
    """Report the two sup-norm bounds on the extremal pair with their slacks.

    ||u~||_inf <= (lambda/A)^((p-1)/2) ||u~||_2q  and  ||V~||_inf <= lambda.
    A violated bound marks the certificate invalid.
    """
    budget = budget or result.budget
    report = _linf_bound_report(result.space, result.spec, budget, result.u, result.V, result.lam)
    for key in ("u_sup", "v_sup"):
        entry = report[key]
        entry["passed"] = bool(entry["lhs"] <= entry["rhs"] * (1.0 + 1e-10))
    return report


def solve_p_gt_1(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    budget: LpBudget,
    opts: SolveOptions | None = None,
) -> ExtremalResult:
    """Extremal pair for p in (1, inf) with a full certificate.

    Composes minimize_j, the closed-form potential, and an eigensolve of
    L + V~; certifies lambda_1(V~) = J(u~) = R_V~(u~), budget saturation,
    the sup-norm bounds, and (optionally) a two-start uniqueness probe.
    """
    opts = opts or SolveOptions()
    u, j, trace = minimize_j(space, spec, budget, opts)
    V = extremal_potential(space, budget, u)
    pair = lambda1(space, spec, V, opts.eigen, v0=u)

    cert = Certificate()
    _, fp_res, _, _ = _self_consistency(space, spec, budget, u)
    r_u = rayleigh(space, spec, V, u)
    norm_V = lp_norm(space, V, budget.p)

    cert.add("solver_converged", trace["converged"], 0.0 if trace["converged"] else 1.0, 0.5)
    cert.add_bound("lambda_matches_j", abs(pair.lam - j), 1e-8 * (1.0 + abs(j)))
    cert.add_bound("rayleigh_matches_j", abs(r_u - j), 1e-8 * (1.0 + abs(j)))
    cert.add_bound("budget_saturated", abs(norm_V - budget.A), 1e-10 * budget.A)
    cert.add_bound("eigen_residual", pair.residual, 1e-9)
    cert.add_bound("fixed_point_residual", fp_res, opts.tol_resid)
    dead = np.abs(V[np.abs(u) == 0.0])
    cert.add_bound("support_condition", float(dead.max()) if dead.size else 0.0, 0.0)

    bounds = _linf_bound_report(space, spec, budget, u, V, pair.lam)
    cert.add(
        "u_sup_bound",
        bounds["u_sup"]["lhs"] <= bounds["u_sup"]["rhs"] * (1.0 + 1e-10),
        bounds["u_sup"]["lhs"] - bounds["u_sup"]["rhs"],
        0.0,
        detail="||u||_inf <= (lambda/A)^((p-1)/2) ||u||_2q",
    )
    cert.add(
        "v_sup_bound",
        bounds["v_sup"]["lhs"] <= bounds["v_sup"]["rhs"] * (1.0 + 1e-10),
        bounds["v_sup"]["lhs"] - bounds["v_sup"]["rhs"],
        0.0,
        detail="||V||_inf <= lambda",
    )

    if opts.uniqueness_probe:
        gap = _uniqueness_probe(space, spec, budget, opts, V)
        cert.add_bound("uniqueness_probe", gap, 1e-6,
                       detail="sup-norm spread of V over two random restarts")

    cert.residuals.update(
        eigen=pair.residual,
        eigen_algebraic=pair.residual_alg,
        fixed_point=fp_res,
    )
    return ExtremalResult(
        space=space,
        spec=spec,
        budget=budget,
        u=u,
        V=V,
        lam=pair.lam,
        j_value=j,
        certificate=cert,
        iterations=trace["scf_iterations"] + trace["fallback_iterations"],
        converged=trace["converged"],
        solver="p_gt_1",
        seed=opts.seed,
        trace=trace,
        bounds=bounds,
    )


def _uniqueness_probe(space, spec, budget, opts, V_ref):
    rng = np.random.default_rng(opts.seed)
    spread = 0.0
    for _ in range(2):
        u0 = np.abs(rng.standard_normal(space.n)) + 0.1
        u_alt, _, _ = minimize_j(space, spec, budget, opts, u0=u0)
        V_alt = extremal_potential(space, budget, u_alt)
        spread = max(spread, float(np.max(np.abs(V_alt - V_ref))))
    return spread


def solve_p_inf(
    space: MeasuredSpace,
    spec: DirichletFormSpec,
    budget: LpBudget,
    opts: SolveOptions | None = None,
) -> ExtremalResult:
    """p = inf: the constant potential V = A is extremal (pure shift of L)."""
    opts = opts or SolveOptions()
    if budget.p != math.inf:
        raise ValueError("solve_p_inf needs p = inf")
    base = lambda1(space, spec, None, opts.eigen)
    u = np.abs(base.u)
    u = _m_normalize(space, u) if np.any(u) else base.u
    V = np.zeros(space.n)
    V[spec.free_set] = budget.A
    lam = base.lam + budget.A
    shifted = lambda1(space, spec, V, opts.eigen, v0=u)

    cert = Certificate()
    cert.add("solver_converged", base.converged and shifted.converged,
             0.0 if base.converged and shifted.converged else 1.0, 0.5)
    cert.add_bound("shift_identity", abs(shifted.lam - lam), 1e-10 * (1.0 + abs(lam)))
    cert.add_bound("eigen_residual", shifted.residual, 1e-9)
    cert.add_bound("budget_saturated", abs(lp_norm(space, V, math.inf) - budget.A),
                   1e-12 * budget.A)
    cert.residuals.update(eigen=shifted.residual, eigen_algebraic=shifted.residual_alg)

    j = j_value(space, spec, budget, u)
    return ExtremalResult(
        space=space,
        spec=spec,
        budget=budget,
        u=u,
        V=V,
        lam=lam,
        j_value=j,
        certificate=cert,
        iterations=base.iterations + shifted.iterations,
        converged=base.converged and shifted.converged,
        solver="p_inf",
        seed=opts.seed,
        trace={"j_history": [j], "residual_history": [shifted.residual]},
    )
