import math

import numpy as np
import pytest

from extremal_eigen import (
    DirichletFormSpec,
    LpBudget,
    MeasuredSpace,
    SolveOptions,
    build_path,
    check_linf_bounds,
    extremal_potential,
    j_gradient,
    j_value,
    lambda1,
    lp_norm,
    minimize_j,
    rayleigh,
    solve_p_gt_1,
    solve_p_inf,
)
from extremal_eigen.oracle import fd_gradient, sample_ball, SampleConfig

from conftest import random_instance


def two_vertex():
    return MeasuredSpace([1.0, 1.0]), DirichletFormSpec(2, [(0, 1, 1.0)])


def single_vertex(m_mid=1.0):
    space = MeasuredSpace([1.0, m_mid, 1.0])
    spec = DirichletFormSpec(3, [(0, 1, 1.0), (1, 2, 1.0)], frozenset({0, 2}))
    return space, spec


def angle_grid_min_j(A, n_grid=200_001):
    """Independent oracle for the symmetric 2-vertex instance: sweep the circle."""
    theta = np.linspace(0.0, 0.5 * np.pi, n_grid)
    c, s = np.cos(theta), np.sin(theta)
    # m = (1,1), w = 1, p = q = 2: ||u||_2 = 1 on the circle
    j = (c - s) ** 2 + A * np.sqrt(c**4 + s**4)
    k = int(np.argmin(j))
    return float(j[k]), float(theta[k])


class TestJValue:
    def test_single_vertex_equals_budget(self):
        space, spec = single_vertex()
        budget = LpBudget(2.0, 0.7)
        for u_mid in (1.0, -2.5, 0.3):
            u = np.array([0.0, u_mid, 0.0])
            # a = 2 u^2, pen = u^2, nu2 = u^2 under m == 1 => J = 2 + A
            assert j_value(space, spec, budget, u) == pytest.approx(2.0 + 0.7, rel=1e-14)

    def test_isolated_vertex_ratio_of_identical_norms(self):
        space = MeasuredSpace([1.0])
        spec = DirichletFormSpec(1, [])
        for p in (1.5, 2.0, 7.0):
            assert j_value(space, spec, LpBudget(p, 1.3), [2.0]) == pytest.approx(1.3, rel=1e-14)

    def test_hand_evaluated_two_vertex(self):
        space, spec = two_vertex()
        val = j_value(space, spec, LpBudget(2.0, 0.5), [1.0, 1.0])
        assert val == pytest.approx(0.5 * math.sqrt(2.0) / 2.0, rel=1e-14)

    def test_homogeneity(self, rng):
        space, spec = random_instance(rng, 7)
        budget = LpBudget(3.0, 1.2)
        u = spec.member(rng.uniform(-2, 2, 7))
        j1 = j_value(space, spec, budget, u)
        for t in (3.0, -0.25, 117.0):
            assert j_value(space, spec, budget, t * u) == pytest.approx(j1, rel=1e-12)

    def test_p_one_uses_sup_norm(self):
        space, spec = two_vertex()
        u = np.array([1.0, 0.5])
        val = j_value(space, spec, LpBudget(1.0, 2.0), u)
        expected = (0.25 + 2.0 * 1.0) / (1.25)
        assert val == pytest.approx(expected, rel=1e-14)

    def test_zero_rejected(self):
        space, spec = two_vertex()
        with pytest.raises(ValueError, match="u = 0"):
            j_value(space, spec, LpBudget(2.0, 1.0), np.zeros(2))


class TestJGradient:
    def test_matches_central_differences(self, rng):
        space, spec = build_path(5, grounded_ends=True)
        budget = LpBudget(2.0, 1.0)
        fn = lambda w: j_value(space, spec, budget, w)
        for _ in range(5):
            u = spec.member(rng.uniform(0.2, 2.0, 5))
            g = j_gradient(space, spec, budget, u)
            g_fd = fd_gradient(fn, u, h=1e-6)
            assert np.linalg.norm(g - g_fd) <= 1e-5 * (1.0 + np.linalg.norm(g))

    def test_symmetric_point_has_zero_gradient(self):
        space, spec = two_vertex()
        g = j_gradient(space, spec, LpBudget(2.0, 0.5), np.array([1.0, 1.0]))
        assert np.max(np.abs(g)) <= 1e-14

    def test_first_order_condition_at_minimizer(self):
        space, spec = build_path(7, grounded_ends=True)
        budget = LpBudget(2.0, 1.0)
        u, j, _ = minimize_j(space, spec, budget)
        # J is scale-invariant, so the full Euclidean gradient vanishes at
        # a minimizer, not just its tangential part
        g = j_gradient(space, spec, budget, u)
        assert np.linalg.norm(g) <= 1e-6 * (1.0 + abs(j))

    def test_needs_p_strictly_between_one_and_inf(self):
        space, spec = two_vertex()
        with pytest.raises(ValueError):
            j_gradient(space, spec, LpBudget(1.0, 1.0), np.ones(2))
        with pytest.raises(ValueError):
            j_gradient(space, spec, LpBudget(math.inf, 1.0), np.ones(2))


class TestExtremalPotential:
    def test_p2_closed_form(self):
        space, _ = two_vertex()
        u = np.full(2, 1 / math.sqrt(2.0))
        V = extremal_potential(space, LpBudget(2.0, 0.5), u)
        assert V == pytest.approx(np.full(2, 0.5 / math.sqrt(2.0)), rel=1e-12)
        assert lp_norm(space, V, 2.0) == pytest.approx(0.5, rel=1e-12)

    def test_single_vertex_any_p(self):
        space = MeasuredSpace([1.0])
        spec = DirichletFormSpec(1, [])
        for p in (1.5, 2.0, 11.0):
            V = extremal_potential(space, LpBudget(p, 0.9), np.array([3.0]))
            assert V[0] == pytest.approx(0.9, rel=1e-14)

    def test_support_condition(self):
        space, _ = two_vertex()
        V = extremal_potential(space, LpBudget(2.0, 1.0), np.array([0.0, 1.0]))
        assert V[0] == 0.0

    def test_budget_exact_on_random_inputs(self, rng):
        for _ in range(40):
            n = int(rng.integers(2, 12))
            space = MeasuredSpace(rng.uniform(0.2, 3.0, n))
            p = float(rng.choice([1.01, 1.5, 2.0, 3.0, 10.0, 50.0]))
            A = float(rng.uniform(0.1, 5.0))
            u = rng.uniform(0, 2, n)
            u[int(rng.integers(0, n))] = 1.0  # keep u nonzero
            V = extremal_potential(space, LpBudget(p, A), u)
            assert np.all(V >= 0)
            assert lp_norm(space, V, p) == pytest.approx(A, rel=1e-10)

    def test_preconditions(self):
        space, _ = two_vertex()
        with pytest.raises(ValueError):
            extremal_potential(space, LpBudget(1.0, 1.0), np.ones(2))
        with pytest.raises(ValueError):
            extremal_potential(space, LpBudget(math.inf, 1.0), np.ones(2))
        with pytest.raises(ValueError, match="nonnegative"):
            extremal_potential(space, LpBudget(2.0, 1.0), np.array([-1.0, 1.0]))


class TestMinimizeJ:
    def test_single_free_vertex_closed_form(self):
        for m_mid, p, A in [(1.0, 2.0, 1.0), (2.0, 3.0, 0.7), (0.5, 1.5, 2.0)]:
            space, spec = single_vertex(m_mid)
            u, j, trace = minimize_j(space, spec, LpBudget(p, A))
            expected = 2.0 / m_mid + A * m_mid ** (-1.0 / p)
            assert trace["converged"]
            assert j == pytest.approx(expected, rel=1e-12)

    def test_symmetric_two_vertex_against_angle_grid(self):
        space, spec = two_vertex()
        A = 0.5
        u, j, trace = minimize_j(space, spec, LpBudget(2.0, A))
        j_grid, theta = angle_grid_min_j(A)
        assert trace["converged"]
        assert j == pytest.approx(j_grid, abs=1e-9)
        assert j == pytest.approx(A / math.sqrt(2.0), rel=1e-9)
        assert theta == pytest.approx(np.pi / 4, abs=1e-4)
        assert u == pytest.approx(np.full(2, 1 / math.sqrt(2.0)), abs=1e-8)

    def test_output_contract(self, rng):
        space, spec = random_instance(rng, 9)
        u, j, trace = minimize_j(space, spec, LpBudget(2.5, 1.0))
        assert np.min(u) >= -1e-12
        assert np.sum(u * u * space.m) == pytest.approx(1.0, rel=1e-12)
        assert np.all(u[spec.dirichlet_set] == 0.0)

    def test_rejects_p_near_one_and_inf(self):
        space, spec = two_vertex()
        with pytest.raises(ValueError, match="p = 1 solver"):
            minimize_j(space, spec, LpBudget(1.0000001, 1.0))
        with pytest.raises(ValueError):
            minimize_j(space, spec, LpBudget(math.inf, 1.0))

    def test_nonconvergence_is_flagged_not_silent(self):
        space, spec = build_path(101, grounded_ends=True)
        opts = SolveOptions(max_outer=2, max_fallback=1, uniqueness_probe=False)
        u, j, trace = minimize_j(space, spec, LpBudget(2.0, 1.0), opts)
        assert not trace["converged"]
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 1.0), opts)
        assert not res.converged
        assert not res.certificate["solver_converged"].passed


class TestSolvePGt1:
    def test_single_vertex_certificate(self):
        space, spec = single_vertex()
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 1.0))
        assert res.lam == pytest.approx(3.0, rel=1e-12)
        assert res.V[1] == pytest.approx(1.0, rel=1e-12)
        assert res.certificate.valid

    def test_symmetric_two_vertex_certificate(self):
        space, spec = two_vertex()
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 0.5))
        assert res.lam == pytest.approx(0.5 / math.sqrt(2.0), rel=1e-9)
        assert res.V == pytest.approx(np.full(2, 0.5 / math.sqrt(2.0)), rel=1e-9)
        assert res.certificate.valid

    def test_lambda_equals_j_and_rayleigh(self, rng):
        space, spec = random_instance(rng, 10)
        budget = LpBudget(3.0, 1.5)
        res = solve_p_gt_1(space, spec, budget)
        assert abs(res.lam - res.j_value) <= 1e-8 * (1 + abs(res.j_value))
        r = rayleigh(space, spec, res.V, res.u)
        assert abs(r - res.j_value) <= 1e-8 * (1 + abs(res.j_value))
        assert res.certificate.valid

    def test_dominance_about_random_potentials(self, rng):
        space, spec = build_path(7, grounded_ends=True)
        budget = LpBudget(2.0, 1.0)
        res = solve_p_gt_1(space, spec, budget)
        config = SampleConfig(seed=11, count=1000)
        worst = -math.inf
        for V in sample_ball(space, spec, budget, config):
            worst = max(worst, lambda1(space, spec, V).lam)
        assert worst <= res.lam + 1e-8

    def test_uniqueness_probe_runs(self):
        space, spec = build_path(5, grounded_ends=True)
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 1.0), SolveOptions(seed=5))
        assert res.certificate["uniqueness_probe"].passed


class TestLinfBounds:
    def test_single_vertex_slack_is_stencil_value(self):
        space, spec = single_vertex()
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 1.0))
        report = check_linf_bounds(res)
        assert report["v_sup"]["passed"] and report["u_sup"]["passed"]
        assert report["v_sup"]["slack"] == pytest.approx(2.0, rel=1e-10)

    def test_two_vertex_equality_case(self):
        space, spec = two_vertex()
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 0.5))
        report = check_linf_bounds(res)
        assert report["v_sup"]["passed"]
        assert abs(report["v_sup"]["slack"]) <= 1e-9
        assert abs(report["u_sup"]["slack"]) <= 1e-9

    def test_tampered_pair_fails(self):
        space, spec = two_vertex()
        res = solve_p_gt_1(space, spec, LpBudget(2.0, 0.5))
        res.V = res.V * 3.0
        report = check_linf_bounds(res)
        assert not report["v_sup"]["passed"]


class TestSolvePInf:
    def test_kernel_plus_shift(self):
        space, spec = two_vertex()
        res = solve_p_inf(space, spec, LpBudget(math.inf, 1.0))
        assert res.lam == pytest.approx(1.0, abs=1e-12)
        assert res.V.tolist() == [1.0, 1.0]
        assert res.certificate.valid

    def test_grounded_single_vertex(self):
        space, spec = single_vertex()
        res = solve_p_inf(space, spec, LpBudget(math.inf, 3.0))
        assert res.lam == pytest.approx(5.0, abs=1e-12)
        assert res.V.tolist() == [0.0, 3.0, 0.0]

    def test_budget_shift_is_exact(self):
        space, spec = build_path(6, grounded_ends=True)
        lam1_val = solve_p_inf(space, spec, LpBudget(math.inf, 1.0)).lam
        lam2_val = solve_p_inf(space, spec, LpBudget(math.inf, 2.0)).lam
        assert lam2_val - lam1_val == pytest.approx(1.0, abs=1e-13)


class TestHoelderDomination:
    def test_fuzz(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 12))
            space, spec = random_instance(rng, n, grounded=bool(rng.integers(0, 2)))
            p = float(rng.choice([1.5, 2.0, 3.0, 10.0]))
            A = float(rng.uniform(0.2, 3.0))
            budget = LpBudget(p, A)
            for _ in range(20):
                V = spec.member(rng.uniform(0, 1, n))
                nrm = lp_norm(space, V, p)
                if nrm > 0:
                    V = V * (A * rng.uniform(0, 1) / nrm)
                u = spec.member(rng.uniform(-2, 2, n))
                if not np.any(u):
                    continue
                assert rayleigh(space, spec, V, u) <= j_value(space, spec, budget, u) + 1e-10


class TestBudgetType:
    def test_conjugate_exponent(self):
        assert LpBudget(2.0, 1.0).q == 2.0
        assert LpBudget(3.0, 1.0).q == pytest.approx(1.5)
        assert LpBudget(1.0, 1.0).q == math.inf
        assert LpBudget(math.inf, 1.0).q == 1.0

    def test_validation(self):
        with pytest.raises(ValueError, match="p must lie"):
            LpBudget(0.5, 1.0)
        with pytest.raises(ValueError, match="A must be positive"):
            LpBudget(2.0, -1.0)

    def test_json_round_trip(self):
        b = LpBudget.from_jsonable({"p": "inf", "A": 2.0})
        assert b.p == math.inf
        assert LpBudget.from_jsonable(b.to_jsonable()) == b
