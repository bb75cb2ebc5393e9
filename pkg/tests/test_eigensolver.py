import numpy as np
import pytest
from hypothesis import given, settings

from extremal_eigen import (
    DirichletFormSpec,
    EigenOptions,
    MeasuredSpace,
    build_path,
    lambda1,
    rayleigh,
)

from conftest import random_instance
from strategies import measured_forms, vectors


def two_vertex():
    return MeasuredSpace([1.0, 1.0]), DirichletFormSpec(2, [(0, 1, 1.0)])


def dense_oracle(space, spec, V):
    """Full-spectrum reference: eigendecompose diag(m)^-1/2 H diag(m)^-1/2."""
    free = spec.free_set
    mf = space.m[free]
    H = spec.stiffness_free().toarray()
    if V is not None:
        H = H + np.diag(np.asarray(V)[free] * mf)
    S = H / np.sqrt(np.outer(mf, mf))
    return np.linalg.eigvalsh(S)


class TestRayleigh:
    def test_single_vertex_is_potential(self):
        space = MeasuredSpace([1.0, 2.0, 1.0])
        spec = DirichletFormSpec(3, [(0, 1, 1.0), (1, 2, 1.0)], frozenset({0, 2}))
        # a[u,u] = 2 for u = e_1, so R = 2/2 + V
        assert rayleigh(space, spec, [0.0, 3.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(4.0)

    def test_hand_evaluated_two_vertex(self):
        space, spec = two_vertex()
        assert rayleigh(space, spec, np.zeros(2), [1.0, -1.0]) == pytest.approx(2.0)

    def test_constant_kernel(self):
        space, spec = two_vertex()
        assert rayleigh(space, spec, np.zeros(2), [2.0, 2.0]) == 0.0

    def test_zero_function_rejected(self):
        space, spec = two_vertex()
        with pytest.raises(ValueError, match="u = 0"):
            rayleigh(space, spec, np.zeros(2), np.zeros(2))


class TestLambda1Examples:
    def test_single_free_vertex(self):
        space, spec = build_path(3, grounded_ends=True)
        pair = lambda1(space, spec, [0.0, 0.5, 0.0])
        assert pair.lam == pytest.approx(2.5, abs=1e-14)
        assert pair.u.tolist() == [0.0, 1.0, 0.0]

    def test_constant_kernel_ungrounded(self):
        space, spec = two_vertex()
        pair = lambda1(space, spec)
        assert pair.lam == pytest.approx(0.0, abs=1e-12)
        assert pair.u == pytest.approx(np.full(2, 1 / np.sqrt(2)), abs=1e-12)

    def test_constant_potential_shift(self):
        space, spec = two_vertex()
        pair = lambda1(space, spec, [0.7, 0.7])
        assert pair.lam == pytest.approx(0.7, abs=1e-12)

    def test_empty_free_set_impossible(self):
        with pytest.raises(ValueError):
            DirichletFormSpec(2, [(0, 1, 1.0)], frozenset({0, 1}))

    def test_negative_potential_rejected(self):
        space, spec = two_vertex()
        with pytest.raises(ValueError, match="nonnegative"):
            lambda1(space, spec, [-1.0, 0.0])

    def test_degenerate_flag_on_disconnected_free_graph(self):
        space = MeasuredSpace(np.ones(4))
        spec = DirichletFormSpec(4, [(0, 1, 1.0), (2, 3, 1.0)])
        pair = lambda1(space, spec)
        assert pair.degenerate
        connected = DirichletFormSpec(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
        assert not lambda1(space, connected).degenerate


class TestInvariants:
    def test_shift_identity(self, rng):
        for trial in range(25):
            space, spec = random_instance(rng, int(rng.integers(3, 12)))
            V = spec.member(rng.uniform(0, 2, space.n))
            c = float(rng.uniform(0, 3))
            base = lambda1(space, spec, V)
            shifted = lambda1(space, spec, V + c * spec.free_mask)
            assert abs(shifted.lam - base.lam - c) <= 1e-10
            assert np.max(np.abs(shifted.u - base.u)) <= 1e-7

    def test_monotonicity_in_potential(self, rng):
        for trial in range(25):
            space, spec = random_instance(rng, int(rng.integers(3, 12)))
            V = spec.member(rng.uniform(0, 2, space.n))
            W = V + spec.member(rng.uniform(0, 1.5, space.n))
            assert lambda1(space, spec, V).lam <= lambda1(space, spec, W).lam + 1e-10

    def test_variational_dominance(self, rng):
        for trial in range(25):
            space, spec = random_instance(rng, int(rng.integers(3, 12)))
            V = spec.member(rng.uniform(0, 2, space.n))
            lam = lambda1(space, spec, V).lam
            for _ in range(10):
                u = spec.member(rng.uniform(-2, 2, space.n))
                if not np.any(u):
                    continue
                assert lam <= rayleigh(space, spec, V, u) + 1e-10

    def test_residual_contract_and_perron(self, rng):
        opts = EigenOptions()
        for trial in range(20):
            space, spec = random_instance(rng, int(rng.integers(3, 12)))
            V = spec.member(rng.uniform(0, 2, space.n))
            pair = lambda1(space, spec, V, opts)
            assert pair.residual_alg <= opts.tol
            assert pair.residual <= opts.tol
            if spec.free_connected:
                assert np.min(pair.u) >= -1e-12

    def test_sign_fix_largest_entry_positive(self, rng):
        for trial in range(10):
            space, spec = random_instance(rng, 8)
            pair = lambda1(space, spec, spec.member(rng.uniform(0, 1, 8)))
            k = int(np.argmax(np.abs(pair.u)))
            assert pair.u[k] > 0


@settings(max_examples=40, deadline=None)
@given(data=measured_forms(max_n=8), seed=vectors(1, 0, 1000))
def test_oracle_equivalence_dense_and_iterative(data, seed):
    space, spec = data
    rng = np.random.default_rng(int(seed[0]))
    V = spec.member(rng.uniform(0, 3, space.n))
    reference = dense_oracle(space, spec, V)[0]
    scale = max(1.0, abs(reference))
    dense = lambda1(space, spec, V)
    assert abs(dense.lam - reference) <= 1e-9 * scale
    iterative = lambda1(space, spec, V, EigenOptions(dense_cutoff=0))
    assert iterative.converged
    assert abs(iterative.lam - reference) <= 1e-9 * scale


def test_iterative_warm_start_and_larger_instance():
    space, spec = build_path(700, grounded_ends=True)
    pair = lambda1(space, spec)
    exact = 2.0 * (1.0 - np.cos(np.pi / 699))
    assert pair.converged
    assert pair.lam == pytest.approx(exact, rel=1e-10)
    again = lambda1(space, spec, None, v0=pair.u)
    assert again.iterations <= pair.iterations


def test_iteration_cap_reports_not_raises():
    space, spec = build_path(30, grounded_ends=True)
    pair = lambda1(space, spec, None, EigenOptions(dense_cutoff=0, max_iter=1))
    assert not pair.converged
    assert pair.residual > 0
