import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_instance(rng, n, grounded=True):
    """Random connected weighted path-with-chords instance for fuzz suites."""
    from extremal_eigen import DirichletFormSpec, MeasuredSpace

    m = rng.uniform(0.2, 3.0, size=n)
    edges = [(i, i + 1, rng.uniform(0.2, 3.0)) for i in range(n - 1)]
    for _ in range(rng.integers(0, n)):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        edges.append((int(i), int(j), float(rng.uniform(0.2, 3.0))))
    dirichlet = frozenset({0, n - 1}) if grounded and n >= 3 else frozenset()
    return MeasuredSpace(m), DirichletFormSpec(n, edges, dirichlet)


def obstacle_active_set(space, spec, psi, f):
    """Independent oracle: primal active-set loop on the complementarity system."""
    free = spec.free_set
    Kf = spec.stiffness_free().toarray()
    b = (np.asarray(f) * space.m)[free]
    psif = np.asarray(psi)[free]
    nf = free.size
    active = np.zeros(nf, dtype=bool)
    for _ in range(200):
        u = psif.copy()
        if (~active).any():
            rhs = b[~active] - Kf[np.ix_(~active, active)] @ psif[active]
            u[~active] = np.linalg.solve(Kf[np.ix_(~active, ~active)], rhs)
        grad = Kf @ u - b
        violated = ~active & (u < psif - 1e-13)
        release = active & (grad < -1e-13)
        if not violated.any() and not release.any():
            break
        active = (active | violated) & ~release
    full = np.zeros(space.n)
    full[free] = u
    return full
