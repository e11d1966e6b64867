import numpy as np
import pytest

from hardyctl.halfplane import pseudo_metric
from hardyctl.interpolation import InterpolationProblem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_nodes(rng, n, min_sep=0.3, box=(0.2, 3.0, -3.0, 3.0)):
    """Right half-plane nodes with pairwise pseudo-distance >= min_sep."""
    x0, x1, y0, y1 = box
    nodes = []
    while len(nodes) < n:
        z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
        if all(pseudo_metric(z, w) >= min_sep for w in nodes):
            nodes.append(z)
    return np.array(nodes)


def random_weight(rng, K, cond_max=50.0):
    while True:
        G = rng.normal(size=(K, K)) + 1j * rng.normal(size=(K, K))
        if np.linalg.cond(G) <= cond_max:
            return G


def random_problem(rng, n_max=5, k_max=3, min_sep=0.3, standard=False):
    n = int(rng.integers(1, n_max + 1))
    nodes = random_nodes(rng, n, min_sep)
    K = [int(k) for k in rng.integers(1, k_max + 1, size=n)]
    c = [rng.normal(size=k) + 1j * rng.normal(size=k) for k in K]
    if standard:
        return InterpolationProblem.standard(nodes, K, c)
    G = [random_weight(rng, k) for k in K]
    return InterpolationProblem(nodes, K, G, c)


# Regression ceiling for max |entry| of the scaled Blaschke derivative matrix,
# per multiplicity K.  Frozen at roughly twice the largest value seen over
# 20 x 200 random instances (nodes pairwise >= 0.3 apart, up to 5 nodes).
BN_ENTRY_THRESHOLDS = {1: 1 + 1e-9, 2: 25.0, 3: 300.0, 4: 3000.0, 5: 40000.0}


def cauchy_constant(K):
    """C(K) from Cauchy's estimate on the circle |z - lam| = Re(lam)/4.

    |z + conj(lam)| <= 9/4 Re(lam) there, so the m-th derivative (m = K-k-1)
    of (z + conj(lam))^(m+1) h is at most m! (9/4)^(m+1) 4^m Re(lam) sup|h|.
    """
    return 2.25**K * 4.0 ** (K - 1)
