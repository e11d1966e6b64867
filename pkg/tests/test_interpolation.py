import math
import warnings

import numpy as np
import pytest
from conftest import BN_ENTRY_THRESHOLDS, cauchy_constant, random_nodes, random_problem

from hardyctl.carleson import AtomicMeasure, carleson_constant
from hardyctl.errors import ConditioningError, DomainError, InputError, NumericalError
from hardyctl.halfplane import KernelIndex, TaylorJet, gram_matrix, h2_inner, representer
from hardyctl.interpolation import (
    ExtraConditions,
    InterpolationProblem,
    KernelExpansion,
    augment_finite,
    beta,
    bn_matrix,
    fc_construct,
    j_operator,
    leibniz_matrix,
    min_norm_solve,
    min_norm_sup,
    model_space_evaluation,
    standard_weight,
    vasyunin_measure,
)


def single(lam=1.0, K=1, G=None, c=None):
    G = [np.eye(K)] if G is None else [G]
    c = [np.ones(K)] if c is None else [c]
    return InterpolationProblem([lam], [K], G, c)


class TestProblem:
    def test_validation(self):
        with pytest.raises(InputError):
            InterpolationProblem([1, 1], [1, 1], [np.eye(1)] * 2, [np.ones(1)] * 2)
        with pytest.raises(DomainError):
            InterpolationProblem([-1], [1], [np.eye(1)], [np.ones(1)])
        with pytest.raises(InputError):
            InterpolationProblem([1], [2], [np.ones((2, 2))], [np.ones(2)])
        with pytest.raises(InputError):
            InterpolationProblem.standard([1], [9])

    def test_large_multiplicity_warns(self):
        with pytest.warns(RuntimeWarning):
            InterpolationProblem.standard([1], [6])

    def test_blaschke_sum(self):
        p = InterpolationProblem.standard([1, 2j + 1], [2, 1])
        assert p.blaschke_sum() == pytest.approx(2 * 0.5 + 1 / 6)


class TestBeta:
    def test_examples(self):
        assert beta([1 + 1j], [3], 0) == 1
        assert beta([1, 2], [1, 1], 0) == pytest.approx(1 / 3)
        assert beta([1, 2], [1, 2], 0) == pytest.approx(1 / 9)


class TestBn:
    def test_single_node(self):
        bn = bn_matrix(InterpolationProblem.standard([1], [2]), 0)
        assert np.allclose(bn.matrix, [[1, 0], [0, 0.5]], atol=1e-15)
        assert np.allclose(bn.scaled, np.eye(2), atol=1e-15)

    def test_diagonal_modulus(self, rng):
        for _ in range(30):
            p = random_problem(rng, 5, 3, standard=True)
            for n in range(p.nodes.size):
                bn = bn_matrix(p, n)
                K = p.multiplicities[n]
                lam = p.nodes[n]
                expected = [math.factorial(k) * bn.beta / (2 * lam.real) ** k for k in range(K)]
                assert np.allclose(np.abs(np.diag(bn.matrix)), expected, rtol=1e-12)
                assert np.all(np.triu(bn.matrix, 1) == 0)

    @pytest.mark.parametrize("K", [1, 2, 3, 4, 5])
    def test_frozen_thresholds(self, rng, K):
        for _ in range(40):
            n = int(rng.integers(1, 6))
            Ks = [int(k) for k in rng.integers(1, K + 1, size=n)]
            Ks[0] = K
            p = InterpolationProblem.standard(random_nodes(rng, n), Ks)
            S = bn_matrix(p, 0).scaled
            assert np.all(np.tril(S, -1) == 0)
            assert np.max(np.abs(np.abs(np.diag(S)) - 1)) < 1e-12
            assert np.max(np.abs(S)) < BN_ENTRY_THRESHOLDS[K]


class TestVasyunin:
    def test_examples(self):
        assert np.allclose(vasyunin_measure(InterpolationProblem.standard([1, 2], [1, 1])).weights, [9, 18])
        assert vasyunin_measure(InterpolationProblem.standard([0.7 + 1j], [2])).weights[0] == pytest.approx(0.7)

    def test_weight_scaling(self, rng):
        p = random_problem(rng, 4, 3)
        q = InterpolationProblem(p.nodes, p.multiplicities, [3 * g for g in p.weights], p.targets)
        assert np.allclose(vasyunin_measure(q).weights, vasyunin_measure(p).weights / 9)

    def test_measure_stability(self, rng):
        # moving atoms by at most Re(lam)/4 at most doubles the Carleson constant
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 12))
            z = rng.uniform(0.1, 3, n) + 1j * rng.uniform(-3, 3, n)
            w = rng.exponential(1, n)
            r = z.real / 4 * np.sqrt(rng.uniform(0, 1, n))
            moved = z + r * np.exp(2j * np.pi * rng.uniform(0, 1, n))
            ratio = carleson_constant(AtomicMeasure(moved, w)) / carleson_constant(AtomicMeasure(z, w))
            worst = max(worst, ratio)
        assert worst <= 2


class TestMinNorm:
    def test_single(self):
        sol = min_norm_solve(single())
        assert sol.norm == pytest.approx(math.sqrt(2), abs=1e-14)
        assert sol.max_residual < 1e-14

    def test_zero_targets(self):
        sol = min_norm_solve(single(c=np.zeros(1)))
        assert sol.norm == 0
        assert sol.function(1.5 + 1j) == 0

    def test_two_nodes_against_bigger_span(self, rng):
        p = InterpolationProblem([1, 2], [1, 1], [np.eye(1)] * 2, [np.ones(1), np.zeros(1)])
        sol = min_norm_solve(p)
        # minimise over a larger kernel span with the constraints as equalities (KKT system)
        extra = [KernelIndex(complex(rng.uniform(0.2, 3), rng.uniform(-2, 2)), 0) for _ in range(5)]
        idx = [KernelIndex(1, 0), KernelIndex(2, 0)] + extra
        G = gram_matrix(idx)
        E = np.array([[representer(ix, z) for ix in idx] for z in (1, 2)])
        kkt = np.block([[G, E.conj().T], [E, np.zeros((2, 2))]])
        a = np.linalg.lstsq(kkt, np.concatenate([np.zeros(len(idx)), [1, 0]]), rcond=None)[0][: len(idx)]
        brute = math.sqrt(np.real(np.vdot(a, G @ a)))
        assert sol.norm == pytest.approx(brute, rel=1e-10)

    def test_gram_and_basis_agree(self, rng):
        for _ in range(20):
            p = random_problem(rng, 4, 3)
            sol = min_norm_solve(p)
            v = p.hermite_data()
            gram_norm = math.sqrt(np.real(np.vdot(v, sol.coefficients)))
            assert sol.norm == pytest.approx(gram_norm, rel=1e-6)
            rep = KernelExpansion(p.indices(), sol.coefficients)
            z = np.array([0.3 + 1j, 2.5 - 0.7j])
            assert np.allclose(rep(z), sol.function(z), rtol=1e-5, atol=1e-6 * sol.norm)

    def test_residuals_and_certificate(self, rng):
        for _ in range(10):
            p = random_problem(rng, 4, 3)
            sol = min_norm_solve(p, certify=True)
            assert sol.max_residual < 1e-9 * max(1, np.abs(p.hermite_data()).max())
            assert sol.orthogonality < 1e-8 * max(1.0, sol.norm)

    def test_norm_matches_quadrature(self):
        p = InterpolationProblem.standard([1, 0.5 + 1j], [2, 1], [np.array([1, 0.5]), np.array([2j])])
        sol = min_norm_solve(p)
        q = h2_inner(sol.function, sol.function, peaks=[0, 1]).real
        assert math.sqrt(q) == pytest.approx(sol.norm, rel=1e-8)

    def test_close_nodes_raise(self):
        p = InterpolationProblem.standard([1, 1 + 1e-7, 1 + 2e-7], [2, 2, 2], [np.ones(2)] * 3)
        with pytest.raises(ConditioningError) as err:
            min_norm_solve(p)
        assert err.value.pair is not None

    def test_kernel_expansion_derivative(self):
        f = KernelExpansion([KernelIndex(1 + 1j, 1)], [2.0])
        jet = f.jet(0.5, 2)
        h = 1e-5
        fd = (f(0.5 + h) - f(0.5 - h)) / (2 * h)
        assert jet.derivatives()[1] == pytest.approx(fd, rel=1e-7)


class TestDuality:
    def test_single_node(self):
        for lam in (1.0, 0.3 + 2j):
            p = single(lam)
            sqrt2x = math.sqrt(2 * np.real(lam))
            assert j_operator(p).norm == pytest.approx(sqrt2x, rel=1e-12)
            assert min_norm_sup(p) == pytest.approx(sqrt2x, rel=1e-12)

    def test_weight_doubling(self, rng):
        p = random_problem(rng, 4, 3)
        q = InterpolationProblem(p.nodes, p.multiplicities, [2 * g for g in p.weights], p.targets)
        assert j_operator(q).norm == pytest.approx(j_operator(p).norm / 2, rel=1e-10)

    def test_random(self, rng):
        for _ in range(20):
            p = random_problem(rng)
            J, m = j_operator(p).norm, min_norm_sup(p)
            assert abs(J - m) <= 1e-8 * max(J, m)

    def test_model_space_basis(self, rng):
        p = random_problem(rng, 4, 3)
        A = model_space_evaluation(p)
        G = gram_matrix(p.indices())
        assert np.max(np.abs(A @ A.conj().T - G)) <= 1e-10 * np.max(np.abs(G))

    def test_leibniz(self):
        # K = 1: ((z + conj(lam)) h)(lam) = 2 Re(lam) h(lam)
        assert leibniz_matrix(1.5, 1)[0, 0] == pytest.approx(3.0)

    def test_cauchy_estimate(self, rng):
        for _ in range(100):
            lam = complex(rng.uniform(0.2, 3), rng.uniform(-2, 2))
            K = int(rng.integers(1, 5))
            idx = [KernelIndex(complex(rng.uniform(0.1, 3), rng.uniform(-3, 3)), int(rng.integers(0, 3))) for _ in range(4)]
            h = KernelExpansion(idx, rng.normal(size=4) + 1j * rng.normal(size=4))
            r = lam.real / 4
            circle = lam + r * np.exp(2j * np.pi * np.arange(512) / 512)
            sup_h = np.max(np.abs(h(circle)))
            derivs = h.jet(lam, K).derivatives()
            L = leibniz_matrix(lam, K)
            for k in range(K):
                m = K - k - 1
                lhs = abs(L[k, :K] @ derivs[:K]) * math.factorial(m)
                assert lhs <= cauchy_constant(K) * math.factorial(m) * lam.real * sup_h * (1 + 1e-9)


class TestMcPhail:
    def test_zero(self):
        f = fc_construct(single(c=np.zeros(1)))
        assert f(2 + 1j) == 0

    def test_single(self):
        assert fc_construct(single())(1.0) == pytest.approx(1.0, abs=1e-14)

    def test_feasible_and_not_smaller(self, rng):
        for _ in range(5):
            p = random_problem(rng, 3, 2, min_sep=0.4)
            f = fc_construct(p)
            res = max(float(np.max(np.abs(r))) for r in p.residuals(f))
            assert res <= 1e-9 * max(1, max(np.linalg.norm(c) for c in p.targets))
            assert f.norm() >= min_norm_solve(p).norm * (1 - 1e-7)

    def test_jet_matches_values(self):
        p = InterpolationProblem.standard([1, 2 + 1j], [2, 1], [np.array([1, 2]), np.array([3])])
        f = fc_construct(p)
        z0 = 0.8 - 0.5j
        assert f.jet(z0, 0).coefficients[0] == pytest.approx(complex(f(z0)), rel=1e-12)


class TestAugment:
    def test_trivial(self):
        base = min_norm_solve(single())
        f = base.function
        g = augment_finite(base, [ExtraConditions(2.0, (1.0,), (complex(f(2.0)),))])
        assert g is f

    def test_extra_zero(self):
        base = min_norm_solve(single())
        g = augment_finite(base, [ExtraConditions(2.0, (1.0,), (0.0,))])
        assert abs(g(1.0) - 1) < 1e-10
        assert abs(g(2.0)) < 1e-10

    def test_value_and_derivative(self, rng):
        for _ in range(20):
            p = random_problem(rng, 3, 2)
            base = min_norm_solve(p)
            zeta = random_nodes(rng, 1)[0] + 4  # away from the base nodes
            a = rng.normal(size=2) + 1j * rng.normal(size=2)
            d = rng.normal(size=2) + 1j * rng.normal(size=2)
            g = augment_finite(base, [ExtraConditions(zeta, tuple(a), tuple(d))])
            got = a * g.jet(zeta, 1).derivatives()
            assert np.max(np.abs(got - d)) < 1e-9
            assert max(float(np.max(np.abs(r))) for r in p.residuals(g)) < 1e-9 * max(1, np.abs(p.hermite_data()).max())

    def test_coincident_point(self):
        base = min_norm_solve(single())
        with pytest.raises(DomainError):
            augment_finite(base, [ExtraConditions(1.0, (1.0,), (0.0,))])

    def test_zero_weight(self):
        base = min_norm_solve(single())
        with pytest.raises(InputError):
            augment_finite(base, [ExtraConditions(2.0, (0.0,), (0.0,))])
