"""Weighted multiple (Hermite) interpolation in H^2 of the right half-plane.

Problem: given distinct nodes ``lam_n`` with multiplicities ``K_n``,
invertible ``K_n x K_n`` weight matrices ``G_n`` and targets ``c_n``, find
``f`` in H^2 with ``G_n (f(lam_n), f'(lam_n), ..., f^(K_n-1)(lam_n)) = c_n``.

Two independent solution routes are provided:

* :func:`min_norm_solve` projects onto the span of derivative-evaluation
  representers (Gram/normal equations);
* :func:`fc_construct` builds the explicit McPhail interpolant from
  Blaschke products, which is feasible but usually not minimal.

:func:`j_operator` assembles the embedding operator whose norm equals the
worst-case minimal interpolation norm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg

from hardyctl.carleson import AtomicMeasure
from hardyctl.errors import ConditioningError, DomainError, InputError, NumericalError
from hardyctl.halfplane import (
    KernelIndex,
    TaylorJet,
    as_right,
    blaschke,
    blaschke_jet,
    gram_matrix,
    h2_inner,
    h2_norm,
    pseudo_metric,
    shift_reciprocal_jet,
)

MAX_MULTIPLICITY = 8
WARN_MULTIPLICITY = 5
COND_FALLBACK = 1e10
COND_LIMIT = 1e12


def standard_weight(lam, K: int) -> np.ndarray:
    """``diag((Re lam)^(k+1/2) / k!)``, the classical Vasyunin normalisation."""
    x = as_right(lam).real
    return np.diag([x ** (k + 0.5) / math.factorial(k) for k in range(K)]).astype(complex)


@dataclass(frozen=True, eq=False)
class InterpolationProblem:
    nodes: np.ndarray
    multiplicities: tuple
    weights: tuple
    targets: tuple
    weight_conditions: tuple = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=complex).reshape(-1)
        for z in nodes:
            as_right(z)
        if np.unique(nodes).size != nodes.size:
            raise InputError("interpolation nodes must be distinct")
        K = tuple(int(k) for k in self.multiplicities)
        if len(K) != nodes.size or any(k < 1 for k in K):
            raise InputError("need one multiplicity >= 1 per node")
        if max(K, default=1) > MAX_MULTIPLICITY:
            raise InputError(f"multiplicities above {MAX_MULTIPLICITY} are not supported")
        if max(K, default=1) > WARN_MULTIPLICITY:
            warnings.warn("large multiplicities: constants degrade quickly", RuntimeWarning, stacklevel=3)
        G = tuple(np.asarray(g, dtype=complex).reshape(k, k) for g, k in zip(self.weights, K))
        c = tuple(np.asarray(v, dtype=complex).reshape(k) for v, k in zip(self.targets, K))
        if len(G) != nodes.size or len(c) != nodes.size:
            raise InputError("need one weight matrix and one target vector per node")
        conds = []
        for n, g in enumerate(G):
            cond = np.linalg.cond(g)
            if not np.isfinite(cond) or cond > 1e14:
                raise InputError(f"weight matrix of node {n} is singular (cond={cond:.3g})")
            conds.append(float(cond))
        for name, val in (("nodes", nodes), ("multiplicities", K), ("weights", G), ("targets", c)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "weight_conditions", tuple(conds))

    @classmethod
    def standard(cls, nodes, multiplicities, targets=None) -> "InterpolationProblem":
        nodes = np.asarray(nodes, dtype=complex)
        K = [int(k) for k in multiplicities]
        G = [standard_weight(z, k) for z, k in zip(nodes, K)]
        if targets is None:
            targets = [np.zeros(k) for k in K]
        return cls(nodes, K, G, targets)

    def with_targets(self, targets) -> "InterpolationProblem":
        """Same nodes and weights, new targets (per-node vectors or one flat vector)."""
        if isinstance(targets, np.ndarray) and targets.ndim == 1:
            targets = self.split(targets)
        return InterpolationProblem(self.nodes, self.multiplicities, self.weights, targets)

    @property
    def size(self) -> int:
        return int(sum(self.multiplicities))

    def split(self, flat) -> list[np.ndarray]:
        flat = np.asarray(flat, dtype=complex)
        cuts = np.cumsum(self.multiplicities)[:-1]
        return np.split(flat, cuts)

    def indices(self) -> list[KernelIndex]:
        return [KernelIndex(complex(z), j) for z, K in zip(self.nodes, self.multiplicities) for j in range(K)]

    def blaschke_sum(self) -> float:
        """Finite section of the generalised Blaschke sum."""
        z = self.nodes
        return float(np.sum(np.asarray(self.multiplicities) * z.real / (1 + np.abs(z) ** 2)))

    def hermite_data(self) -> np.ndarray:
        """Plain derivative data ``v_n = G_n^{-1} c_n``, flattened."""
        if not self.size:
            return np.zeros(0, dtype=complex)
        return np.concatenate([np.linalg.solve(g, c) for g, c in zip(self.weights, self.targets)])

    def weight_inverse(self) -> np.ndarray:
        """Block-diagonal ``G^{-1}``."""
        return linalg.block_diag(*[np.linalg.inv(g) for g in self.weights]) if self.size else np.zeros((0, 0))

    def closest_pair(self) -> tuple[int, int] | None:
        n = self.nodes.size
        if n < 2:
            return None
        p = pseudo_metric(self.nodes[:, None], self.nodes[None, :])
        p[np.diag_indices(n)] = np.inf
        i, j = np.unravel_index(np.argmin(p), p.shape)
        return (int(min(i, j)), int(max(i, j)))

    def residuals(self, func) -> list[np.ndarray]:
        """``G_n f(lam_n) - c_n`` for an interpolant exposing ``jet``."""
        out = []
        for z, K, g, c in zip(self.nodes, self.multiplicities, self.weights, self.targets):
            out.append(g @ func.jet(z, K - 1).derivatives() - c)
        return out


# ---------------------------------------------------------------------------
# Blaschke data


def _product_jet(nodes, mults, z0, order, skip=None) -> TaylorJet:
    jet = TaylorJet.constant(z0, 1.0, order)
    for l, (z, K) in enumerate(zip(nodes, mults)):
        if l != skip and K:
            jet = jet * blaschke_jet(z, K, z0, order)
    return jet


def _product_value(nodes, mults, z, skip=None):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for l, (w, K) in enumerate(zip(nodes, mults)):
        if l != skip and K:
            out = out * blaschke(w, z) ** K
    return out


def beta(nodes, multiplicities, n: int) -> float:
    """``|prod_{l != n} b_{lam_l}(lam_n)^{K_l}|`` over the finite section."""
    nodes = np.asarray(nodes, dtype=complex)
    if np.unique(nodes).size != nodes.size:
        raise InputError("nodes must be distinct")
    z = as_right(nodes[n])
    logs = [K * math.log(abs(complex(blaschke(w, z)))) for l, (w, K) in enumerate(zip(nodes, multiplicities)) if l != n]
    return math.exp(math.fsum(logs))


@dataclass(frozen=True, eq=False)
class BnMatrix:
    """Derivative matrix of the Blaschke data at one node.

    ``matrix[j, k]`` is the ``j``-th derivative at ``lam_n`` of
    ``b_{lam_n}^k * prod_{l != n} b_{lam_l}^{K_l}``; it vanishes for
    ``j < k``.  ``scaled`` is ``(1/beta) diag((2 Re lam)^j / j!) matrix``
    written with the power index ``k`` as the row, which makes it upper
    triangular with unimodular diagonal.
    """

    n: int
    matrix: np.ndarray
    beta: float
    scaled: np.ndarray
    phase: complex


def bn_matrix(problem: InterpolationProblem, n: int) -> BnMatrix:
    z = problem.nodes[n]
    K = problem.multiplicities[n]
    P = _product_jet(problem.nodes, problem.multiplicities, z, K - 1, skip=n)
    B = np.empty((K, K), dtype=complex)
    for k in range(K):
        B[:, k] = (blaschke_jet(z, k, z, K - 1) * P).derivatives()
    b = beta(problem.nodes, problem.multiplicities, n)
    scale = np.array([(2 * z.real) ** j / math.factorial(j) for j in range(K)])
    scaled = ((scale[:, None] * B) / b).T
    if np.any(np.tril(scaled, -1) != 0):
        raise NumericalError("Blaschke derivative matrix lost its triangular structure")
    diag = np.abs(np.diag(scaled))
    if np.any(np.abs(diag - 1) > 1e-10):
        raise NumericalError("scaled Blaschke matrix has non-unimodular diagonal")
    phase = complex(P.coefficients[0]) / b
    return BnMatrix(n=n, matrix=B, beta=b, scaled=scaled, phase=phase)


def vasyunin_measure(problem: InterpolationProblem) -> AtomicMeasure:
    """Atoms at the nodes with weight ``(Re lam/beta^2) ||D G^{-1}||^2``.

    ``D = diag((Re lam)^(k+1/2)/k!)``; for standard weights ``G = D`` the
    weight reduces to ``Re lam / beta^2``.
    """
    w = []
    for n, (z, K, g) in enumerate(zip(problem.nodes, problem.multiplicities, problem.weights)):
        D = standard_weight(z, K)
        try:
            Ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise InputError(f"weight matrix of node {n} is singular") from exc
        b = beta(problem.nodes, problem.multiplicities, n)
        w.append(z.real / b**2 * np.linalg.norm(D @ Ginv, 2) ** 2)
    return AtomicMeasure(problem.nodes, w)


# ---------------------------------------------------------------------------
# minimal-norm solutions


class KernelExpansion:
    """``f = sum_a coeff_a R_a`` with ``R_a`` derivative-evaluation representers."""

    def __init__(self, indices: Sequence[KernelIndex], coefficients):
        self.indices = list(indices)
        self.coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)
        self._nodes = np.array([complex(ix[0]) for ix in self.indices])
        self._orders = np.array([int(ix[1]) for ix in self.indices], dtype=int)

    def __call__(self, z):
        return self.derivative(z, 0)

    def derivative(self, z, i: int):
        z = np.asarray(z, dtype=complex)
        tot = self._orders + i
        fact = np.array([float(math.factorial(int(t))) for t in tot])
        terms = (-1.0) ** tot * fact / (z[..., None] + np.conj(self._nodes)) ** (tot + 1)
        return terms @ self.coefficients

    def jet(self, z0, m: int) -> TaylorJet:
        d = [complex(self.derivative(z0, i)) for i in range(m + 1)]
        return TaylorJet.from_derivatives(z0, d)

    def norm(self) -> float:
        if not self.indices:
            return 0.0
        G = gram_matrix(self.indices)
        a = self.coefficients
        return math.sqrt(max(float(np.real(np.vdot(a, G @ a))), 0.0))


class ModelSpaceExpansion:
    """``f = sum_m x_m phi_m`` in the Malmquist-Walsh basis of the model space.

    ``phi_m = sqrt(2 Re a_m) prod_{i<m} b_{a_i} / (z + conj(a_m))`` is
    orthonormal, so ``|f| = |x|``.  Evaluation avoids the cancellation
    suffered by large representer coefficients.
    """

    def __init__(self, sequence, coefficients):
        self.sequence = np.asarray(sequence, dtype=complex).reshape(-1)
        self.coefficients = np.asarray(coefficients, dtype=complex).reshape(-1)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        prefix = np.ones(z.shape, dtype=complex)
        for a, x in zip(self.sequence, self.coefficients):
            out = out + x * math.sqrt(2 * a.real) * prefix / (z + np.conj(a))
            prefix = prefix * (z - a) / (z + np.conj(a))
        return out

    def jet(self, z0, m: int) -> TaylorJet:
        z0 = as_right(z0)
        total = TaylorJet.constant(z0, 0.0, m)
        for x, phi in zip(self.coefficients, _mw_jets(self.sequence, z0, m)):
            total = total + x * phi
        return total

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))


def _mw_jets(sequence, z0, m) -> list[TaylorJet]:
    prefix = TaylorJet.constant(z0, 1.0, m)
    out = []
    for a in sequence:
        out.append(prefix * shift_reciprocal_jet(np.conj(a), z0, m) * math.sqrt(2 * a.real))
        prefix = prefix * blaschke_jet(a, 1, z0, m)
    return out


def _mw_sequence(problem: InterpolationProblem) -> list[complex]:
    return [complex(z) for z, K in zip(problem.nodes, problem.multiplicities) for _ in range(K)]


@dataclass(frozen=True, eq=False)
class MinNormSolution:
    problem: InterpolationProblem
    function: KernelExpansion
    coefficients: np.ndarray
    norm: float
    residuals: list
    condition: float
    method: str
    orthogonality: float | None = None

    @property
    def max_residual(self) -> float:
        return max((float(np.max(np.abs(r))) for r in self.residuals), default=0.0)


class _GramFactor:
    """Block-preconditioned factorisation of the representer Gram matrix.

    Each node's diagonal block is whitened by its own Cholesky factor
    (``Gs = T Gram T^*`` with ``T`` block-diagonal), so the remaining
    conditioning reflects node separation only.
    """

    def __init__(self, problem: InterpolationProblem):
        self.problem = problem
        G = gram_matrix(problem.indices())
        G = (G + G.conj().T) / 2
        blocks, inv_blocks = [], []
        start = 0
        for K in problem.multiplicities:
            L = linalg.cholesky(G[start : start + K, start : start + K], lower=True)
            blocks.append(L)
            inv_blocks.append(linalg.solve_triangular(L, np.eye(K), lower=True))
            start += K
        self.T = linalg.block_diag(*inv_blocks)
        self.Tinv = linalg.block_diag(*blocks)
        Gs = self.T @ G @ self.T.conj().T
        Gs = (Gs + Gs.conj().T) / 2
        evals, evecs = np.linalg.eigh(Gs)
        cond = float(evals[-1] / evals[0]) if evals[0] > 0 else math.inf
        if cond > COND_LIMIT:
            raise ConditioningError(
                f"representer Gram matrix is too ill-conditioned (cond={cond:.3g}); "
                f"closest nodes {problem.closest_pair()}",
                cond=cond,
                pair=problem.closest_pair(),
            )
        self.gram, self.scaled, self.cond = G, Gs, cond
        self.method = "cholesky" if cond <= COND_FALLBACK else "eigh"
        if self.method == "cholesky":
            self.chol = linalg.cholesky(Gs, lower=True)
        else:
            self.evals, self.evecs = evals, evecs

    def _solve_scaled(self, rhs):
        if self.method == "cholesky":
            x = linalg.cho_solve((self.chol, True), rhs)
            for _ in range(2):  # iterative refinement
                x = x + linalg.cho_solve((self.chol, True), rhs - self.scaled @ x)
            return x
        return self.evecs @ ((self.evecs.conj().T @ rhs) / self.evals)

    def solve(self, v: np.ndarray) -> np.ndarray:
        return self.T.conj().T @ self._solve_scaled(self.T @ v)

    def inv_sqrt_apply(self, X: np.ndarray) -> np.ndarray:
        """``W`` with ``W^* W = X^* Gram^{-1} X``."""
        Y = self.T @ X
        if self.method == "cholesky":
            return linalg.solve_triangular(self.chol, Y, lower=True)
        return (self.evecs.conj().T @ Y) / np.sqrt(self.evals)[:, None]

    def sqrt_apply(self, M: np.ndarray) -> np.ndarray:
        """``W`` with ``W W^* = M Gram M^*``."""
        Y = M @ self.Tinv
        if self.method == "cholesky":
            return Y @ self.chol
        return (Y @ self.evecs) * np.sqrt(self.evals)[None, :]


def min_norm_solve(problem: InterpolationProblem, *, certify: bool = False, n_certificates: int = 3) -> MinNormSolution:
    """Minimal-norm interpolant.

    ``coefficients`` solve ``Gram a = v`` with ``v = G^{-1} c``, so that
    ``f = sum_a coeff_a R_a`` and ``|f|^2 = v^* Gram^{-1} v``.  The returned
    ``function`` is the same element written in the orthonormal
    Malmquist-Walsh basis (coordinates ``A^{-1} v``), which keeps residuals
    small when the Gram matrix is badly conditioned.  With ``certify=True``
    the orthogonality of the solution to ``B * k_mu`` (``B`` the Blaschke
    product of the nodes) is checked by quadrature for a few kernels ``k_mu``.
    """
    idx = problem.indices()
    v = problem.hermite_data()
    seq = _mw_sequence(problem)
    if not idx or not np.any(v):
        f = ModelSpaceExpansion(seq, np.zeros(len(idx)))
        res = problem.residuals(f)
        return MinNormSolution(problem, f, np.zeros(len(idx), dtype=complex), 0.0, res, 1.0, "trivial", 0.0 if certify else None)
    fac = _GramFactor(problem)
    a = fac.solve(v)
    A = model_space_evaluation(problem)
    x = np.linalg.solve(A, v)
    x = x + np.linalg.solve(A, v - A @ x)
    f = ModelSpaceExpansion(seq, x)
    norm = f.norm()
    res = problem.residuals(f)
    ortho = _orthogonality_certificate(problem, f, n_certificates) if certify else None
    return MinNormSolution(problem, f, a, norm, res, fac.cond, fac.method, ortho)


def _orthogonality_certificate(problem, f, count) -> float:
    nodes, mults = problem.nodes, problem.multiplicities
    scale = float(np.median(np.abs(nodes)))
    peaks = [float(z.imag) for z in nodes]
    worst = 0.0
    rng = np.random.default_rng(0)
    for _ in range(count):
        mu = complex(rng.uniform(0.5, 2.0) * scale, rng.uniform(-1, 1) * scale)
        g = lambda z, mu=mu: _product_value(nodes, mults, z) / (z + np.conj(mu))
        val = abs(h2_inner(f, g, scale=scale, peaks=peaks + [mu.imag]))
        worst = max(worst, val / max(f.norm(), 1e-300))
    return worst


def model_space_evaluation(problem: InterpolationProblem) -> np.ndarray:
    """Derivative data of the Malmquist-Walsh basis of ``H^2 - B H^2``.

    The basis is ``phi_m = sqrt(2 Re a_m) prod_{i<m} b_{a_i} / (z + conj(a_m))``
    with ``a`` listing node ``n`` ``K_n`` times; it is orthonormal, so
    ``A[I, m] = phi_m^(j)(lam)`` for ``I = (lam, j)`` satisfies
    ``A A^* = Gram`` with half the conditioning of the Gram matrix.
    """
    seq = _mw_sequence(problem)
    A = np.zeros((problem.size, len(seq)), dtype=complex)
    row = 0
    for z, K in zip(problem.nodes, problem.multiplicities):
        for m, phi in enumerate(_mw_jets(seq, z, K - 1)):
            A[row : row + K, m] = phi.derivatives()
        row += K
    return A


def min_norm_sup(problem: InterpolationProblem) -> float:
    """``sup_{|c| = 1}`` of the minimal interpolation norm.

    In Malmquist-Walsh coordinates the minimal interpolant of ``c`` has
    coefficient vector ``A^{-1} G^{-1} c``, so the supremum is the largest
    singular value of ``A^{-1} G^{-1}``.
    """
    if not problem.size:
        return 0.0
    A = model_space_evaluation(problem)
    return float(np.linalg.norm(np.linalg.solve(A, problem.weight_inverse()), 2))


# ---------------------------------------------------------------------------
# embedding operator


def leibniz_matrix(lam, K: int) -> np.ndarray:
    """Row ``k`` maps ``(h(lam), ..., h^(K-1)(lam))`` to
    ``((z + conj(lam))^(K-k) h)^(K-k-1)(lam) / (K-k-1)!``.
    """
    x2 = 2 * as_right(lam).real
    L = np.zeros((K, K), dtype=complex)
    for k in range(K):
        p = K - k
        for i in range(p):
            q = p - 1 - i  # derivatives falling on (z + conj(lam))^p
            L[k, i] = math.comb(p - 1, i) * math.perm(p, q) * x2 ** (p - q) / math.factorial(p - 1)
    return L


class JOperator(NamedTuple):
    matrix: np.ndarray
    norm: float


def j_operator(problem: InterpolationProblem) -> JOperator:
    """Embedding ``J = M E`` with ``E h = (h^(j)(lam_n))`` and explicit ``M``.

    Block ``n`` of ``M`` is ``(G_n^{-1})^T (B_n(lam_n)^{-1})^T L_n`` with
    ``L_n`` from :func:`leibniz_matrix`.  ``|J|^2`` is the top eigenvalue of
    ``M Gram M^*``, evaluated as ``|M A|^2`` with ``A A^* = Gram``.
    """
    if not problem.size:
        return JOperator(np.zeros((0, 0)), 0.0)
    blocks = []
    for n, (z, K, g) in enumerate(zip(problem.nodes, problem.multiplicities, problem.weights)):
        B = bn_matrix(problem, n).matrix
        blocks.append(np.linalg.inv(g).T @ np.linalg.inv(B).T @ leibniz_matrix(z, K))
    M = linalg.block_diag(*blocks)
    # J vanishes on B H^2, so only its action on the model space matters
    return JOperator(M, float(np.linalg.norm(M @ model_space_evaluation(problem), 2)))


# ---------------------------------------------------------------------------
# McPhail interpolant


class McPhailInterpolant:
    """``f_c = sum_n e_n sum_k b_{lam_n}^k P_n vt_{n,k}`` (see :func:`fc_construct`)."""

    def __init__(self, problem: InterpolationProblem):
        self.problem = problem
        nodes, mults = problem.nodes, problem.multiplicities
        self._vt = []
        self._q = []
        self._norms = []
        for n, (z, K, g, c) in enumerate(zip(nodes, mults, problem.weights, problem.targets)):
            B = bn_matrix(problem, n).matrix
            self._vt.append(np.linalg.solve(B, np.linalg.solve(g, c)))
            pv = complex(_product_value(nodes, mults, z, skip=n))
            self._norms.append(pv)
            # q_n(b(z)) must carry the reciprocal jet of the other factors of e_n
            rest = self._rest_jet(n, z, K - 1)
            target = rest.reciprocal().coefficients
            T = np.column_stack([blaschke_jet(z, i, z, K - 1).coefficients for i in range(K)])
            self._q.append(linalg.solve_triangular(T, target, lower=True))

    def _rest_jet(self, n, z0, m) -> TaylorJet:
        nodes, mults = self.problem.nodes, self.problem.multiplicities
        jet = _product_jet(nodes, mults, z0, m, skip=n) / self._norms[n]
        return jet * shift_reciprocal_jet(1.0, z0, m) * (1 + nodes[n])

    def jet(self, z0, m: int) -> TaylorJet:
        z0 = as_right(z0)
        nodes, mults = self.problem.nodes, self.problem.multiplicities
        total = TaylorJet.constant(z0, 0.0, m)
        for n, z in enumerate(nodes):
            if not np.any(self._vt[n]):
                continue
            b = blaschke_jet(z, 1, z0, m)
            q = TaylorJet.constant(z0, 0.0, m)
            for coef in self._q[n][::-1]:
                q = q * b + coef
            P = _product_jet(nodes, mults, z0, m, skip=n)
            inner = TaylorJet.constant(z0, 0.0, m)
            for coef in self._vt[n][::-1]:
                inner = inner * b + coef
            total = total + q * self._rest_jet(n, z0, m) * inner * P
        return total

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        nodes, mults = self.problem.nodes, self.problem.multiplicities
        out = np.zeros_like(z)
        for n, zn in enumerate(nodes):
            if not np.any(self._vt[n]):
                continue
            b = blaschke(zn, z)
            P = _product_value(nodes, mults, z, skip=n)
            rest = P / self._norms[n] * (1 + zn) / (z + 1)
            q = np.polyval(self._q[n][::-1], b)
            inner = np.polyval(self._vt[n][::-1], b)
            out = out + q * rest * inner * P
        return out

    def norm(self) -> float:
        nodes = self.problem.nodes
        scale = float(np.median(np.abs(nodes))) if nodes.size else 1.0
        return h2_norm(self, scale=scale, peaks=[float(z.imag) for z in nodes])


def fc_construct(problem: InterpolationProblem, *, tol: float = 1e-9) -> McPhailInterpolant:
    """Explicit feasible interpolant built from Blaschke products.

    ``e_n = q_n(b_{lam_n}) prod_{l != n} (b_{lam_l}/b_{lam_l}(lam_n))^{K_l} (1 + lam_n)/(z + 1)``
    with the polynomial ``q_n`` (degree ``< K_n``) chosen so that ``e_n`` has
    jet ``(1, 0, ..., 0)`` at ``lam_n``; ``e_n`` vanishes to order ``K_l`` at
    the other nodes and the ``1/(z + 1)`` factor puts it in H^2.
    """
    f = McPhailInterpolant(problem)
    scale = max(1.0, max((float(np.linalg.norm(c)) for c in problem.targets), default=1.0))
    worst = max((float(np.max(np.abs(r))) for r in problem.residuals(f)), default=0.0)
    if worst > tol * scale:
        raise NumericalError(f"McPhail interpolant misses its conditions by {worst:.3g}")
    return f


# ---------------------------------------------------------------------------
# finitely many extra conditions


class ExtraConditions(NamedTuple):
    """``weights[i] * g^(i)(point) = targets[i]`` for ``i = 0..r-1``."""

    point: complex
    weights: tuple
    targets: tuple


class AugmentedInterpolant:
    """``g = f + sum_blocks sum_i p_i B(z) (z - zeta)^(i-1) / (z + 1)^i``."""

    def __init__(self, base, terms):
        self.base = base
        self.terms = terms  # list of (zeta, p-vector, blaschke nodes, mults)

    def jet(self, z0, m: int) -> TaylorJet:
        z0 = as_right(z0)
        total = self.base.jet(z0, m)
        for zeta, p, nodes, mults in self.terms:
            total = total + _correction_jet(zeta, p, nodes, mults, z0, m)
        return total

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.asarray(self.base(z), dtype=complex)
        for zeta, p, nodes, mults in self.terms:
            B = _product_value(nodes, mults, z)
            for i, pi in enumerate(p, start=1):
                out = out + pi * B * (z - zeta) ** (i - 1) / (z + 1) ** i
        return out


def _correction_jet(zeta, p, nodes, mults, z0, m) -> TaylorJet:
    B = _product_jet(nodes, mults, z0, m)
    s = TaylorJet.variable(z0, m)
    total = TaylorJet.constant(z0, 0.0, m)
    for i, pi in enumerate(p, start=1):
        if pi:
            total = total + pi * B * (s - zeta) ** (i - 1) * shift_reciprocal_jet(1.0, z0, m, power=i)
    return total


def augment_finite(base: MinNormSolution, extra: Sequence[ExtraConditions], *, tol: float = 1e-9):
    """Add finitely many value/derivative conditions to a solved problem.

    For each extra point ``zeta`` with ``r`` conditions the corrector
    ``sum_i p_i B(z) (z - zeta)^(i-1)/(z + 1)^i`` is added, the ``p_i``
    being fixed one after another (the ``i``-th term is the first to reach the
    ``(i-1)``-th derivative at ``zeta``).  ``B`` vanishes on all earlier
    conditions, so they are preserved; for the next point ``B`` picks up the
    factor ``b_zeta^r``.  When no correction is needed the base function is
    returned unchanged.
    """
    problem = base.problem
    nodes = [complex(z) for z in problem.nodes]
    mults = list(problem.multiplicities)
    seen = set(nodes)
    terms = []
    current = base.function
    for cond in extra:
        zeta = as_right(cond.point)
        a = np.asarray(cond.weights, dtype=complex).reshape(-1)
        d = np.asarray(cond.targets, dtype=complex).reshape(-1)
        if a.size != d.size or a.size < 1:
            raise InputError("extra conditions need matching, nonempty weights and targets")
        if np.any(a == 0):
            raise InputError("extra condition weights must be nonzero")
        if zeta in seen:
            raise DomainError(f"extra point {zeta} coincides with an existing node")
        r = a.size
        g0 = current.jet(zeta, r - 1).derivatives()
        p = np.zeros(r, dtype=complex)
        for i in range(1, r + 1):
            have = g0[i - 1] + _correction_jet(zeta, p, nodes, mults, zeta, r - 1).derivatives()[i - 1]
            lead = _correction_jet(zeta, np.eye(r)[i - 1], nodes, mults, zeta, r - 1).derivatives()[i - 1]
            p[i - 1] = (d[i - 1] / a[i - 1] - have) / lead
        if np.any(p):
            terms.append((zeta, p, tuple(nodes), tuple(mults)))
            current = AugmentedInterpolant(base.function, list(terms))
        nodes.append(zeta)
        mults.append(r)
        seen.add(zeta)
    if not terms:
        return base.function
    g = current
    worst = max((float(np.max(np.abs(x))) for x in problem.residuals(g)), default=0.0)
    for cond in extra:
        a = np.asarray(cond.weights, dtype=complex).reshape(-1)
        d = np.asarray(cond.targets, dtype=complex).reshape(-1)
        got = a * g.jet(cond.point, a.size - 1).derivatives()
        worst = max(worst, float(np.max(np.abs(got - d))))
    if worst > tol:
        raise NumericalError(f"augmented interpolant misses its conditions by {worst:.3g}")
    return g
