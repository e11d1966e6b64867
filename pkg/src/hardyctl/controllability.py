"""Controllability measures and perturbation criteria for diagonal/Jordan systems.

Eigenvalues are given in the open left half-plane; the associated measures
live on the right half-plane with atoms at ``-lambda_n``.  Everything here
is a finite-section computation over the supplied truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from hardyctl.carleson import AtomicMeasure, carleson_constant
from hardyctl.errors import DomainError, InputError, NumericalError
from hardyctl.halfplane import pseudo_metric
from hardyctl.interpolation import InterpolationProblem, vasyunin_measure


def _left_points(values, what="eigenvalues") -> np.ndarray:
    lam = np.asarray(values, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(lam)):
        raise InputError(f"{what} must be finite")
    if np.any(lam.real >= 0):
        bad = int(np.argmax(lam.real >= 0))
        raise DomainError(f"{what}[{bad}] = {lam[bad]} is not in the open left half-plane")
    return lam


@dataclass(frozen=True, eq=False)
class DiagonalSystem:
    eigenvalues: np.ndarray
    control: np.ndarray

    def __post_init__(self):
        lam = _left_points(self.eigenvalues)
        b = np.asarray(self.control, dtype=complex).reshape(-1)
        if b.shape != lam.shape:
            raise InputError("eigenvalues and control coefficients differ in length")
        if np.any(b == 0):
            raise InputError(f"control coefficient b[{int(np.argmax(b == 0))}] is zero")
        if np.unique(lam).size != lam.size:
            # two blocks for one eigenvalue rule out exact (and null) controllability
            raise InputError("repeated eigenvalue: one Jordan block per eigenvalue is required")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "control", b)

    @property
    def truncation(self) -> int:
        return self.eigenvalues.size

    def section(self, n: int) -> "DiagonalSystem":
        return DiagonalSystem(self.eigenvalues[:n], self.control[:n])


class JordanBlock(NamedTuple):
    eigenvalue: complex
    coefficients: tuple  # b_1..b_K


@dataclass(frozen=True, eq=False)
class JordanSystem:
    blocks: tuple

    def __post_init__(self):
        blocks = []
        for i, blk in enumerate(self.blocks):
            lam = complex(blk[0])
            _left_points([lam])
            b = tuple(complex(x) for x in blk[1])
            if not b:
                raise InputError(f"block {i} is empty")
            if b[-1] == 0:
                raise InputError(f"block {i}: last coefficient b_K is zero, weight matrix is singular")
            blocks.append(JordanBlock(lam, b))
        lams = [b.eigenvalue for b in blocks]
        if len(set(lams)) != len(lams):
            raise InputError("repeated eigenvalue: one Jordan block per eigenvalue is required")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([b.eigenvalue for b in self.blocks])

    @property
    def sizes(self) -> list[int]:
        return [len(b.coefficients) for b in self.blocks]


def jordan_weight_matrix(coefficients: Sequence[complex]) -> np.ndarray:
    """``G[r, j] = (-1)^j b_{r+j} / j!`` for ``r + j <= K`` (1-based ``r``)."""
    b = np.asarray(coefficients, dtype=complex)
    K = b.size
    G = np.zeros((K, K), dtype=complex)
    for r in range(1, K + 1):
        for j in range(K - r + 1):
            G[r - 1, j] = (-1) ** j * b[r + j - 1] / math.factorial(j)
    return G


class SeparationProduct(NamedTuple):
    value: float
    finite_section: bool


def _log_pair_matrix(lam: np.ndarray) -> np.ndarray:
    p = pseudo_metric(lam[:, None], lam[None, :])
    np.fill_diagonal(p, 1.0)
    return np.log(p)


def log_separation_products(lam) -> np.ndarray:
    """``log d_n`` with ``d_n = prod_{k != n} p(lam_n, lam_k)``."""
    lam = np.asarray(lam, dtype=complex)
    if np.unique(lam).size != lam.size:
        raise InputError("repeated eigenvalue")
    if lam.size > 4000:
        out = np.empty(lam.size)
        for s in range(0, lam.size, 1000):
            p = pseudo_metric(lam[s : s + 1000, None], lam[None, :])
            p[np.arange(p.shape[0]), np.arange(s, s + p.shape[0])] = 1.0
            out[s : s + 1000] = np.log(p).sum(axis=1)
        return out
    return _log_pair_matrix(lam).sum(axis=1)


def separation_products(lam) -> np.ndarray:
    """``d_n = prod_{k != n} p(lam_n, lam_k)`` for every ``n`` (log-summed)."""
    return np.exp(log_separation_products(lam))


def separation_product(sys: DiagonalSystem, n: int) -> SeparationProduct:
    lam = sys.eigenvalues
    if not 0 <= n < lam.size:
        raise IndexError(n)
    others = np.delete(lam, n)
    val = math.exp(math.fsum(np.log(pseudo_metric(lam[n], others)))) if others.size else 1.0
    return SeparationProduct(val, True)


def exact_control_measure(sys) -> AtomicMeasure:
    """Atoms at ``-lambda_n`` with weight ``|Re lambda_n|^2 / (|b_n|^2 d_n^2)``.

    For a Jordan system the weights come from the weighted multiple
    interpolation measure with the Jordan weight matrices.
    """
    if isinstance(sys, JordanSystem):
        nodes = -sys.eigenvalues
        G = [jordan_weight_matrix(b.coefficients) for b in sys.blocks]
        problem = InterpolationProblem(nodes, sys.sizes, G, [np.zeros(k) for k in sys.sizes])
        return vasyunin_measure(problem)
    return _diagonal_measure(sys, 0.0)


def _diagonal_measure(sys: DiagonalSystem, tau: float) -> AtomicMeasure:
    # log-space so that tiny d_n and strong damping do not overflow separately
    lam, b = sys.eigenvalues, sys.control
    logw = 2 * (np.log(np.abs(lam.real)) - np.log(np.abs(b)) - log_separation_products(lam)) + 2 * tau * lam.real
    if np.any(logw > 709.0):
        n = int(np.argmax(logw))
        raise NumericalError(f"measure weight at lambda[{n}] overflows double precision (log weight {logw[n]:.1f})")
    return AtomicMeasure(-lam, np.exp(logw))


def null_control_measure(sys, tau: float) -> AtomicMeasure:
    """Exact-control weights damped by ``exp(2 tau Re lambda_n)``."""
    tau = float(tau)
    if not tau > 0:
        raise DomainError("tau must be positive")
    if isinstance(sys, DiagonalSystem):
        return _diagonal_measure(sys, tau)
    m = exact_control_measure(sys)
    # atoms sit at -lambda, so Re lambda = -Re(atom)
    return AtomicMeasure(m.locations, m.weights * np.exp(-2 * tau * m.locations.real))


# ---------------------------------------------------------------------------
# perturbation criteria


@dataclass(frozen=True, eq=False)
class PerturbationReport:
    eps: np.ndarray
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    sup_sum: float
    margin: float
    eta: float
    witness_i: int | None = None
    witness_ii: tuple | None = None
    argmax_iii: int | None = None
    sweep: list = field(default_factory=list)
    finite_section: bool = True

    @property
    def passed(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii


def _row_sums(lam, eps, upto=None):
    lam = lam[:upto]
    eps = eps[:upto]
    p = pseudo_metric(lam[:, None], lam[None, :])
    np.fill_diagonal(p, 1.0)
    q = np.abs(p - 1 / p)
    s = (eps[:, None] + eps[None, :]) * q
    np.fill_diagonal(s, 0.0)
    return p, s.sum(axis=1)


def perturb_check(sys: DiagonalSystem, perturbed, *, eta: float = 0.0, sweep_tol: float = 0.1) -> PerturbationReport:
    """Evaluate conditions (i)-(iii) of the perturbation criterion.

    ``eps_n = p(lambda_n, mu_n)``.  (ii) uses the strict inequality
    ``eps_n + eps_k + eta < p_{n,k}``.  (iii) is a supremum over an infinite
    sequence; here it is declared bounded when the finite-section value grows
    by at most ``sweep_tol`` (relative) from half the truncation to the full
    truncation.
    """
    lam = sys.eigenvalues
    mu = np.asarray(perturbed, dtype=complex).reshape(-1)
    if mu.shape != lam.shape:
        raise InputError("perturbed eigenvalues differ in length")
    if np.any(mu.real == 0):
        raise DomainError("perturbed eigenvalue on the imaginary axis")
    mu = _left_points(mu, "perturbed eigenvalues")
    eps = np.atleast_1d(pseudo_metric(lam, mu))
    n = lam.size
    cond_i = bool(np.max(eps) < 1)
    witness_i = None if cond_i else int(np.argmax(eps))
    p, rows = _row_sums(lam, eps)
    if n > 1:
        gap = p - (eps[:, None] + eps[None, :])
        np.fill_diagonal(gap, np.inf)
        flat = int(np.argmin(gap))
        margin = float(gap.flat[flat])
        cond_ii = margin > eta
        witness_ii = None if cond_ii else tuple(sorted(np.unravel_index(flat, gap.shape)))
        witness_ii = None if witness_ii is None else tuple(int(i) for i in witness_ii)
    else:
        margin, cond_ii, witness_ii = math.inf, True, None
    sup_sum = float(rows.max()) if n else 0.0
    sweep = []
    for upto in sorted({max(1, n // 4), max(1, n // 2), n}):
        sweep.append((upto, float(_row_sums(lam, eps, upto)[1].max())))
    cond_iii = bool(np.isfinite(sup_sum))
    if cond_iii and n >= 4 and sweep[-2][1] > 0:
        cond_iii = sweep[-1][1] <= (1 + sweep_tol) * sweep[-2][1]
    return PerturbationReport(
        eps=eps,
        cond_i=cond_i,
        cond_ii=bool(cond_ii),
        cond_iii=bool(cond_iii),
        sup_sum=sup_sum,
        margin=margin,
        eta=eta,
        witness_i=witness_i,
        witness_ii=witness_ii,
        argmax_iii=int(np.argmax(rows)) if n else None,
        sweep=sweep,
    )


def perturbed_metric_lower_bound(p_nk: float, eps_n: float, eps_k: float) -> float:
    """Lower bound ``(p - s)/(1 - p s)`` for ``p(mu_n, mu_k)``, ``s = eps_n + eps_k``."""
    s = eps_n + eps_k
    if not s < p_nk:
        raise DomainError(f"eps_n + eps_k = {s} must be below p_nk = {p_nk}")
    if not p_nk * s < 1:
        raise DomainError("p_nk * (eps_n + eps_k) must be below 1")
    return p_nk * (1 - s / p_nk) / (1 - p_nk * s)


# ---------------------------------------------------------------------------
# worked examples


def heat_system(N: int) -> DiagonalSystem:
    """Eigenvalues ``-n^2``, ``n = 1..N``, unit control."""
    if N < 1:
        raise InputError("N must be positive")
    n = np.arange(1, N + 1, dtype=float)
    return DiagonalSystem(-(n**2), np.ones(N))


def wave_system(N: int) -> DiagonalSystem:
    """Eigenvalues ``-1 + i n``, ``n = -N..N``, unit control."""
    if N < 1:
        raise InputError("N must be positive")
    n = np.arange(-N, N + 1, dtype=float)
    return DiagonalSystem(-1 + 1j * n, np.ones(n.size))


def heat_pair_term(n, k):
    """``|p - 1/p|`` for the heat eigenvalues ``-n^2, -k^2``: ``4k^2n^2/|n^4 - k^4|``."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return 4 * k**2 * n**2 / np.abs((n * n - k * k) * (n * n + k * k))


def wave_pair_term(n, k):
    """``|p - 1/p|`` for the wave eigenvalues: ``4 / (|n-k| sqrt(4 + (n-k)^2))``."""
    d = np.abs(np.asarray(n, dtype=float) - np.asarray(k, dtype=float))
    return 4 / (d * np.sqrt(4 + d * d))


def direct_pair_term(lam_n, lam_k):
    p = np.asarray(pseudo_metric(lam_n, lam_k))
    return np.abs(p - 1 / p)


def heat_row_sum(n: int, kmax: int) -> float:
    """``sum_{k <= kmax, k != n} 4k^2n^2/|n^4 - k^4|``."""
    k = np.arange(1, kmax + 1, dtype=float)
    k = k[k != n]
    return float(np.sum(heat_pair_term(n, k)))


def heat_decay_sum(n: int, kmax: int | None = None) -> float:
    """``sum_{k <= kmax, k != n} k^2/|n^4 - k^4|`` (default ``kmax = 10 n``)."""
    kmax = 10 * n if kmax is None else kmax
    k = np.arange(1, kmax + 1, dtype=float)
    k = k[k != n]
    return float(np.sum(k**2 / np.abs((n * n - k * k) * (n * n + k * k))))


def wave_row_sum(n: int, kmax: int) -> float:
    """``sum_{|k| <= kmax, k != n} 4/(|n-k| sqrt(4 + (n-k)^2))``."""
    k = np.arange(-kmax, kmax + 1, dtype=float)
    k = k[k != n]
    return float(np.sum(wave_pair_term(n, k)))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


@dataclass(frozen=True, eq=False)
class ExampleSystem:
    name: str
    system: DiagonalSystem
    labels: np.ndarray  # integer n of each eigenvalue

    def closed_form(self, i: int, j: int) -> float:
        term = heat_pair_term if self.name == "heat" else wave_pair_term
        return float(term(self.labels[i], self.labels[j]))

    def direct(self, i: int, j: int) -> float:
        lam = self.system.eigenvalues
        return float(direct_pair_term(lam[i], lam[j]))

    def row_sum(self, i: int) -> float:
        n = self.labels[i]
        others = np.delete(self.labels, i)
        term = heat_pair_term if self.name == "heat" else wave_pair_term
        return float(np.sum(term(n, others)))


def heat_example(N: int) -> ExampleSystem:
    if N < 2:
        raise InputError("N must be at least 2")
    return ExampleSystem("heat", heat_system(N), np.arange(1, N + 1))


def wave_example(N: int) -> ExampleSystem:
    if N < 2:
        raise InputError("N must be at least 2")
    return ExampleSystem("wave", wave_system(N), np.arange(-N, N + 1))


def heat_admissible_perturbation(N: int, scale: float = 0.1) -> np.ndarray:
    """Perturbed heat eigenvalues with ``eps_n`` of order ``n^(-3/2)``.

    ``|lambda_n - mu_n| = scale * sqrt(n)`` along the real axis gives
    ``eps_n = scale sqrt(n) / (2 n^2 - scale sqrt(n))``.
    """
    n = np.arange(1, N + 1, dtype=float)
    return -(n**2) - scale * np.sqrt(n)


def carleson_sweep(measure_builder, N: int, sizes=None) -> list[tuple[int, float]]:
    """Carleson constants of the measure on growing truncations."""
    sizes = sizes or sorted({max(1, N // 4), max(1, N // 2), N})
    return [(n, carleson_constant(measure_builder(n))) for n in sizes]
