"""Resolvent-based admissibility bounds for truncated diagonal generators.

``A = diag(lambda_n)`` with ``Re lambda_n < 0``, a finite-rank observation
``C`` (``r x N``) and an optional perturbation ``Delta`` (diagonal or dense).
Half-plane suprema are evaluated on a logarithmic grid; every number here is
a finite-grid, finite-truncation certificate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from hardyctl.errors import DomainError, InputError, NumericalError


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the half-plane ``Re s > w``.

    ``Re s - w`` runs over ``[re_min, re_max]`` with ``per_decade`` points
    per decade; ``Im s`` takes ``n_imag`` equispaced values on
    ``[-im_factor * W, im_factor * W]`` with ``W = max |Im lambda_n|``, plus
    the ordinates ``Im lambda_n`` themselves (up to ``max_spectral``).
    """

    re_min: float = 1e-3
    re_max: float = 1e6
    per_decade: int = 40
    n_imag: int = 129
    im_factor: float = 2.0
    max_spectral: int = 512

    def refined(self) -> "GridSpec":
        return GridSpec(
            self.re_min, self.re_max, 2 * self.per_decade, 2 * self.n_imag - 1, self.im_factor, 2 * self.max_spectral
        )

    def real_offsets(self) -> np.ndarray:
        if not (0 < self.re_min < self.re_max) or self.per_decade < 1:
            raise InputError("empty grid")
        decades = math.log10(self.re_max / self.re_min)
        n = max(2, int(round(decades * self.per_decade)) + 1)
        return np.logspace(math.log10(self.re_min), math.log10(self.re_max), n)

    def imag_values(self, eigenvalues) -> np.ndarray:
        lam = np.asarray(eigenvalues, dtype=complex)
        W = float(np.max(np.abs(lam.imag), initial=0.0))
        if W == 0:
            return np.zeros(1)
        base = np.linspace(-self.im_factor * W, self.im_factor * W, max(1, self.n_imag))
        spec = np.unique(lam.imag)
        if spec.size > self.max_spectral:
            spec = spec[np.linspace(0, spec.size - 1, self.max_spectral).astype(int)]
        return np.unique(np.concatenate([base, spec, [0.0]]))

    def points(self, w: float, eigenvalues) -> np.ndarray:
        x = w + self.real_offsets()
        y = self.imag_values(eigenvalues)
        return (x[:, None] + 1j * y[None, :]).ravel()


DEFAULT_GRID = GridSpec()


@dataclass(frozen=True, eq=False)
class ResolventModel:
    eigenvalues: np.ndarray
    observation: np.ndarray
    perturbation: np.ndarray | None = None
    dissipative: bool = False

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(lam)) or np.any(lam.real >= 0):
            raise DomainError("eigenvalues must be finite with negative real part")
        C = np.atleast_2d(np.asarray(self.observation, dtype=complex))
        if C.shape[1] != lam.size:
            raise InputError(f"observation has {C.shape[1]} columns, expected {lam.size}")
        if not np.all(np.isfinite(C)):
            raise InputError("observation matrix must be finite")
        D = self.perturbation
        if D is not None:
            D = np.asarray(D, dtype=complex)
            if D.ndim == 1 and D.size != lam.size or D.ndim == 2 and D.shape != (lam.size, lam.size) or D.ndim > 2:
                raise InputError("perturbation must be a length-N vector or an N x N matrix")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "observation", C)
        object.__setattr__(self, "perturbation", D)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def generator(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def delta_matrix(self) -> np.ndarray:
        D = self.perturbation
        if D is None:
            return np.zeros((self.size, self.size), dtype=complex)
        return np.diag(D) if D.ndim == 1 else D

    def delta_is_dissipative(self) -> bool:
        """``Re <Delta x, x> <= 0`` for all ``x`` (Hermitian part is negative semidefinite)."""
        D = self.delta_matrix()
        H = (D + D.conj().T) / 2
        return bool(np.linalg.eigvalsh(H).max(initial=0.0) <= 1e-12)

    def perturbed(self) -> "ResolventModel":
        """Model for ``A + Delta`` (diagonal perturbations only)."""
        D = self.perturbation
        if D is None:
            return ResolventModel(self.eigenvalues, self.observation)
        if D.ndim != 1:
            raise InputError("perturbed() needs a diagonal perturbation")
        return ResolventModel(self.eigenvalues + D, self.observation)


def _resolvent_norms(model: ResolventModel, s: np.ndarray, chunk: int = 2048) -> np.ndarray:
    lam = model.eigenvalues
    C = model.observation
    out = np.empty(s.size)
    for start in range(0, s.size, chunk):
        ss = s[start : start + chunk]
        diff = ss[:, None] - lam[None, :]
        if np.any(diff == 0):
            raise NumericalError("resolvent evaluated at an eigenvalue")
        inv2 = 1.0 / np.abs(diff) ** 2
        if C.shape[0] == 1:
            out[start : start + chunk] = np.sqrt(inv2 @ np.abs(C[0]) ** 2)
        else:
            Mt = np.einsum("in,sn,jn->sij", C, inv2, C.conj())
            out[start : start + chunk] = np.sqrt(np.maximum(np.linalg.eigvalsh(Mt)[:, -1], 0.0))
    return out


def resolvent_norm(model: ResolventModel, s: complex) -> float:
    """``|C (s - A)^{-1}|``, the largest singular value of ``C[i, n]/(s - lambda_n)``."""
    s = complex(s)
    if np.any(s == model.eigenvalues):
        raise NumericalError(f"s = {s} is an eigenvalue")
    return float(_resolvent_norms(model, np.array([s]))[0])


def _fit(model, w, grid):
    s = grid.points(w, model.eigenvalues)
    if s.size == 0:
        raise InputError("empty grid")
    vals = _resolvent_norms(model, s) * np.sqrt(s.real - w)
    k = int(np.argmax(vals))
    return float(vals[k]), complex(s[k])


def weiss_fit(model: ResolventModel, w: float = 0.0, grid: GridSpec = DEFAULT_GRID) -> tuple[float, float]:
    """Smallest ``M`` with ``|C (s-A)^{-1}| <= M / sqrt(Re s - w)`` on the grid.

    Returns ``(M, sup_defect)`` where ``sup_defect`` is the relative increase
    of ``M`` when the grid is refined twofold (0 when refinement changes
    nothing); a large defect means the grid does not resolve the supremum.
    """
    M, _ = _fit(model, w, grid)
    M2, _ = _fit(model, w, grid.refined())
    defect = max(M2 - M, 0.0) / M if M > 0 else 0.0
    return M, defect


def admissibility_gram(model: ResolventModel) -> float:
    """Best ``K`` in ``int_0^inf |C T(t) x|^2 dt <= K |x|^2`` on the truncation.

    The integral is the quadratic form of ``Q[n, m] = (C^* C)[n, m] /
    (-lambda_n - conj(lambda_m))`` (up to the transposition that makes it
    ``x^* Q x``); ``K`` is its top eigenvalue.
    """
    lam = model.eigenvalues
    C = model.observation
    CC = C.conj().T @ C  # CC[m, n] = sum_i conj(C[i, m]) C[i, n]
    Q = CC / (-lam[None, :] - np.conj(lam)[:, None])
    Q = (Q + Q.conj().T) / 2
    ev = np.linalg.eigvalsh(Q)
    if ev[0] < -1e-10 * max(1.0, abs(ev[-1])):
        raise NumericalError(f"admissibility Gram matrix is indefinite (min eigenvalue {ev[0]:.3g})")
    return float(max(ev[-1], 0.0))


def _dense_gap_on_grid(model, w0, grid):
    D = model.delta_matrix()
    lam = model.eigenvalues
    s = grid.points(w0, lam)
    best = 0.0
    for si in s:
        best = max(best, float(np.linalg.norm(D / (si - lam)[None, :], 2)))
    return best


def delta_gap(model: ResolventModel, w0: float = 0.0, grid: GridSpec | None = None) -> float:
    """``sup_{Re s > w0} |Delta (s - A)^{-1}|``.

    For diagonal ``Delta`` the supremum is explicit: ``|s - lambda_n|`` is
    smallest on the line ``Re s = w0`` at ``Im s = Im lambda_n``, giving
    ``max_n |delta_n| / (w0 - Re lambda_n)`` (approached, not attained, as
    ``Re s -> w0``).  Dense perturbations are sampled on ``grid``.
    """
    D = model.perturbation
    if D is None:
        return 0.0
    lam = model.eigenvalues
    if D.ndim == 1:
        dist = w0 - lam.real
        if np.any(dist <= 0):
            raise DomainError("w0 must exceed every Re lambda_n")
        return float(np.max(np.abs(D) / dist))
    grid = grid or GridSpec(per_decade=10, n_imag=33)
    return _dense_gap_on_grid(model, w0, grid)


def delta_gap_sampled(model: ResolventModel, w0: float = 0.0, grid: GridSpec = DEFAULT_GRID) -> float:
    """Grid value of the gap (diagonal case); never exceeds :func:`delta_gap`."""
    D = model.perturbation
    if D is None:
        return 0.0
    if D.ndim == 2:
        return _dense_gap_on_grid(model, w0, grid)
    s = grid.points(w0, model.eigenvalues)
    best = 0.0
    for start in range(0, s.size, 2048):
        ss = s[start : start + 2048]
        best = max(best, float(np.max(np.abs(D)[None, :] / np.abs(ss[:, None] - model.eigenvalues[None, :]))))
    return best


def abound_from_resolvent(R: float, s: complex) -> tuple[float, float]:
    """Relative-bound constants ``(a, b) = (R, R |s|)`` from ``|Delta (s-A)^{-1}| = R``."""
    R = float(R)
    if R < 0:
        raise DomainError("R must be nonnegative")
    return R, R * abs(complex(s))


def perturbed_bounds(M: float, w: float, rho: float) -> tuple[float, float]:
    """Forward constant ``M / (1 - rho)`` and converse factor ``1 + rho``."""
    rho = float(rho)
    if rho < 0:
        raise DomainError("rho must be nonnegative")
    if rho >= 1:
        raise DomainError("forward bound needs rho < 1")
    return M / (1 - rho), 1 + rho


def converse_factor(rho: float) -> float:
    """``1 + rho``; valid for any bounded ``Delta (s-A)^{-1}``."""
    if rho < 0:
        raise DomainError("rho must be nonnegative")
    return 1 + float(rho)


def growth_bound(E_norm: float, t: float) -> float:
    """``exp(|E| t)``, the growth bound of ``A + Delta_1 + E`` with ``A + Delta_1`` dissipative."""
    if E_norm < 0 or t < 0:
        raise DomainError("E_norm and t must be nonnegative")
    return math.exp(E_norm * t)


def semigroup_norm(generator: np.ndarray, t: float) -> float:
    """``|exp(t X)|`` for a finite matrix generator."""
    return float(np.linalg.norm(linalg.expm(t * np.asarray(generator)), 2))


def analytic_constant(model: ResolventModel, w0: float = 0.0, grid: GridSpec = DEFAULT_GRID) -> float:
    """Measured ``m`` in ``|(s-A)^{-1}| <= m/|s|`` over the grid right of ``w0``."""
    s = grid.points(w0, model.eigenvalues)
    best = 0.0
    for start in range(0, s.size, 2048):
        ss = s[start : start + 2048]
        res = 1.0 / np.min(np.abs(ss[:, None] - model.eigenvalues[None, :]), axis=1)
        best = max(best, float(np.max(np.abs(ss) * res)))
    return best


@dataclass
class AdmissibilityReport:
    M: float
    w: float
    sup_defect: float
    gram_constant: float
    delta_gap: float
    analytic_constant: float
    delta_dissipative: bool
    M_forward: float | None = None
    converse: float | None = None
    perturbed_M: float | None = None
    verdicts: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    finite_section: bool = True


def analyze(model: ResolventModel, *, w: float = 0.0, w0: float = 0.0, grid: GridSpec = DEFAULT_GRID) -> AdmissibilityReport:
    M, defect = weiss_fit(model, w, grid)
    K = admissibility_gram(model)
    rho = delta_gap(model, w0)
    dissipative = model.delta_is_dissipative()
    fwd = conv = pm = None
    if model.perturbation is not None:
        conv = converse_factor(rho)
        if rho < 1:
            fwd = perturbed_bounds(M, w, rho)[0]
            if model.perturbation.ndim == 1:
                pm = weiss_fit(model.perturbed(), w, grid)[0]
    verdicts = {
        "admissible_on_grid": bool(np.isfinite(M)),
        "gram_finite": bool(np.isfinite(K)),
        "perturbation": bool(rho < 1),
        "hypotheses_met": bool(rho < 1 and dissipative),
    }
    return AdmissibilityReport(
        M=M,
        w=w,
        sup_defect=defect,
        gram_constant=K,
        delta_gap=rho,
        analytic_constant=analytic_constant(model, max(w0, 0.0), grid),
        delta_dissipative=dissipative,
        M_forward=fwd,
        converse=conv,
        perturbed_M=pm,
        verdicts=verdicts,
        grid=asdict(grid),
    )
