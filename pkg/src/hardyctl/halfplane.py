"""Half-plane geometry and the reproducing-kernel calculus of H^2(C_+).

Conventions used throughout the package:

* interpolation nodes live in the open right half-plane ``Re z > 0``;
  eigenvalues of a stable generator (``Re < 0``) are mirrored by
  ``z = -lambda`` on the way in;
* the Hardy-space inner product is
  ``<f, g> = (1/2pi) * int_R f(iy) conj(g(iy)) dy``, for which
  ``k_lam(z) = 1/(z + conj(lam))`` is the reproducing kernel and the
  functional ``f -> f^(j)(lam)`` is represented by
  ``(-1)^j j! / (z + conj(lam))^(j+1)``.

Derivatives are always obtained from truncated power series (``TaylorJet``),
never from finite differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from hardyctl.errors import DomainError

INNER_PRODUCT_CONVENTION = "(1/2pi) int_R f(iy) conj(g(iy)) dy; kernel 1/(z+conj(lam))"


def _check_finite(z) -> None:
    if not np.all(np.isfinite(np.asarray(z, dtype=complex))):
        raise DomainError("point is not finite")


def as_right(z) -> complex:
    """Validate a point of the open right half-plane and return it as complex."""
    z = complex(z)
    _check_finite(z)
    if not z.real > 0:
        raise DomainError(f"{z} is not in the open right half-plane")
    return z


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point of the open right half-plane."""

    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", as_right(self.value))

    @classmethod
    def from_eigenvalue(cls, lam) -> "HalfPlanePoint":
        """Mirror a left-half-plane eigenvalue ``lam`` to ``-lam``."""
        lam = complex(lam)
        if not lam.real < 0:
            raise DomainError(f"eigenvalue {lam} is not in the open left half-plane")
        return cls(-lam)

    def __complex__(self):
        return self.value


class KernelIndex(NamedTuple):
    """The functional ``f -> f^(order)(node)``."""

    node: complex
    order: int


# ---------------------------------------------------------------------------
# truncated power series


class TaylorJet:
    """Truncated Taylor expansion ``sum_j c_j (z - center)^j`` to order ``m``.

    ``coefficients[j]`` is ``f^(j)(center)/j!``.  Arithmetic between jets of
    the same center and order is exact truncated-series arithmetic.
    """

    __slots__ = ("center", "coefficients")

    def __init__(self, center, coefficients):
        c = np.array(coefficients, dtype=complex).reshape(-1)
        if c.size < 1:
            raise ValueError("a jet needs at least one coefficient")
        self.center = complex(center)
        self.coefficients = c

    # construction helpers
    @classmethod
    def constant(cls, center, value, order: int) -> "TaylorJet":
        c = np.zeros(order + 1, dtype=complex)
        c[0] = value
        return cls(center, c)

    @classmethod
    def variable(cls, center, order: int) -> "TaylorJet":
        """The jet of the identity map ``z``."""
        c = np.zeros(order + 1, dtype=complex)
        c[0] = center
        if order >= 1:
            c[1] = 1.0
        return cls(center, c)

    @classmethod
    def from_derivatives(cls, center, derivatives) -> "TaylorJet":
        d = np.asarray(derivatives, dtype=complex)
        fact = np.array([math.factorial(j) for j in range(d.size)], dtype=float)
        return cls(center, d / fact)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def derivatives(self) -> np.ndarray:
        """Return ``f^(j)(center)`` for ``j = 0..order``."""
        fact = np.array([math.factorial(j) for j in range(self.coefficients.size)], dtype=float)
        return self.coefficients * fact

    def _coerce(self, other) -> "TaylorJet":
        if isinstance(other, TaylorJet):
            if other.center != self.center or other.order != self.order:
                raise ValueError("jets must share center and order")
            return other
        return TaylorJet.constant(self.center, other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        return TaylorJet(self.center, self.coefficients + other.coefficients)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(self.center, -self.coefficients)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TaylorJet):
            return TaylorJet(self.center, self.coefficients * complex(other))
        other = self._coerce(other)
        m = self.order
        return TaylorJet(self.center, np.convolve(self.coefficients, other.coefficients)[: m + 1])

    __rmul__ = __mul__

    def reciprocal(self) -> "TaylorJet":
        a = self.coefficients
        if a[0] == 0:
            raise ZeroDivisionError("jet has zero constant term")
        r = np.zeros_like(a)
        r[0] = 1.0 / a[0]
        for j in range(1, a.size):
            r[j] = -np.dot(a[1 : j + 1], r[j - 1 :: -1][:j]) / a[0]
        return TaylorJet(self.center, r)

    def __truediv__(self, other):
        if not isinstance(other, TaylorJet):
            return TaylorJet(self.center, self.coefficients / complex(other))
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        k = int(k)
        if k < 0:
            return self.reciprocal() ** (-k)
        result = TaylorJet.constant(self.center, 1.0, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __repr__(self):
        return f"TaylorJet(center={self.center!r}, coefficients={self.coefficients!r})"


def shift_reciprocal_jet(a, z0, order: int, power: int = 1) -> TaylorJet:
    """Jet of ``(z + a)^(-power)`` at ``z0`` in closed form."""
    base = z0 + a
    j = np.arange(order + 1)
    binom = np.array([math.comb(power + i - 1, i) for i in j], dtype=float)
    return TaylorJet(z0, binom * (-1.0) ** j / base ** (power + j))


# ---------------------------------------------------------------------------
# metrics


def _same_half_plane(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check_finite(a)
    _check_finite(b)
    ok = ((a.real > 0) & (b.real > 0)) | ((a.real < 0) & (b.real < 0))
    if not np.all(ok):
        raise DomainError("points must lie in the same open half-plane")
    return a, b


def pseudo_metric(a, b):
    """Pseudo-hyperbolic distance ``|(a - b)/(a + conj(b))|``.

    Works for both open half-planes and broadcasts over arrays.
    """
    a, b = _same_half_plane(a, b)
    p = np.abs((a - b) / (a + np.conj(b)))
    return float(p) if p.ndim == 0 else p


def hyper_metric(a, b):
    """Hyperbolic distance ``2 artanh p = log((1 + p)/(1 - p))``."""
    p = np.asarray(pseudo_metric(a, b))
    d = np.log1p(p) - np.log1p(-p)
    return float(d) if d.ndim == 0 else d


def blaschke(lam, z):
    """Blaschke factor ``b_lam(z) = (z - lam)/(z + conj(lam))``."""
    lam = as_right(lam)
    z = np.asarray(z, dtype=complex)
    return (z - lam) / (z + np.conj(lam))


def blaschke_inverse(lam, w):
    """Solve ``b_lam(z) = w`` for ``z`` (``|w| < 1`` gives a point of C_+)."""
    lam = as_right(lam)
    w = np.asarray(w, dtype=complex)
    return (lam + np.conj(lam) * w) / (1 - w)


def blaschke_jet(lam, k: int, z0, m: int) -> TaylorJet:
    """Taylor jet of ``b_lam^k`` at ``z0`` to order ``m``."""
    lam = as_right(lam)
    z0 = as_right(z0)
    if k < 0 or m < 0:
        raise DomainError("power and order must be nonnegative")
    num = TaylorJet.variable(z0, m) - lam
    b = num * shift_reciprocal_jet(np.conj(lam), z0, m)
    return b ** k


# ---------------------------------------------------------------------------
# reproducing kernels


def kernel_gram(i: KernelIndex, j: KernelIndex) -> complex:
    """``<R_j, R_i>`` where ``R`` represents ``f -> f^(order)(node)``.

    Equals ``(-1)^(p+q) (p+q)! / (lam + conj(mu))^(p+q+1)`` for
    ``i = (lam, p)``, ``j = (mu, q)``.
    """
    lam, p = as_right(i[0]), int(i[1])
    mu, q = as_right(j[0]), int(j[1])
    n = p + q
    return (-1) ** n * math.factorial(n) / (lam + np.conj(mu)) ** (n + 1)


def gram_matrix(indices: Sequence[KernelIndex]) -> np.ndarray:
    """Hermitian Gram matrix ``G[a, b] = kernel_gram(indices[a], indices[b])``."""
    nodes = np.array([complex(ix[0]) for ix in indices])
    orders = np.array([int(ix[1]) for ix in indices])
    if np.any(nodes.real <= 0):
        raise DomainError("kernel nodes must lie in the right half-plane")
    tot = orders[:, None] + orders[None, :]
    fact = np.array([math.factorial(int(t)) for t in range(int(tot.max(initial=0)) + 1)], dtype=float)
    base = nodes[:, None] + np.conj(nodes)[None, :]
    return (-1.0) ** tot * fact[tot] / base ** (tot + 1)


def representer(index: KernelIndex, z):
    """Evaluate the representer of ``f -> f^(j)(lam)`` at ``z``."""
    lam, j = as_right(index[0]), int(index[1])
    z = np.asarray(z, dtype=complex)
    return (-1) ** j * math.factorial(j) / (z + np.conj(lam)) ** (j + 1)


def mw_eval(lam, j: int, z):
    """Unit-norm Malmquist-Walsh function ``sqrt(2 Re lam) b_lam(z)^j / (z + conj(lam))``."""
    lam = as_right(lam)
    z = np.asarray(z, dtype=complex)
    return math.sqrt(2 * lam.real) * blaschke(lam, z) ** j / (z + np.conj(lam))


# ---------------------------------------------------------------------------
# quadrature oracle


def h2_inner(
    f: Callable,
    g: Callable,
    *,
    scale: float = 1.0,
    peaks: Sequence[float] = (),
    epsabs: float = 1e-14,
    epsrel: float = 1e-12,
) -> complex:
    """``<f, g>`` by adaptive quadrature along the imaginary axis.

    The full line is mapped onto ``(-pi/2, pi/2)`` by ``y = scale * tan(t)``,
    so no truncation is involved.  ``peaks`` are ordinates where the integrand
    is sharp (typically ``Im lam`` of nearby poles); they become breakpoints.
    """

    def integrand(t):
        y = scale * math.tan(t)
        z = 1j * y
        return complex(f(z) * np.conj(g(z))) * scale / math.cos(t) ** 2

    pts = sorted({math.atan(p / scale) for p in peaks})
    lo, hi = -math.pi / 2, math.pi / 2
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=1000)
    edges = [lo, *pts, hi]
    re = im = 0.0
    with warnings.catch_warnings():
        # roundoff notices at this tolerance level are expected
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= 0:
                continue
            re += integrate.quad(lambda t: integrand(t).real, a, b, **kw)[0]
            im += integrate.quad(lambda t: integrand(t).imag, a, b, **kw)[0]
    return complex(re, im) / (2 * math.pi)


def h2_norm(f: Callable, **kw) -> float:
    return math.sqrt(max(h2_inner(f, f, **kw).real, 0.0))
