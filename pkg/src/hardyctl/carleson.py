"""Finitely atomic measures on C_+ and their Carleson constants.

A Carleson square of size ``h`` centred at ordinate ``c`` is

    Q(c, h) = {x + iy : 0 < x <= h, |y - c| <= h/2}

(closed top and side edges).  The Carleson constant of a measure is
``sup_Q nu(Q) / h``; for an atomic measure the supremum is a maximum and is
found exactly by the sweep in :func:`carleson_constant`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from hardyctl.errors import DomainError, InputError
from hardyctl.halfplane import pseudo_metric

SQUARE_CONVENTION = "Q(c,h) = {0 < Re <= h, |Im - c| <= h/2}"


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite list of atoms ``(location, weight)`` in the right half-plane.

    Duplicated locations are merged by adding weights.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __init__(self, locations=(), weights=()):
        loc = np.asarray(locations, dtype=complex).reshape(-1)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if loc.shape != w.shape:
            raise InputError("locations and weights differ in length")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise InputError("atoms and weights must be finite")
        if np.any(loc.real <= 0):
            raise DomainError("atoms must lie in the open right half-plane")
        if np.any(w < 0):
            raise InputError("weights must be nonnegative")
        if loc.size:
            uniq, inv = np.unique(loc, return_inverse=True)
            if uniq.size < loc.size:
                merged = np.zeros(uniq.size)
                np.add.at(merged, inv, w)
                loc, w = uniq, merged
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[complex, float]]) -> "AtomicMeasure":
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    def __len__(self):
        return self.locations.size

    def scaled(self, t: float) -> "AtomicMeasure":
        return AtomicMeasure(self.locations, self.weights * t)

    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def atoms(self) -> list[tuple[complex, float]]:
        return [(complex(z), float(w)) for z, w in zip(self.locations, self.weights)]


class CarlesonSquare(NamedTuple):
    center: float
    size: float


def square_mass(m: AtomicMeasure, q: CarlesonSquare) -> float:
    c, h = float(q[0]), float(q[1])
    if not h > 0:
        raise DomainError("square size must be positive")
    x, y = m.locations.real, m.locations.imag
    inside = (x <= h) & (np.abs(y - c) <= h / 2)
    return math.fsum(m.weights[inside])


def _best_from_bottom(x, y, w, i):
    # squares whose bottom edge sits at y[i]; atom j enters once h >= t_j
    sel = y >= y[i]
    t = np.maximum(y[sel] - y[i], x[sel])
    order = np.argsort(t, kind="stable")
    t = t[order]
    mass = np.cumsum(w[sel][order])
    # only the last atom of a run of equal thresholds gives the full mass
    last = np.append(t[1:] != t[:-1], True)
    ratio = mass[last] / t[last]
    k = int(np.argmax(ratio))
    return float(ratio[k]), float(t[last][k])


def carleson_constant(m: AtomicMeasure, *, threads: int = 1, return_square: bool = False):
    """Exact ``sup_Q nu(Q)/h`` over all Carleson squares.

    For a square whose bottom edge is at the ordinate ``y_i`` of some atom,
    atom ``j`` (with ``y_j >= y_i``) is covered exactly when
    ``h >= max(y_j - y_i, x_j)``.  Sorting these thresholds gives every
    candidate square for that bottom edge in ``O(n log n)``; an optimal square
    can always be slid down until an atom sits on its bottom edge, so the
    overall cost is ``O(n^2 log n)``.
    """
    if len(m) == 0:
        return (0.0, None) if return_square else 0.0
    x, y, w = m.locations.real, m.locations.imag, m.weights
    idx = range(len(m))
    if threads > 1 and len(m) > 256:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: _best_from_bottom(x, y, w, i), idx))
    else:
        results = [_best_from_bottom(x, y, w, i) for i in idx]
    ratios = np.array([r[0] for r in results])
    best = int(np.argmax(ratios))  # first maximiser: deterministic
    if not return_square:
        return float(ratios[best])
    h = results[best][1]
    return float(ratios[best]), CarlesonSquare(float(y[best]) + h / 2, h)


def carleson_constant_bruteforce(m: AtomicMeasure) -> float:
    """Reference enumeration over the full candidate grid (``O(n^3)``).

    Sizes range over atom real parts and pairwise ordinate gaps, bottom edges
    over atom ordinates.  Slow; meant as an oracle for small measures.
    """
    if len(m) == 0:
        return 0.0
    x, y, w = m.locations.real, m.locations.imag, m.weights
    sizes = np.unique(np.concatenate([x, np.abs(y[:, None] - y[None, :]).ravel()]))
    sizes = sizes[sizes > 0]
    best = 0.0
    for h in sizes:
        for y0 in y:
            # membership from the bottom edge, avoiding the rounding of y0 + h/2
            inside = (x <= h) & (y >= y0) & (y - y0 <= h)
            best = max(best, math.fsum(w[inside]) / h)
    return best


def sampled_carleson_lower_bound(m: AtomicMeasure, n_samples: int, rng) -> float:
    """Max of ``nu(Q)/h`` over randomly drawn squares; a lower bound."""
    if len(m) == 0:
        return 0.0
    x, y = m.locations.real, m.locations.imag
    span = max(float(np.ptp(y)), float(x.max()))
    lo, hi = float(y.min()) - span, float(y.max()) + span
    best = 0.0
    chunk = 4096
    for start in range(0, n_samples, chunk):
        k = min(chunk, n_samples - start)
        h = np.exp(rng.uniform(np.log(x.min() / 4), np.log(4 * span), size=k))
        c = rng.uniform(lo, hi, size=k)
        inside = (x[None, :] <= h[:, None]) & (np.abs(y[None, :] - c[:, None]) <= h[:, None] / 2)
        mass = inside.astype(float) @ m.weights
        best = max(best, float(np.max(mass / h)))
    return best


def kernel_test_constant(m: AtomicMeasure, *, max_points: int = 2_000_000) -> float:
    """``sup_mu sum_n w_n Re(mu)/|lam_n + conj(mu)|^2`` over atoms and their midpoints.

    This is the measure tested against normalised reproducing kernels (up to
    the factor 2 of ``|k_mu|^2 = 1/(2 Re mu)``) and bounds the embedding
    constant from below.
    """
    if len(m) == 0:
        return 0.0
    lam, w = m.locations, m.weights
    n = lam.size
    iu = np.triu_indices(n, k=1)
    mids = (lam[iu[0]] + lam[iu[1]]) / 2
    tests = np.concatenate([lam, mids])
    if tests.size * n > max_points:
        tests = tests[: max(n, max_points // n)]
    best = 0.0
    chunk = max(1, max_points // (4 * n))
    for start in range(0, tests.size, chunk):
        mu = tests[start : start + chunk]
        vals = (mu.real[:, None] / np.abs(lam[None, :] + np.conj(mu)[:, None]) ** 2) @ w
        best = max(best, float(vals.max()))
    return best


def transfer_size_bound(R: float) -> tuple[float, float]:
    """Return ``(alpha, factor)`` for the pseudo-hyperbolic ball of radius ``R``.

    ``alpha`` bounds the relative change of the real part and the vertical
    displacement: the ball about ``-1`` is the disc with centre
    ``-(1+R^2)/(1-R^2)`` and radius ``2R/(1-R^2)``, so ``alpha = 2R/(1-R)``.
    An atom in a square of size ``h`` comes from an atom in a square of size
    ``factor * h`` with ``factor = 1 + 2 alpha (1 + alpha)``.
    """
    R = float(R)
    if not 0 <= R < 1:
        raise DomainError("R must lie in [0, 1)")
    alpha = max(2 * R / (1 - R), 2 * R / (1 - R * R))
    return alpha, 1 + 2 * alpha * (1 + alpha)


def ball_disc(R: float) -> tuple[complex, float]:
    """Euclidean centre and radius of ``{mu : p(-1, mu) <= R}``."""
    R = float(R)
    if not 0 <= R < 1:
        raise DomainError("R must lie in [0, 1)")
    return complex(-(1 + R * R) / (1 - R * R)), 2 * R / (1 - R * R)


def displaced_measure(m: AtomicMeasure, new_locations) -> AtomicMeasure:
    """Move each atom, keeping its weight (atoms must not be merged)."""
    return AtomicMeasure(new_locations, m.weights)


def max_displacement(old, new) -> float:
    """Largest pseudo-hyperbolic displacement between paired atoms."""
    return float(np.max(pseudo_metric(np.asarray(old), np.asarray(new)), initial=0.0))
