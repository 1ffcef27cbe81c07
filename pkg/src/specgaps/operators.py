"""Tridiagonal (Jacobi) operator data.

Free and periodic base operators, sparsely stored perturbations of their
parameters, and the sign-split realization of a perturbation as a
difference of two positive semidefinite tridiagonal matrices.

Site convention: integers 0, 1, 2, ... on the half line; -N, ..., N on the
whole line (odd truncation size, default N = 2000 for experiments).  Bond n
couples sites n and n+1 and carries the off-diagonal entry a_n > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HALF_LINE = "half-line"
WHOLE_LINE = "whole-line"

#: default half-width of the symmetric whole-line truncation window
DEFAULT_WINDOW = 2000


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class JacobiOperator:
    """Finite truncation of a symmetric tridiagonal operator.

    ``diagonal`` holds one entry per site, ``off_diagonal`` one positive
    entry per bond (one fewer).  ``extent`` records whether the truncation
    windows a half-line or a whole-line operator, which fixes the site
    labels via ``first_site``.
    """

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    extent: str = HALF_LINE

    def __post_init__(self):
        diag = _readonly(self.diagonal)
        off = _readonly(self.off_diagonal)
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "off_diagonal", off)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("diagonal must be a nonempty 1-d sequence")
        if off.shape != (diag.size - 1,):
            raise ValueError("need exactly one off-diagonal entry per bond")
        if off.size and np.min(off) <= 0:
            raise ValueError("off-diagonal entries of a Jacobi matrix must be positive")
        if self.extent not in (HALF_LINE, WHOLE_LINE):
            raise ValueError(f"unknown extent {self.extent!r}")
        if self.extent == WHOLE_LINE and diag.size % 2 == 0:
            raise ValueError("whole-line truncations use a symmetric window of odd size")

    @property
    def size(self) -> int:
        return self.diagonal.size

    @property
    def first_site(self) -> int:
        return 0 if self.extent == HALF_LINE else -(self.size // 2)

    def site_index(self, site: int) -> int:
        """Array index of a site label."""
        return site - self.first_site

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diagonal)
        if self.off_diagonal.size:
            m += np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)
        return m

    def matrix_scale(self) -> float:
        """Magnitude scale used for shift tolerances; at least 1."""
        top = abs(self.diagonal).max()
        if self.off_diagonal.size:
            top = max(top, abs(self.off_diagonal).max())
        return max(1.0, float(top))


@dataclass(frozen=True, eq=False)
class JacobiPerturbation:
    """Finitely supported change of Jacobi parameters.

    ``delta_b[i]`` acts at site ``start + i`` and ``delta_a[i]`` at bond
    ``start + i``.  The arrays may have different lengths; the support is
    their union.  Stored densely over the (small) support so the l1 norm
    and sweeps over couplings are O(support).
    """

    delta_b: np.ndarray
    delta_a: np.ndarray
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "delta_b", _readonly(np.atleast_1d(self.delta_b)))
        object.__setattr__(self, "delta_a", _readonly(np.atleast_1d(self.delta_a)))

    @property
    def l1_norm(self) -> float:
        return float(abs(self.delta_a).sum() + abs(self.delta_b).sum())

    @property
    def last_site(self) -> int:
        return self.start + max(self.delta_b.size, self.delta_a.size) - 1

    def scaled(self, coupling: float) -> "JacobiPerturbation":
        return JacobiPerturbation(coupling * self.delta_b, coupling * self.delta_a, self.start)

    def b_at(self, site: int) -> float:
        i = site - self.start
        return float(self.delta_b[i]) if 0 <= i < self.delta_b.size else 0.0

    def a_at(self, bond: int) -> float:
        i = bond - self.start
        return float(self.delta_a[i]) if 0 <= i < self.delta_a.size else 0.0


@dataclass(frozen=True, eq=False)
class DiagonalPotential:
    """Real diagonal potential with its canonical positive/negative split."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    @property
    def positive_part(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)

    @property
    def negative_part(self) -> np.ndarray:
        return np.maximum(-self.values, 0.0)

    @property
    def l1_norm(self) -> float:
        return float(abs(self.values).sum())


@dataclass(frozen=True, eq=False)
class SignedJacobiPair:
    """Positive semidefinite split of a Jacobi perturbation.

    ``plus - minus`` reproduces the perturbation matrix on the window; both
    parts are PSD by diagonal dominance (each diagonal entry absorbs half
    the absolute value of its incident off-diagonal entries).
    """

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "plus", _readonly(self.plus))
        object.__setattr__(self, "minus", _readonly(self.minus))


def build_free(size: int, extent: str = HALF_LINE) -> JacobiOperator:
    """All hopping entries 1, all diagonal entries 0."""
    if size < 1:
        raise ValueError("size must be at least 1")
    return JacobiOperator(np.zeros(size), np.ones(size - 1), extent)


def build_periodic(period_a, period_b, size: int, extent: str = HALF_LINE) -> JacobiOperator:
    """Repeat one period of parameters over a truncation window.

    Site n carries diagonal ``period_b[n mod p]`` and bond n carries
    ``period_a[n mod p]``; for whole-line windows n runs over -N..N, so the
    pattern is anchored at site 0 regardless of the window size.
    """
    period_a = np.atleast_1d(np.asarray(period_a, dtype=float))
    period_b = np.atleast_1d(np.asarray(period_b, dtype=float))
    if period_a.size != period_b.size:
        raise ValueError("period_a and period_b must have the same length")
    if np.min(period_a) <= 0:
        raise ValueError("off-diagonal period entries must be positive")
    if size < 1:
        raise ValueError("size must be at least 1")
    p = period_a.size
    first = 0 if extent == HALF_LINE else -(size // 2)
    sites = np.arange(first, first + size)
    diag = period_b[np.mod(sites, p)]
    off = period_a[np.mod(sites[:-1], p)]
    return JacobiOperator(diag, off, extent)


def apply_perturbation(base: JacobiOperator, pert: JacobiPerturbation) -> JacobiOperator:
    """Add a finitely supported parameter change to a base operator.

    Rejects supports sticking out of the truncation window and any
    resulting nonpositive hopping entry (the result would not be a Jacobi
    matrix).
    """
    first = base.first_site
    last = first + base.size - 1
    if pert.start < first or pert.start + pert.delta_b.size - 1 > last:
        raise ValueError("perturbation diagonal support outside the truncation window")
    if pert.delta_a.size and pert.start + pert.delta_a.size - 1 > last - 1:
        raise ValueError("perturbation bond support outside the truncation window")
    diag = base.diagonal.copy()
    off = base.off_diagonal.copy()
    i0 = base.site_index(pert.start)
    diag[i0:i0 + pert.delta_b.size] += pert.delta_b
    if pert.delta_a.size:
        off[i0:i0 + pert.delta_a.size] += pert.delta_a
        if np.min(off) <= 0:
            raise ValueError("perturbed off-diagonal entry is not positive")
    return JacobiOperator(diag, off, base.extent)


def split_signed(pert: JacobiPerturbation, size: int | None = None,
                 first_site: int | None = None) -> SignedJacobiPair:
    """Split a perturbation into a difference of PSD tridiagonal matrices.

    Diagonal of the +/- part at site n:
        max(0, +-db_n) + |da_{n-1}|/2 + |da_n|/2
    with off-diagonal +-da_n/2 on bond n.  The absolute values on the
    da terms make both parts diagonally dominant, hence PSD, for every
    sign pattern of the perturbation, and the +/- difference is exactly
    the perturbation matrix.
    """
    if size is None:
        size = max(pert.delta_b.size, pert.delta_a.size + 1)
        first_site = pert.start
    if first_site is None:
        first_site = 0
    sites = np.arange(first_site, first_site + size)
    db = np.array([pert.b_at(n) for n in sites])
    da = np.array([pert.a_at(n) for n in sites[:-1]])
    da_left = np.concatenate(([0.0], np.abs(da)))   # |da_{n-1}| seen from site n
    da_right = np.concatenate((np.abs(da), [0.0]))  # |da_n| seen from site n
    half = 0.5 * (da_left + da_right)
    plus = np.diag(np.maximum(db, 0.0) + half)
    minus = np.diag(np.maximum(-db, 0.0) + half)
    if size > 1:
        plus += np.diag(0.5 * da, 1) + np.diag(0.5 * da, -1)
        minus += np.diag(-0.5 * da, 1) + np.diag(-0.5 * da, -1)
    return SignedJacobiPair(plus, minus)
