"""Symmetric eigenvalue machinery.

Windowed tridiagonal eigensolves are delegated to LAPACK through scipy.
Eigenvalue *counting* never computes eigenvalues: the number of
eigenvalues below a shift E is the number of negative pivots of the
shifted LDL^T factorization (the Sturm sequence for tridiagonal input,
Bunch-Kaufman pivots for dense symmetric input).  That count is an exact
integer as long as no pivot is numerically singular; a singular pivot
raises :class:`SingularShift` and the caller retries with a nudged shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import SingularShift
from .operators import JacobiOperator

#: pivot magnitudes below SHIFT_TOL_FACTOR * scale count as singular
SHIFT_TOL_FACTOR = 1e-11
#: callers nudge a rejected shift by NUDGE_FACTOR * scale
NUDGE_FACTOR = 1e-9


@dataclass(frozen=True)
class CountResult:
    """Exact eigenvalue count over an interval (multiplicity included)."""

    count: int
    interval: tuple[float, float]
    shift_tolerance: float


@dataclass(frozen=True, eq=False)
class SpectralProjector:
    """Orthogonal projector onto the eigenspaces inside an interval."""

    matrix: np.ndarray
    interval: tuple[float, float]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix)))


def tridiagonal_parts(op) -> tuple[np.ndarray, np.ndarray]:
    """Normalize tridiagonal input to (diagonal, off_diagonal) arrays.

    Accepts a JacobiOperator or a (diagonal, off_diagonal) pair.  Raw pairs
    may carry off-diagonal entries of any sign (finite-difference matrices);
    the spectrum only depends on their absolute values.
    """
    if isinstance(op, JacobiOperator):
        return op.diagonal, op.off_diagonal
    diag, off = op
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    if off.shape != (diag.size - 1,):
        raise ValueError("off-diagonal must be one entry shorter than diagonal")
    return diag, off


def _scale(diag: np.ndarray, off: np.ndarray, shift: float = 0.0) -> float:
    top = abs(diag).max() if diag.size else 0.0
    if off.size:
        top = max(top, abs(off).max())
    return max(1.0, top, abs(shift))


def eig_tridiagonal(op, window: tuple[float, float] | None = None) -> np.ndarray:
    """Ascending eigenvalues of a symmetric tridiagonal matrix.

    With ``window=(lo, hi)``, returns exactly the eigenvalues in (lo, hi].
    """
    diag, off = tridiagonal_parts(op)
    if diag.size == 1:
        vals = diag.copy()
    elif window is None:
        vals = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    else:
        vals = scipy.linalg.eigh_tridiagonal(
            diag, off, eigvals_only=True, select="v", select_range=window)
    if window is not None and diag.size == 1:
        vals = vals[(vals > window[0]) & (vals <= window[1])]
    return np.sort(vals)


def eig_tridiagonal_vectors(op, window: tuple[float, float]):
    """Eigenpairs of a symmetric tridiagonal matrix inside a window."""
    diag, off = tridiagonal_parts(op)
    if diag.size == 1:
        keep = (diag > window[0]) & (diag <= window[1])
        return diag[keep], np.ones((1, int(keep.sum())))
    vals, vecs = scipy.linalg.eigh_tridiagonal(diag, off, select="v", select_range=window)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _sturm_negative_pivots(diag, off, shift, tol) -> int:
    d = diag[0] - shift
    negative = 0
    for k in range(1, diag.size):
        if abs(d) < tol:
            raise SingularShift(f"singular pivot at row {k - 1} for shift {shift!r}")
        if d < 0:
            negative += 1
        d = (diag[k] - shift) - off[k - 1] ** 2 / d
    if abs(d) < tol:
        raise SingularShift(f"singular pivot at last row for shift {shift!r}")
    if d < 0:
        negative += 1
    return negative


def _ldl_negative_pivots(matrix, shift, tol) -> int:
    shifted = matrix - shift * np.eye(matrix.shape[0])
    _, d, _ = scipy.linalg.ldl(shifted, lower=True)
    negative = 0
    i, n = 0, d.shape[0]
    while i < n:
        if i + 1 < n and d[i, i + 1] != 0.0:
            block = d[i:i + 2, i:i + 2]
            tr = block[0, 0] + block[1, 1]
            det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
            disc = np.sqrt(max(tr * tr / 4 - det, 0.0))
            pair = (tr / 2 - disc, tr / 2 + disc)
            for ev in pair:
                if abs(ev) < tol:
                    raise SingularShift(f"singular 2x2 pivot for shift {shift!r}")
                if ev < 0:
                    negative += 1
            i += 2
        else:
            ev = d[i, i]
            if abs(ev) < tol:
                raise SingularShift(f"singular pivot for shift {shift!r}")
            if ev < 0:
                negative += 1
            i += 1
    return negative


def count_below(op, shift: float, shift_tolerance: float | None = None) -> CountResult:
    """Number of eigenvalues strictly below ``shift``, by pivot signs.

    ``op`` may be tridiagonal (JacobiOperator or (diag, off) pair) or a
    dense symmetric ndarray.  Raises SingularShift when a factorization
    pivot falls below the tolerance, which signals that ``shift`` is
    numerically an eigenvalue of the matrix or of a leading minor; nudge
    the shift by ~NUDGE_FACTOR * scale and retry.
    """
    if isinstance(op, np.ndarray) and op.ndim == 2:
        scale = max(1.0, float(abs(op).max()), abs(shift))
        tol = shift_tolerance if shift_tolerance is not None else SHIFT_TOL_FACTOR * scale
        negative = _ldl_negative_pivots(op, shift, tol)
    else:
        diag, off = tridiagonal_parts(op)
        scale = _scale(diag, off, shift)
        tol = shift_tolerance if shift_tolerance is not None else SHIFT_TOL_FACTOR * scale
        if diag.size == 1:
            d = diag[0] - shift
            if abs(d) < tol:
                raise SingularShift(f"shift {shift!r} is an eigenvalue")
            negative = int(d < 0)
        else:
            negative = _sturm_negative_pivots(diag, off, shift, tol)
    return CountResult(negative, (-np.inf, shift), tol)


def count_in_interval(op, interval: tuple[float, float]) -> CountResult:
    """N(op in (lo, hi)) as a difference of two pivot counts."""
    lo, hi = interval
    if hi <= lo:
        return CountResult(0, (lo, hi), 0.0)
    below_hi = count_below(op, hi)
    below_lo = count_below(op, lo)
    return CountResult(below_hi.count - below_lo.count, (lo, hi), below_hi.shift_tolerance)


def nudge_off_spectra(value: float, spectra, tol: float, step: float | None = None,
                      bounds: tuple[float, float] | None = None) -> float:
    """Move a point until it clears every listed spectrum by ``tol``.

    Deterministic: steps alternate sides with growing magnitude.  Raises
    SingularShift if no admissible point is found within the bounds.
    """
    if step is None:
        step = 10.0 * tol
    spectra = [np.asarray(s, dtype=float) for s in spectra]

    def clear(x):
        return all(s.size == 0 or np.min(abs(s - x)) > tol for s in spectra)

    if clear(value):
        return value
    for attempt in range(1, 200):
        for sign in (1.0, -1.0):
            candidate = value + sign * attempt * step
            if bounds is not None and not (bounds[0] < candidate < bounds[1]):
                continue
            if clear(candidate):
                return candidate
    raise SingularShift(f"could not nudge {value!r} off the given spectra")


def spectral_projector(matrix: np.ndarray, interval: tuple[float, float],
                       endpoint_tol: float = 1e-8) -> SpectralProjector:
    """Projector onto eigenspaces of a dense symmetric matrix inside an interval."""
    vals, vecs = np.linalg.eigh(matrix)
    lo, hi = interval
    for endpoint in (lo, hi):
        if np.isfinite(endpoint) and vals.size and np.min(abs(vals - endpoint)) <= endpoint_tol:
            raise SingularShift(f"interval endpoint {endpoint!r} is on the spectrum")
    keep = (vals > lo) & (vals < hi)
    sel = vecs[:, keep]
    return SpectralProjector(sel @ sel.T, interval)


def projector_below(matrix: np.ndarray, shift: float,
                    endpoint_tol: float = 1e-8) -> SpectralProjector:
    return spectral_projector(matrix, (-np.inf, shift), endpoint_tol)
