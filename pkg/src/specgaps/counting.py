"""Counting calculus for eigenvalues crossing into spectral gaps.

The central object is the resolvent sandwich K(E) = B^{1/2} (A-E)^{-1}
B^{1/2} for a PSD perturbation B.  For finite symmetric matrices its
eigenvalues beyond +1 (resp. below -1) count, with multiplicity, the
coupling values x in (0,1) at which an eigenvalue of A - xB (resp.
A + xB) passes through E.  Everything in this module is an exact integer
identity or inequality; counts are never compared with a floating
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import count_below, nudge_off_spectra
from .exceptions import HypothesisViolation, NotPSD, SingularShift

#: minimum distance of an admissible energy from each relevant spectrum
SPECTRUM_CLEARANCE = 1e-8
#: a PSD matrix may dip this far negative before NotPSD is raised
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BirmanSchwingerMatrix:
    matrix: np.ndarray
    energy: float
    side: str | None = None

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class CrossingCount:
    """Crossings of A + xB (delta_plus) and A - xB (delta_minus) through E."""

    delta_plus: int
    delta_minus: int
    energy: float
    bs_evidence: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class DecouplingReport:
    """Gap count against the two one-sided resolvent counts.

    ``path_rhs_plus/minus`` record the weaker two-step bound whose second
    resolvent is taken at A + B_plus; they are reported, never asserted.
    """

    lhs: int
    rhs_plus: int
    rhs_minus: int
    holds: bool
    path_rhs_plus: int | None = None
    path_rhs_minus: int | None = None


@dataclass(frozen=True)
class EqualityReport:
    lhs: int
    rhs: int
    holds: bool
    detail: str = ""


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool
    slack: float = 0.0


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _is_diagonal(m: np.ndarray) -> bool:
    return np.count_nonzero(m - np.diag(np.diagonal(m))) == 0


def psd_sqrt(b: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Symmetric PSD square root; entrywise for diagonal input."""
    scale = max(1.0, float(abs(b).max()))
    if _is_diagonal(b):
        d = np.diagonal(b)
        if d.min() < -tol * scale:
            raise NotPSD("diagonal matrix has a negative entry")
        return np.diag(np.sqrt(np.maximum(d, 0.0)))
    vals, vecs = np.linalg.eigh(_symmetrize(b))
    if vals.min() < -tol * scale:
        raise NotPSD(f"matrix has eigenvalue {vals.min():.3e}")
    root = vecs * np.sqrt(np.maximum(vals, 0.0))
    return _symmetrize(root @ vecs.T)


def _require_off_spectrum(a: np.ndarray, energy: float, clearance: float,
                          what: str = "A") -> np.ndarray:
    vals = np.linalg.eigvalsh(a)
    if np.min(abs(vals - energy)) <= clearance:
        raise SingularShift(f"energy {energy!r} is within {clearance} of sigma({what})")
    return vals


def bs_matrix(a: np.ndarray, b: np.ndarray, energy: float, side: str | None = None,
              clearance: float = SPECTRUM_CLEARANCE) -> BirmanSchwingerMatrix:
    """Assemble B^{1/2} (A - E)^{-1} B^{1/2} for PSD B."""
    a = _symmetrize(np.asarray(a, dtype=float))
    root = psd_sqrt(np.asarray(b, dtype=float))
    vals, vecs = np.linalg.eigh(a)
    if np.min(abs(vals - energy)) <= clearance:
        raise SingularShift(f"energy {energy!r} is within {clearance} of sigma(A)")
    resolvent = (vecs / (vals - energy)) @ vecs.T
    return BirmanSchwingerMatrix(_symmetrize(root @ resolvent @ root), energy, side)


def delta_counts(a: np.ndarray, b: np.ndarray, energy: float,
                 clearance: float = SPECTRUM_CLEARANCE) -> CrossingCount:
    """Crossing counts read off the resolvent-sandwich spectrum.

    delta_minus = N(K > 1), delta_plus = N(K < -1).  Requires the energy
    to clear sigma(A), sigma(A+B) and sigma(A-B) so both counts are
    unambiguous integers.
    """
    _require_off_spectrum(a, energy, clearance, "A")
    _require_off_spectrum(a + b, energy, clearance, "A+B")
    _require_off_spectrum(a - b, energy, clearance, "A-B")
    k = bs_matrix(a, b, energy, clearance=clearance)
    mu = k.eigenvalues()
    return CrossingCount(int(np.sum(mu < -1.0)), int(np.sum(mu > 1.0)), energy, mu)


def crossing_oracle(a: np.ndarray, b: np.ndarray, energy: float,
                    x_steps: int = 0) -> CrossingCount:
    """Crossing counts by inertia differences along the coupling path.

    delta_plus = N(A < E) - N(A + B < E) and delta_minus = N(A - B < E) -
    N(A < E); both exact because the eigenvalues of A + xB move
    monotonically for PSD B.  With ``x_steps`` > 0 a grid continuation
    additionally checks that the below-E count is monotone along the path.
    """
    n_a = count_below(np.asarray(a, dtype=float), energy).count
    n_plus = count_below(a + b, energy).count
    n_minus = count_below(a - b, energy).count
    delta_plus = n_a - n_plus
    delta_minus = n_minus - n_a
    if x_steps > 0:
        counts = []
        for x in np.linspace(0.0, 1.0, x_steps + 1):
            shift = energy
            for attempt in range(8):
                try:
                    counts.append(count_below(a + x * b, shift).count)
                    break
                except SingularShift:
                    shift = energy + (attempt + 1) * 1e-9 * max(1.0, abs(energy))
            else:
                raise SingularShift(f"grid continuation stuck at x={x}")
        diffs = np.diff(counts)
        if np.any(diffs > 0) or counts[0] - counts[-1] != delta_plus:
            raise HypothesisViolation("grid continuation disagrees with endpoint inertia")
    return CrossingCount(delta_plus, delta_minus, energy, None)


def check_decoupling(a, b_plus, b_minus, alpha: float, beta: float,
                     clearance: float = SPECTRUM_CLEARANCE,
                     record_path: bool = True) -> DecouplingReport:
    """Gap count of A + B_plus - B_minus against the cross-term-free bound.

    Requires [alpha, beta] to avoid sigma(A) entirely and both endpoints
    to clear the spectra of A, A+B_plus, A-B_minus and A+B_plus-B_minus.
    """
    a = _symmetrize(np.asarray(a, dtype=float))
    full = a + b_plus - b_minus
    spec_a = np.linalg.eigvalsh(a)
    if np.any((spec_a >= alpha - clearance) & (spec_a <= beta + clearance)):
        raise HypothesisViolation("[alpha, beta] intersects sigma(A)")
    for mat, name in ((a + b_plus, "A+B+"), (a - b_minus, "A-B-"), (full, "A+B+-B-")):
        vals = np.linalg.eigvalsh(mat)
        for endpoint in (alpha, beta):
            if np.min(abs(vals - endpoint)) <= clearance:
                raise HypothesisViolation(f"endpoint {endpoint!r} too close to sigma({name})")
    lhs = count_below(full, beta).count - count_below(full, alpha).count
    rhs_plus = int(np.sum(bs_matrix(a, b_plus, alpha).eigenvalues() < -1.0))
    rhs_minus = int(np.sum(bs_matrix(a, b_minus, beta).eigenvalues() > 1.0))
    path_plus = path_minus = None
    if record_path:
        path_plus = rhs_plus
        shifted = bs_matrix(a + b_plus, b_minus, beta).eigenvalues()
        path_minus = int(np.sum(shifted > 1.0))
    return DecouplingReport(lhs, rhs_plus, rhs_minus, lhs <= rhs_plus + rhs_minus,
                            path_plus, path_minus)


def gap_count_via_deltas(a, b_plus, b_minus, alpha: float, beta: float) -> EqualityReport:
    """Gap count recovered from four crossing counts along the +first path."""
    full = a + b_plus - b_minus
    direct = count_below(full, beta).count - count_below(full, alpha).count
    d_plus_alpha = delta_counts(a, b_plus, alpha).delta_plus
    d_plus_beta = delta_counts(a, b_plus, beta).delta_plus
    d_minus_beta = delta_counts(a + b_plus, b_minus, beta).delta_minus
    d_minus_alpha = delta_counts(a + b_plus, b_minus, alpha).delta_minus
    via = d_plus_alpha - d_plus_beta + d_minus_beta - d_minus_alpha
    return EqualityReport(direct, via, direct == via, "gap count vs four crossing counts")


def check_crossing_commutation(a, b_plus, b_minus, energy: float) -> EqualityReport:
    """Net crossings through E do not depend on the order of the two couplings.

    Both orderings are also checked against the direct inertia difference
    N(A < E) - N(A + B_plus - B_minus < E).
    """
    lhs = (delta_counts(a, b_plus, energy).delta_plus
           - delta_counts(a + b_plus, b_minus, energy).delta_minus)
    rhs = (-delta_counts(a, b_minus, energy).delta_minus
           + delta_counts(a - b_minus, b_plus, energy).delta_plus)
    direct = (count_below(np.asarray(a, dtype=float), energy).count
              - count_below(a + b_plus - b_minus, energy).count)
    holds = lhs == rhs == direct
    return EqualityReport(lhs, rhs, holds, f"direct inertia difference {direct}")


def _count_above(matrix: np.ndarray, level: float) -> int:
    return int(np.sum(np.linalg.eigvalsh(matrix) > level))


def ky_fan_check(c_mat, d_mat, c: float, d: float) -> EqualityReport:
    """N(C + D > c + d) <= N(C > c) + N(D > d) for symmetric C, D and c, d > 0."""
    if c <= 0 or d <= 0:
        raise ValueError("levels must be positive")
    lhs = _count_above(np.asarray(c_mat) + np.asarray(d_mat), c + d)
    rhs = _count_above(np.asarray(c_mat), c) + _count_above(np.asarray(d_mat), d)
    return EqualityReport(lhs, rhs, lhs <= rhs, "level count subadditivity")


def ky_fan_factored_check(s_mat, t_mat, c: float, d: float) -> EqualityReport:
    """N((S+T)*(S+T) > c+d) <= N(S*S > c/2) + N(T*T > d/2)."""
    if c <= 0 or d <= 0:
        raise ValueError("levels must be positive")
    s = np.asarray(s_mat, dtype=float)
    t = np.asarray(t_mat, dtype=float)
    lhs = _count_above((s + t).T @ (s + t), c + d)
    rhs = _count_above(s.T @ s, c / 2.0) + _count_above(t.T @ t, d / 2.0)
    return EqualityReport(lhs, rhs, lhs <= rhs, "factored level count subadditivity")


def bs_principle_check(a, b_minus, energy: float,
                       clearance: float = SPECTRUM_CLEARANCE) -> EqualityReport:
    """Below the spectrum, N(A - B < E) equals the count of sandwich eigenvalues > 1."""
    a = _symmetrize(np.asarray(a, dtype=float))
    bottom = np.linalg.eigvalsh(a).min()
    if energy >= bottom - clearance:
        raise ValueError("energy must lie strictly below the spectrum of A")
    lhs = count_below(a - b_minus, energy).count
    rhs = int(np.sum(bs_matrix(a, b_minus, energy).eigenvalues() > 1.0))
    return EqualityReport(lhs, rhs, lhs == rhs, "one-sided resolvent count")


# ---------------------------------------------------------------------------
# random instances with a planted gap

@dataclass(frozen=True, eq=False)
class GapInstance:
    a: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    gap: tuple[float, float]
    energy: float
    alpha: float
    beta: float


def haar_orthogonal(gen: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-fixed QR."""
    q, r = np.linalg.qr(gen.standard_normal((n, n)))
    return q * np.sign(np.diagonal(r))


def random_psd(gen: np.random.Generator, n: int, rank: int, scale: float) -> np.ndarray:
    g = gen.standard_normal((n, rank))
    m = g @ g.T
    return _symmetrize(scale * m / max(1.0, np.linalg.norm(m, 2)))


def random_gap_instance(gen: np.random.Generator, dim_range=(8, 24),
                        gap_width=(0.6, 1.6)) -> GapInstance:
    """Random symmetric A with a planted spectral gap plus PSD B_+-.

    The admissible energy and gap endpoints are drawn inside the planted
    gap and nudged until they clear the spectra of A, A+B+, A-B- and
    A+B+-B- so that every genericity hypothesis holds exactly.
    """
    n = int(gen.integers(dim_range[0], dim_range[1] + 1))
    width = float(gen.uniform(*gap_width))
    center = float(gen.uniform(-1.0, 1.0))
    lo_edge, hi_edge = center - width / 2, center + width / 2
    n_lo = int(gen.integers(1, n))
    lows = gen.uniform(lo_edge - 2.5, lo_edge - 0.02, n_lo)
    highs = gen.uniform(hi_edge + 0.02, hi_edge + 2.5, n - n_lo)
    spectrum = np.concatenate([lows, highs])
    q = haar_orthogonal(gen, n)
    a = _symmetrize((q * spectrum) @ q.T)
    b_scale = float(gen.uniform(0.3, 1.4)) * width
    b_plus = random_psd(gen, n, int(gen.integers(1, max(2, n // 2) + 1)), b_scale)
    b_minus = random_psd(gen, n, int(gen.integers(1, max(2, n // 2) + 1)), b_scale)
    spectra = [np.linalg.eigvalsh(m) for m in
               (a, a + b_plus, a - b_minus, a + b_plus - b_minus)]
    inner_lo = lo_edge + 0.05 * width
    inner_hi = hi_edge - 0.05 * width
    energy = nudge_off_spectra(float(gen.uniform(inner_lo, inner_hi)), spectra,
                               tol=SPECTRUM_CLEARANCE, bounds=(inner_lo, inner_hi))
    lo_pt = float(gen.uniform(inner_lo, inner_hi))
    hi_pt = float(gen.uniform(inner_lo, inner_hi))
    alpha, beta = sorted((lo_pt, hi_pt))
    alpha = nudge_off_spectra(alpha, spectra, tol=SPECTRUM_CLEARANCE,
                              bounds=(inner_lo, inner_hi))
    beta = nudge_off_spectra(beta, spectra, tol=SPECTRUM_CLEARANCE,
                             bounds=(inner_lo, inner_hi))
    if beta <= alpha:
        alpha, beta = beta, alpha
    if beta == alpha:
        beta = nudge_off_spectra(alpha + 0.1 * width, spectra, tol=SPECTRUM_CLEARANCE,
                                 bounds=(inner_lo, inner_hi))
    return GapInstance(a, b_plus, b_minus, (lo_edge, hi_edge), energy,
                       min(alpha, beta), max(alpha, beta))
