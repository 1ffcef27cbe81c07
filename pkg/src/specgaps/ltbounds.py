"""Gap-restricted eigenvalue sums and their companion identities.

The central quantity is sum over discrete eigenvalues of
dist(e, essential spectrum)^gamma, restricted to a region, compared with
the l1 size of the perturbation that created the eigenvalues.  No sharp
constant is asserted anywhere: ratios are reported, and only stability
sentinels (sup over a sweep versus its median) are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counting import InequalityReport
from .eigen import count_in_interval, eig_tridiagonal_vectors
from .exceptions import EigenvalueInBand, QuadratureFailure
from .operators import (WHOLE_LINE, JacobiOperator, JacobiPerturbation,
                        apply_perturbation, build_free, build_periodic)

#: eigenvalues deeper than this inside a band are rejected by lt_sum
BAND_TOL = 1e-10
#: boundary-localization threshold for discarding truncation artifacts
POLLUTION_TOL = 1e-6


@dataclass(frozen=True)
class GapSet:
    """Finite union of disjoint closed bands; the gaps are the open holes."""

    bands: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bands = tuple((float(a), float(b)) for a, b in self.bands)
        object.__setattr__(self, "bands", bands)
        if not bands:
            raise ValueError("a gap set needs at least one band")
        flat = [x for band in bands for x in band]
        if any(b <= a for a, b in zip(flat, flat[1:])):
            raise ValueError("band endpoints must be strictly increasing")

    @classmethod
    def single(cls, lo: float, hi: float) -> "GapSet":
        return cls(((lo, hi),))

    @property
    def lo(self) -> float:
        return self.bands[0][0]

    @property
    def hi(self) -> float:
        return self.bands[-1][1]

    def gaps(self) -> list[tuple[float, float]]:
        return [(self.bands[j][1], self.bands[j + 1][0]) for j in range(len(self.bands) - 1)]

    def distance(self, x) -> np.ndarray:
        """Distance from x to the union of bands (0 inside a band)."""
        x = np.asarray(x, dtype=float)
        dist = np.full(x.shape, np.inf)
        for a, b in self.bands:
            dist = np.minimum(dist, np.maximum.reduce([a - x, x - b, np.zeros_like(x)]))
        return dist

    def depth_inside(self, x) -> np.ndarray:
        """Distance from x to the complement (positive strictly inside a band)."""
        x = np.asarray(x, dtype=float)
        depth = np.zeros(x.shape)
        for a, b in self.bands:
            inside = (x >= a) & (x <= b)
            depth = np.where(inside, np.minimum(x - a, b - x), depth)
        return depth


@dataclass(frozen=True, eq=False)
class LtSumReport:
    gamma: float
    sum: float
    eigenvalues: np.ndarray
    distances: np.ndarray
    rhs: float | None = None
    ratio: float | None = None
    constant_name: str | None = None


def lt_sum(eigenvalues, ess: GapSet, gamma: float,
           region: tuple[float, float] | None = None,
           rhs: float | None = None, constant_name: str | None = None) -> LtSumReport:
    """Sum of dist(e, ess)^gamma over eigenvalues, optionally region-restricted.

    Eigenvalues strictly inside a band (deeper than BAND_TOL) are rejected;
    for eigenvalues below or above all bands the nearest band edge is used.
    """
    eigs = np.sort(np.asarray(eigenvalues, dtype=float))
    if region is not None:
        eigs = eigs[(eigs > region[0]) & (eigs < region[1])]
    depth = ess.depth_inside(eigs)
    if np.any(depth > BAND_TOL):
        bad = eigs[depth > BAND_TOL]
        raise EigenvalueInBand(f"eigenvalues inside a band: {bad}")
    dist = ess.distance(eigs)
    total = float(np.sum(dist ** gamma)) if eigs.size else 0.0
    ratio = None
    if rhs is not None:
        ratio = total / rhs if rhs > 0 else (0.0 if total == 0.0 else math.inf)
    return LtSumReport(gamma, total, eigs, dist, rhs, ratio, constant_name)


def boundary_weight(vectors: np.ndarray, fraction: float = 0.1) -> np.ndarray:
    """l2 weight of each eigenvector in the outer ``fraction`` of the window."""
    n = vectors.shape[0]
    zone = max(1, int(math.ceil(fraction * n)))
    return (vectors[:zone] ** 2).sum(axis=0) + (vectors[-zone:] ** 2).sum(axis=0)


def gap_eigenvalues(op, window: tuple[float, float],
                    pollution_tol: float = POLLUTION_TOL) -> np.ndarray:
    """Eigenvalues of a truncated operator in a window, edge states filtered.

    Free-end truncation of a periodic operator can seed spurious
    eigenvalues in spectral gaps; they localize at the artificial
    boundary, so anything carrying more than ``pollution_tol`` of its
    weight in the outer 10 percent of the window is dropped.
    """
    vals, vecs = eig_tridiagonal_vectors(op, window)
    if vals.size == 0:
        return vals
    keep = boundary_weight(vecs) < pollution_tol
    return vals[keep]


@dataclass(frozen=True, eq=False)
class GapSumPoint:
    size: int
    coupling: float
    report: LtSumReport


@dataclass(frozen=True, eq=False)
class GapSumSeries:
    gap: tuple[float, float]
    gamma: float
    points: tuple[GapSumPoint, ...]

    def sup_ratio(self, size: int | None = None) -> float:
        ratios = [p.report.ratio for p in self.points
                  if p.report.ratio is not None and (size is None or p.size == size)]
        return max(ratios) if ratios else 0.0

    def stability(self, size_a: int, size_b: int) -> float:
        """Relative change of the sup ratio between two truncation sizes."""
        ra, rb = self.sup_ratio(size_a), self.sup_ratio(size_b)
        if max(ra, rb) == 0.0:
            return 0.0
        return abs(ra - rb) / max(ra, rb)


def gap_sum_experiment(period_a, period_b, pert: JacobiPerturbation, ess: GapSet,
                       gap: tuple[float, float], sizes, couplings,
                       gamma: float = 0.5, extent: str = WHOLE_LINE) -> GapSumSeries:
    """Sweep coupling and truncation size; compare gap sums with l1 norms.

    For each size N and coupling lam, the eigenvalues of J0 + lam * pert
    inside the gap window are summed as dist(., ess)^gamma and divided by
    lam * |pert|_1.
    """
    points = []
    for size in sizes:
        base = build_periodic(period_a, period_b, size, extent)
        for lam in couplings:
            if lam == 0.0:
                report = lt_sum([], ess, gamma, rhs=0.0)
            else:
                op = apply_perturbation(base, pert.scaled(lam))
                eigs = gap_eigenvalues(op, gap)
                report = lt_sum(eigs, ess, gamma, region=gap,
                                rhs=lam * pert.l1_norm, constant_name="gap-sum")
            points.append(GapSumPoint(size, float(lam), report))
    return GapSumSeries(gap, gamma, tuple(points))


def _dense_or_operator_eigenvalues(op) -> np.ndarray:
    if isinstance(op, JacobiOperator):
        from .eigen import eig_tridiagonal
        return eig_tridiagonal(op)
    return np.linalg.eigvalsh(np.asarray(op, dtype=float))


def layer_cake_check(op, a: float, b: float, f, tol: float = 1e-8):
    """Sum of f over eigenvalues in [a, b] against the counting integral.

    The right side integrates the below-threshold counting function, which
    is piecewise constant with jumps exactly at the eigenvalues; the
    integral is therefore evaluated segment by segment (no quadrature
    error), with each segment count taken from the independent pivot
    counting route rather than from the eigenvalue list.  Requires
    f(b) = 0.
    """
    if abs(f(b)) > 1e-12 * max(1.0, abs(f(a))):
        raise ValueError("weight function must vanish at the right endpoint")
    eigs = _dense_or_operator_eigenvalues(op)
    inside = eigs[(eigs >= a) & (eigs <= b)]
    lhs = float(np.sum([f(e) for e in inside]))
    taus = np.unique(np.concatenate([[0.0], b - inside, [b - a]]))
    taus = taus[(taus >= 0.0) & (taus <= b - a)]
    rhs = 0.0
    count_op = op if isinstance(op, JacobiOperator) else np.asarray(op, dtype=float)
    for t0, t1 in zip(taus[:-1], taus[1:]):
        mid = 0.5 * (t0 + t1)
        n_mid = count_in_interval(count_op, (a, b - mid)).count
        rhs += n_mid * (f(b - t1) - f(b - t0))
    holds = abs(lhs - rhs) <= tol
    if not holds:
        raise QuadratureFailure(f"layer-cake mismatch {lhs} vs {rhs}")
    return InequalityReport(lhs, rhs, holds, abs(lhs - rhs))


def tail_bound_check(a_mat, b_mat) -> InequalityReport:
    """Deep eigenvalues of A + B cost at most the trace norm of B.

    Sums (alpha - e)^{1/2} over eigenvalues e <= alpha - 1 of A + B, with
    alpha the bottom of sigma(A), and compares with trace|B|.
    """
    a = np.asarray(a_mat, dtype=float)
    b = np.asarray(b_mat, dtype=float)
    alpha = float(np.linalg.eigvalsh(a).min())
    eigs = np.linalg.eigvalsh(a + b)
    deep = eigs[eigs <= alpha - 1.0]
    lhs = float(np.sum(np.sqrt(alpha - deep)))
    rhs = float(np.sum(np.abs(np.linalg.eigvalsh(b))))
    return InequalityReport(lhs, rhs, lhs <= rhs + 1e-12, rhs - lhs)


@dataclass(frozen=True, eq=False)
class ConstantStudyRow:
    kind: str
    parameter: float
    sum: float
    norm: float
    ratio: float


@dataclass(frozen=True, eq=False)
class ConstantStudy:
    rows: tuple[ConstantStudyRow, ...]

    def sup_ratio(self, kind: str | None = None) -> float:
        vals = [r.ratio for r in self.rows if kind is None or r.kind == kind]
        return max(vals) if vals else 0.0


def critical_constant_study(couplings=(4.0, 2.0, 1.0, 0.5, 0.25, 0.125),
                            profile_widths=(4.0, 8.0, 16.0, 32.0),
                            window: int = 2000) -> ConstantStudy:
    """Empirical ratios for attractive diagonal wells on the free lattice.

    Two families: a single attractive site with decreasing coupling, and a
    wide smooth profile w(n/width) with coupling 1/width^2 (the continuum
    scaling regime).  In both, the ratio sum(dist^{1/2}) / (lam * sum|V|)
    climbs toward the known critical continuum constant 1/2 from below.
    Values are recorded, not asserted sharp.
    """
    ess = GapSet.single(-2.0, 2.0)
    size = 2 * window + 1
    rows = []
    for lam in couplings:
        pert = JacobiPerturbation([-lam], [0.0], start=0)
        base = build_free(size, WHOLE_LINE)
        op = apply_perturbation(base, pert)
        eigs = gap_eigenvalues(op, (-2.0 - 3.0 * lam - 3.0, -2.0))
        report = lt_sum(eigs, ess, 0.5, rhs=lam)
        rows.append(ConstantStudyRow("single-site", lam, report.sum, lam, report.ratio or 0.0))
    for width in profile_widths:
        lam = 1.0 / width ** 2
        half = int(6 * width)
        sites = np.arange(-half, half + 1)
        profile = np.exp(-0.5 * (sites / width) ** 2)
        pert = JacobiPerturbation(-lam * profile, [0.0], start=-half)
        base = build_free(size, WHOLE_LINE)
        op = apply_perturbation(base, pert)
        eigs = gap_eigenvalues(op, (-2.0 - 2.0, -2.0))
        norm = lam * float(profile.sum())
        report = lt_sum(eigs, ess, 0.5, rhs=norm)
        rows.append(ConstantStudyRow("wide-profile", width, report.sum, norm,
                                     report.ratio or 0.0))
    return ConstantStudy(tuple(rows))
