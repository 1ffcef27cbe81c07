"""Half-line spectral-measure diagnostics.

Weyl function by coefficient stripping onto the exact free tail,
absolutely continuous densities by Richardson extrapolation in the
imaginary offset, square-root-weighted log integrals over band sets,
logarithmic capacity by constrained Fekete points (cross-checked by the
periodic product formula), and the normalized hopping-product limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DivergenceSuspected
from .ltbounds import GapSet, LtSumReport, lt_sum
from .operators import HALF_LINE, JacobiPerturbation, apply_perturbation, build_free

#: imaginary offsets for the density extrapolation; (0,) evaluates the
#: boundary recursion directly (exact for finitely supported perturbations)
DEFAULT_ETA_SCHEDULE = (1e-2, 5e-3, 2.5e-3)


def m_free(z):
    """Weyl function of the free half-line operator.

    Branch chosen so Im m > 0 off the real axis; on the band interior the
    boundary values (-x + i sqrt(4 - x^2)) / 2 are returned.
    """
    z = np.asarray(z, dtype=complex)
    w = np.lib.scimath.sqrt(z * z - 4.0)
    m = (-z + w) / 2.0
    flip = m.imag <= 0.0
    m = np.where(flip, (-z - w) / 2.0, m)
    if np.any(m.imag <= 0.0):
        bad = np.asarray(z)[np.asarray(m.imag <= 0.0)]
        raise ValueError(f"no positive-imaginary branch at {bad!r}; "
                         "need Im z > 0 or Re z inside (-2, 2)")
    return m if m.ndim else complex(m)


def m_function(pert: JacobiPerturbation | None, z):
    """Weyl function of free + finitely supported perturbation.

    Coefficient stripping downward from the exact free tail:
    m_k = 1 / (b_k - z - a_k^2 m_{k+1}), ending at the site-0 value.
    Valid for Im z > 0 and, by continuity of the boundary values, for real
    z strictly inside the band (-2, 2).
    """
    z = np.asarray(z, dtype=complex)
    m = m_free(z)
    if pert is None:
        return m
    if pert.start < 0:
        raise ValueError("half-line perturbation support must start at site >= 0")
    top = pert.last_site
    for site in range(top, -1, -1):
        b = pert.b_at(site)
        a = 1.0 + pert.a_at(site)
        m = 1.0 / (b - z - a * a * m)
    if np.any(m.imag <= 0.0):
        raise ValueError("stripping lost the Herglotz property; check the perturbation")
    return m if m.ndim else complex(m)


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """A.c. density of the spectral measure on the band interior.

    ``evaluate`` Richardson-extrapolates Im m(x + i eta) / pi over the eta
    schedule; the single-entry schedule (0,) takes the exact boundary
    values instead (legitimate for finitely supported perturbations) and
    is what the precision anchors use.  The eta > 0 route is trustworthy
    a fixed distance inside the band, not arbitrarily close to the edges.
    """

    support: GapSet
    eta_schedule: tuple[float, ...]
    perturbation: JacobiPerturbation | None = None

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.eta_schedule == (0.0,):
            vals = np.asarray(m_function(self.perturbation, x + 0j)).imag / math.pi
            return vals
        rows = [np.asarray(m_function(self.perturbation, x + 1j * eta)).imag / math.pi
                for eta in self.eta_schedule]
        # Richardson for offsets halving toward zero: kill eta, then eta^2
        while len(rows) > 1:
            level = len(rows[0].shape) and 0  # noqa: unused; keep shape
            factor = 2.0 ** (len(self.eta_schedule) - len(rows) + 1)
            rows = [(factor * b - a) / (factor - 1.0) for a, b in zip(rows, rows[1:])]
        return rows[0]


def spectral_density(pert: JacobiPerturbation | None = None,
                     eta_schedule=DEFAULT_ETA_SCHEDULE,
                     support: GapSet | None = None) -> SpectralDensity:
    if support is None:
        support = GapSet.single(-2.0, 2.0)
    return SpectralDensity(support, tuple(float(e) for e in eta_schedule), pert)


def exact_density(pert: JacobiPerturbation | None = None) -> SpectralDensity:
    """Boundary-value density; exact for finitely supported perturbations."""
    return spectral_density(pert, eta_schedule=(0.0,))


# ---------------------------------------------------------------------------
# Szego integral

def _graded_panels(length: float, floor: float):
    """Geometric panels of [0, length] refined toward 0 down to ``floor``."""
    edges = [length]
    while edges[-1] > floor:
        edges.append(edges[-1] / 2.0)
    edges.append(0.0)
    edges.reverse()
    return list(zip(edges[:-1], edges[1:]))


def _gauss_panels(fn, length: float, n_nodes: int, floor: float) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    total = 0.0
    for a, b in _graded_panels(length, floor):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.sum(weights * fn(mid + half * nodes)))
    return total


def szego_integral(density, gapset: GapSet, n_nodes: int = 24,
                   u_floor: float = 1e-7, cauchy_tol: float = 1e-4) -> float:
    """Integral of dist(x, complement)^{-1/2} log f(x) over the bands.

    For the single band [-2, 2] the classical inverse-semicircle weight
    (4 - x^2)^{-1/2} is used instead.  Each endpoint square-root
    singularity is removed by substitution; the remaining logarithmic
    endpoint behavior is handled by geometrically graded panels.  The
    value is recomputed with doubled nodes and DivergenceSuspected is
    raised if the two disagree beyond ``cauchy_tol`` or the density is
    not positive at the nodes.
    """
    f = density.evaluate if isinstance(density, SpectralDensity) else density

    def log_f(x):
        vals = np.asarray(f(x), dtype=float)
        if np.any(vals <= 1e-14):
            raise DivergenceSuspected(f"density not positive at quadrature nodes (min {vals.min():.3e})")
        return np.log(vals)

    def one_pass(nodes: int) -> float:
        total = 0.0
        chebyshev = (len(gapset.bands) == 1
                     and abs(gapset.lo + 2.0) < 1e-12 and abs(gapset.hi - 2.0) < 1e-12)
        for lo, hi in gapset.bands:
            mid = 0.5 * (lo + hi)
            if chebyshev:
                # x = -2 cos(phi) turns the weight into d(phi); log-singular ends
                total += _gauss_panels(lambda ph: log_f(-2.0 * np.cos(ph)),
                                       math.pi / 2.0, nodes, u_floor)
                total += _gauss_panels(lambda ph: log_f(2.0 * np.cos(ph)),
                                       math.pi / 2.0, nodes, u_floor)
            else:
                # u^2 = x - lo on the left half, hi - x on the right half
                total += 2.0 * _gauss_panels(lambda u: log_f(lo + u * u),
                                             math.sqrt(mid - lo), nodes, u_floor)
                total += 2.0 * _gauss_panels(lambda u: log_f(hi - u * u),
                                             math.sqrt(hi - mid), nodes, u_floor)
        return total

    coarse = one_pass(n_nodes)
    fine = one_pass(2 * n_nodes)
    if abs(fine - coarse) > cauchy_tol:
        raise DivergenceSuspected(
            f"node doubling moved the integral by {abs(fine - coarse):.3e}")
    return fine


# ---------------------------------------------------------------------------
# logarithmic capacity

@dataclass(frozen=True, eq=False)
class CapacityEstimate:
    gapset: GapSet
    value: float
    method: str
    fekete_points: np.ndarray | None = None
    diameters: tuple[tuple[int, float], ...] = ()


def _log_products(points: np.ndarray) -> float:
    diffs = np.abs(points[:, None] - points[None, :])
    iu = np.triu_indices(points.size, k=1)
    return float(np.sum(np.log(diffs[iu])))


def _fekete_points(gapset: GapSet, n: int, grid_per_band: int, passes: int) -> np.ndarray:
    """Approximate Fekete points: greedy seeding, grid exchange, Newton polish."""
    grids = [np.linspace(lo, hi, grid_per_band) for lo, hi in gapset.bands]
    grid = np.concatenate(grids)
    pts = [gapset.lo, gapset.hi]
    while len(pts) < n:
        arr = np.asarray(pts)
        score = np.sum(np.log(np.abs(grid[:, None] - arr[None, :]) + 1e-300), axis=1)
        pts.append(float(grid[int(np.argmax(score))]))
    pts = np.asarray(sorted(pts))

    bands = np.asarray(gapset.bands)

    def band_of(x: float) -> tuple[float, float]:
        k = int(np.argmin(np.minimum(np.abs(bands[:, 0] - x), np.abs(bands[:, 1] - x))
                          * np.where((bands[:, 0] <= x) & (x <= bands[:, 1]), 0.0, 1.0)))
        return float(bands[k, 0]), float(bands[k, 1])

    for _ in range(passes):
        moved = 0.0
        for i in range(pts.size):
            others = np.delete(pts, i)
            score = np.sum(np.log(np.abs(grid[:, None] - others[None, :]) + 1e-300), axis=1)
            x = float(grid[int(np.argmax(score))])
            lo, hi = band_of(x)
            # concave log-potential: a few safeguarded Newton steps
            for _ in range(4):
                d1 = float(np.sum(1.0 / (x - others)))
                d2 = float(-np.sum(1.0 / (x - others) ** 2))
                step = -d1 / d2
                x = min(max(x + step, lo), hi)
            moved = max(moved, abs(x - pts[i]))
            pts[i] = x
        pts = np.sort(pts)
        if moved < 1e-13:
            break
    return pts


def capacity(gapset: GapSet, n_points: int = 60, grid_per_band: int = 1500,
             passes: int = 30) -> CapacityEstimate:
    """Logarithmic capacity by Fekete-point transfinite diameters.

    The n-point diameter d_n = (max prod |x_i - x_j|)^{2/(n(n-1))}
    decreases to the capacity like 1 + O(log n / n); the three levels
    n/4, n/2, n are extrapolated against that model.
    """
    levels = sorted({max(6, n_points // 4), max(8, n_points // 2), n_points})
    diam = []
    pts = None
    for n in levels:
        pts = _fekete_points(gapset, n, grid_per_band, passes)
        d_n = math.exp(2.0 * _log_products(pts) / (n * (n - 1)))
        diam.append((n, d_n))
    ns = np.array([float(n) for n, _ in diam])
    logs = np.array([math.log(d) for _, d in diam])
    basis = np.vstack([np.ones_like(ns), np.log(ns) / ns, 1.0 / ns]).T
    coeffs, *_ = np.linalg.lstsq(basis, logs, rcond=None)
    value = math.exp(float(coeffs[0]))
    return CapacityEstimate(gapset, value, "fekete", pts, tuple(diam))


def capacity_periodic_product(period_a) -> float:
    """Capacity of the band set of a periodic Jacobi matrix: (prod a)^(1/p)."""
    a = np.atleast_1d(np.asarray(period_a, dtype=float))
    return float(np.exp(np.mean(np.log(a))))


# ---------------------------------------------------------------------------
# product limit and the pipeline

@dataclass(frozen=True, eq=False)
class ProductLimitReport:
    values: np.ndarray              # P_N = (a_1 ... a_N) / C^N
    capacity_value: float
    cauchy_deltas: np.ndarray       # |P_{2N} - P_N|
    bounded: bool
    cauchy: bool

    @property
    def limit_estimate(self) -> float:
        return float(self.values[-1])


def product_limit_check(a_values, capacity_value: float,
                        bound_lo: float = 1e-6, bound_hi: float = 1e6) -> ProductLimitReport:
    """Partial products of a_n / C; asserts boundedness and Cauchy decay.

    ``a_values`` are the hopping entries a_1..a_N of a perturbed operator
    whose essential spectrum has capacity ``capacity_value``.
    """
    a = np.asarray(a_values, dtype=float)
    log_p = np.cumsum(np.log(a)) - np.arange(1, a.size + 1) * math.log(capacity_value)
    values = np.exp(log_p)
    n_half = a.size // 2
    deltas = np.abs(values[2 * np.arange(1, n_half + 1) - 1] - values[np.arange(1, n_half + 1) - 1])
    bounded = bool(values.min() > bound_lo and values.max() < bound_hi)
    cauchy = bool(np.all(np.diff(deltas) <= 1e-12 * max(1.0, values.max())))
    return ProductLimitReport(values, capacity_value, deltas, bounded, cauchy)


def truncation_point_masses(pert: JacobiPerturbation | None, gapset: GapSet,
                            size: int = 2000, margin: float = 1e-6):
    """Eigenvalues outside the bands of a truncated half-line operator, with
    their spectral weights (squared first components)."""
    import scipy.linalg

    op = build_free(size, HALF_LINE)
    if pert is not None:
        op = apply_perturbation(op, pert)
    vals, vecs = scipy.linalg.eigh_tridiagonal(op.diagonal, op.off_diagonal)
    outside = gapset.distance(vals) > margin
    return vals[outside], vecs[0, outside] ** 2


@dataclass(frozen=True, eq=False)
class NevaiReport:
    gap_sum: LtSumReport
    product: ProductLimitReport
    szego_value: float
    all_finite: bool


def nevai_pipeline(pert: JacobiPerturbation | None, truncation: int = 4000,
                   product_terms: int = 80) -> NevaiReport:
    """Three diagnostics for a summable perturbation of the free half line.

    (a) the all-gaps eigenvalue sum with exponent 1/2, (b) the normalized
    hopping product limit, (c) the Szego integral of the perturbed
    density.  All three must come out finite for a finitely supported
    perturbation.  Restricted to the free base because the density leg
    strips coefficients onto the exact free tail; this restriction is
    noted in every report.
    """
    ess = GapSet.single(-2.0, 2.0)
    op = build_free(truncation, HALF_LINE)
    if pert is not None:
        op = apply_perturbation(op, pert)
    import scipy.linalg
    vals = scipy.linalg.eigh_tridiagonal(op.diagonal, op.off_diagonal, eigvals_only=True)
    outside = vals[ess.distance(vals) > 1e-6]
    rhs = pert.l1_norm if pert is not None else 0.0
    gap_sum = lt_sum(outside, ess, 0.5, rhs=rhs if rhs > 0 else None,
                     constant_name="all-gaps")
    product = product_limit_check(op.off_diagonal[:product_terms],
                                  capacity_periodic_product([1.0]))
    szego_value = szego_integral(exact_density(pert), ess)
    all_finite = (math.isfinite(gap_sum.sum) and product.bounded
                  and math.isfinite(szego_value))
    return NevaiReport(gap_sum, product, szego_value, all_finite)
