"""Band structure for periodic problems.

Discrete side: Floquet matrices of periodic Jacobi parameters, band
functions over the torus, gap detection, and quadratic band-edge
expansions together with a numerical verification of every hypothesis the
abstract gap bound needs (quadratic edge, bounded Bloch vectors, second
order vector regularity, positive phase slope, symmetry, and the
Plancherel normalization density).

Continuum side: the discriminant (trace of the one-period transfer map)
of -u'' + v0 u = E u, band edges by bisection on |discriminant| = 2, and
finite-difference gap-eigenvalue experiments for perturbed periodic
potentials.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .eigen import eig_tridiagonal_vectors
from .exceptions import ClosedGap, DegenerateEdge, QuadratureFailure
from .ltbounds import GapSet, LtSumReport, boundary_weight, lt_sum

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# discrete Floquet bands

@dataclass(frozen=True, eq=False)
class BlochData:
    period_a: np.ndarray
    period_b: np.ndarray
    theta_grid: np.ndarray
    bands: np.ndarray     # shape (p, n_theta), ascending in the band index
    vectors: np.ndarray   # shape (n_theta, p, p), columns are eigenvectors

    @property
    def period(self) -> int:
        return self.period_a.size


def floquet_matrix(period_a, period_b, theta: float) -> np.ndarray:
    """p x p Hermitian matrix whose eigenvalues are the band values at theta.

    Tridiagonal in the unit cell with the wrap-around bond carrying the
    phase: entry (p-1, 0) is a_p e^{i theta}.  For p = 1 this degenerates
    to b + 2 a cos(theta).
    """
    a = np.atleast_1d(np.asarray(period_a, dtype=float))
    b = np.atleast_1d(np.asarray(period_b, dtype=float))
    p = a.size
    if p == 1:
        return np.array([[b[0] + 2.0 * a[0] * math.cos(theta)]], dtype=complex)
    m = np.zeros((p, p), dtype=complex)
    m += np.diag(b.astype(complex))
    m += np.diag(a[:-1].astype(complex), 1) + np.diag(a[:-1].astype(complex), -1)
    m[p - 1, 0] += a[-1] * np.exp(1j * theta)
    m[0, p - 1] += a[-1] * np.exp(-1j * theta)
    return m


def bloch_bands(period_a, period_b, theta_count: int = 512) -> BlochData:
    """Band functions and eigenvectors over an even grid of the torus.

    The grid {2 pi k / M} is symmetric under theta -> 2 pi - theta and
    contains 0 and pi (for even M), where band extrema of real periodic
    Jacobi matrices always sit.
    """
    a = np.atleast_1d(np.asarray(period_a, dtype=float))
    b = np.atleast_1d(np.asarray(period_b, dtype=float))
    if a.size != b.size:
        raise ValueError("period_a and period_b must have equal length")
    if theta_count % 2:
        theta_count += 1
    thetas = TWO_PI * np.arange(theta_count) / theta_count
    p = a.size
    bands = np.empty((p, theta_count))
    vectors = np.empty((theta_count, p, p), dtype=complex)
    for i, theta in enumerate(thetas):
        vals, vecs = np.linalg.eigh(floquet_matrix(a, b, theta))
        bands[:, i] = vals
        vectors[i] = vecs
    return BlochData(a, b, thetas, bands, vectors)


def detect_gaps(bloch: BlochData, merge_tol: float = 1e-9) -> GapSet:
    """Band ranges merged into a gap set; touching bands close their gap."""
    ranges = sorted((band.min(), band.max()) for band in bloch.bands)
    scale = max(1.0, max(abs(hi) for _, hi in ranges))
    merged = [list(ranges[0])]
    for lo, hi in ranges[1:]:
        if lo <= merged[-1][1] + merge_tol * scale:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return GapSet(tuple((lo, hi) for lo, hi in merged))


@dataclass(frozen=True, eq=False)
class EdgeExpansion:
    """Quadratic expansion data at one edge of an open gap.

    c1 bounds the curvature from below (|E(k) - edge| >= c1 k^2 on the
    window), c2 is the sup of the Bloch vector components, c3 the second
    order regularity constant of the phase-stripped vectors, and
    rho_bounds the empirical range of the Plancherel normalization
    density.  ``hypothesis_flags`` records the numerical verification of
    each abstract-theorem hypothesis.
    """

    edge_energy: float
    side: str
    band_index: int
    theta0: float
    c1: float
    c2: float
    c3: float
    delta: float
    epsilon: float
    rho_bounds: tuple[float, float]
    theta_slope: float
    hypothesis_flags: dict

    @property
    def all_hypotheses_hold(self) -> bool:
        return all(self.hypothesis_flags.values())


def _gauge_fix(columns: np.ndarray, center: int) -> np.ndarray:
    """Phase-continuous gauge along k, anchored real-positive at the center."""
    fixed = columns.copy()
    anchor = fixed[:, center]
    lead = np.argmax(np.abs(anchor))
    anchor_phase = anchor[lead] / abs(anchor[lead])
    fixed[:, center] = anchor / anchor_phase
    for i in range(center + 1, fixed.shape[1]):
        overlap = np.vdot(fixed[:, i - 1], fixed[:, i])
        fixed[:, i] *= np.conj(overlap) / abs(overlap)
    for i in range(center - 1, -1, -1):
        overlap = np.vdot(fixed[:, i + 1], fixed[:, i])
        fixed[:, i] *= np.conj(overlap) / abs(overlap)
    return fixed


def _band_at_edge(bloch: BlochData, edge: float, side: str, tol: float) -> int:
    if side == "top-of-gap":
        mins = bloch.bands.min(axis=1)
        candidates = np.nonzero(abs(mins - edge) <= tol)[0]
    else:
        maxs = bloch.bands.max(axis=1)
        candidates = np.nonzero(abs(maxs - edge) <= tol)[0]
    if candidates.size == 0:
        raise ClosedGap(f"no band attains the {side} edge {edge!r}")
    return int(candidates[0] if side == "top-of-gap" else candidates[-1])


def _crossing_distance(bloch: BlochData, j: int, theta0: float, touch_tol: float) -> float:
    """theta distance from theta0 to the nearest touching of band j with a neighbor."""
    sep = np.full(bloch.theta_grid.size, np.inf)
    if j > 0:
        sep = np.minimum(sep, bloch.bands[j] - bloch.bands[j - 1])
    if j < bloch.bands.shape[0] - 1:
        sep = np.minimum(sep, bloch.bands[j + 1] - bloch.bands[j])
    touching = sep < touch_tol
    if not np.any(touching):
        return math.pi
    dist = np.abs(((bloch.theta_grid[touching] - theta0 + math.pi) % TWO_PI) - math.pi)
    return float(dist.min())


def edge_expansion(bloch: BlochData, gap: tuple[float, float], side: str,
                   window_delta: float | None = None, k_count: int = 641,
                   rho_tol: float = 1e-3) -> EdgeExpansion:
    """Fit the quadratic expansion of the band attaining one gap edge.

    ``side`` is "top-of-gap" (band above the gap, near its minimum) or
    "bottom-of-gap" (band below, near its maximum).  Raises ClosedGap for
    zero-width gaps and DegenerateEdge when the curvature constant falls
    below 1e-8 (no quadratic edge).
    """
    lo, hi = gap
    scale = max(1.0, abs(bloch.bands).max())
    if hi - lo <= 1e-12 * scale:
        raise ClosedGap(f"gap {gap!r} has zero width")
    if side not in ("top-of-gap", "bottom-of-gap"):
        raise ValueError("side must be 'top-of-gap' or 'bottom-of-gap'")
    edge = hi if side == "top-of-gap" else lo
    j = _band_at_edge(bloch, edge, side, 1e-8 * scale)
    p = bloch.period

    # extremizers of real periodic Jacobi bands sit at theta = 0 or pi
    cands = []
    for theta in (0.0, math.pi):
        val = np.linalg.eigvalsh(floquet_matrix(bloch.period_a, bloch.period_b, theta))[j]
        cands.append((abs(val - edge), theta))
    err, theta0 = min(cands)
    if err > 1e-7 * scale:
        raise DegenerateEdge(f"band {j} does not attain the edge at theta 0 or pi")

    if window_delta is None:
        window_delta = min(0.3, _crossing_distance(bloch, j, theta0, 1e-9 * scale) / 4.0)
    delta = float(window_delta)
    if k_count % 2 == 0:
        k_count += 1
    ks = np.linspace(-delta, delta, k_count)
    center = k_count // 2
    energies = np.empty(k_count)
    cols = np.empty((p, k_count), dtype=complex)
    for i, k in enumerate(ks):
        vals, vecs = np.linalg.eigh(floquet_matrix(bloch.period_a, bloch.period_b,
                                                   theta0 + k))
        energies[i] = vals[j]
        cols[:, i] = vecs[:, j]
    cols = _gauge_fix(cols, center)

    signed = energies - edge if side == "top-of-gap" else edge - energies
    if signed.min() < -1e-10 * scale:
        raise DegenerateEdge("band leaves the edge side inside the window; shrink delta")
    nonzero = ks != 0.0
    c1 = float(np.min(signed[nonzero] / ks[nonzero] ** 2))
    if c1 < 1e-8:
        raise DegenerateEdge(f"curvature constant {c1:.3e} below 1e-8")
    c2 = float(np.abs(cols).max())

    # extended vectors over two unit cells; strip the per-site phase k/p
    sites = np.arange(2 * p)
    cell, offset = np.divmod(sites, p)[0], np.mod(sites, p)
    u_ext = cols[offset, :] * np.exp(1j * np.outer(sites // p, theta0 + ks))
    v_ext = u_ext * np.exp(-1j * np.outer(sites, ks) / p)
    dv = np.abs(v_ext - v_ext[:, center:center + 1])
    c3 = float(np.max(dv[:, nonzero] / ks[nonzero] ** 2))

    eps_right = float(signed[center:].max())
    eps_left = float(signed[:center + 1].max())
    epsilon = min(eps_left, eps_right)
    rho_hat = _plancherel_density(bloch, j, theta0, delta, ks, energies, cols)
    rho_bounds = (float(rho_hat.min()), float(rho_hat.max()))

    monotone = bool(np.all(np.diff(signed[center:]) > -1e-12 * scale)
                    and np.all(np.diff(signed[:center + 1]) < 1e-12 * scale))
    sym_energy = float(np.max(np.abs(energies - energies[::-1])))
    overlap = np.abs(np.sum(cols[:, ::-1].conj() * cols.conj(), axis=0))
    expansion_residual = _expansion_residual(bloch, j, theta0, ks, energies, cols)
    flags = {
        "gap_open": hi - lo > 1e-12 * scale,
        "expansion_defines_spectral_subspace": expansion_residual < 1e-6,
        "density_bounded": 0.0 < rho_bounds[0] <= rho_bounds[1] < math.inf
                           and abs(rho_bounds[0] / TWO_PI - 1.0) < rho_tol
                           and abs(rho_bounds[1] / TWO_PI - 1.0) < rho_tol,
        "quadratic_edge": c1 >= 1e-8 and monotone,
        "vectors_bounded": math.isfinite(c2),
        "vector_regularity": math.isfinite(c3),
        "phase_slope_positive": 1.0 / p > 0.0,
        "symmetry": sym_energy < 1e-10 * scale and bool(np.all(overlap > 1.0 - 1e-8)),
    }
    return EdgeExpansion(edge, side, j, theta0, c1, c2, c3, delta, epsilon,
                         rho_bounds, 1.0 / p, flags)


def _packet(bloch, theta0, ks, cols, weights, m_cells):
    """Wave packet sum_k w(k) phi~(k) u_n(k) on cells |m| <= m_cells."""
    cells = np.arange(-m_cells, m_cells + 1)
    phases = np.exp(1j * np.outer(cells, theta0 + ks))
    dk = ks[1] - ks[0]
    return np.einsum("mk,k,jk->mj", phases, weights, cols) * dk


def _plancherel_density(bloch, j, theta0, delta, ks, energies, cols) -> np.ndarray:
    """Empirical normalization density from Gaussian test packets.

    With unit-cell-normalized Bloch vectors the squared packet norm is
    2 pi times the squared k-norm of the profile, so the returned values
    should sit at 2 pi for every bump center.
    """
    width = delta / 8.0
    m_cells = int(math.ceil(12.0 / width / bloch.period)) + 20
    dk = ks[1] - ks[0]
    out = []
    for k0 in (-delta / 2.0, 0.0, delta / 2.0):
        profile = np.exp(-0.5 * ((ks - k0) / width) ** 2)
        phi = _packet(bloch, theta0, ks, cols, profile, m_cells)
        out.append(float(np.sum(np.abs(phi) ** 2) / (np.sum(profile ** 2) * dk)))
    return np.asarray(out)


def _expansion_residual(bloch, j, theta0, ks, energies, cols) -> float:
    """Sup difference between J0 acting on a packet and the E(k)-weighted packet."""
    delta = ks[-1]
    width = delta / 8.0
    m_cells = int(math.ceil(12.0 / width / bloch.period)) + 20
    profile = np.exp(-0.5 * (ks / width) ** 2)
    phi = _packet(bloch, theta0, ks, cols, profile, m_cells).ravel()
    target = _packet(bloch, theta0, ks, cols, profile * energies, m_cells).ravel()
    p = bloch.period
    sites = np.arange(-m_cells * p, (m_cells + 1) * p)
    b_site = bloch.period_b[np.mod(sites, p)]
    a_site = bloch.period_a[np.mod(sites, p)]
    acted = b_site * phi
    acted[:-1] += a_site[:-1] * phi[1:]
    acted[1:] += a_site[:-1] * phi[:-1]
    interior = slice(2 * p, sites.size - 2 * p)
    top = float(np.max(np.abs(acted[interior] - target[interior])))
    return top / max(np.abs(phi).max(), 1e-300)


# ---------------------------------------------------------------------------
# continuum discriminant and gap experiments

@dataclass(frozen=True, eq=False)
class DiscriminantCurve:
    energy_grid: np.ndarray
    values: np.ndarray
    period_length: float


def as_potential(v0, period_length: float):
    """Accept a callable or uniform samples over one period.

    Samples are wrapped periodically and interpolated linearly, which is
    the trapezoid-consistent reading of an L1 potential given on a grid.
    """
    if callable(v0):
        return v0
    values = np.asarray(v0, dtype=float)
    xp = np.linspace(0.0, period_length, values.size + 1)
    fp = np.concatenate([values, values[:1]])
    return lambda x: np.interp(np.mod(x, period_length), xp, fp)


def continuum_monodromy(v0, energy: float, period_length: float = TWO_PI,
                        rtol: float = 1e-12, atol: float = 1e-12) -> np.ndarray:
    v = as_potential(v0, period_length)

    def rhs(x, y):
        coeff = v(x) - energy
        return (y[1], coeff * y[0], y[3], coeff * y[2])

    sol = solve_ivp(rhs, (0.0, period_length), (1.0, 0.0, 0.0, 1.0),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise QuadratureFailure(f"transfer integration failed at E={energy!r}")
    u1, du1, u2, du2 = sol.y[:, -1]
    wronskian = u1 * du2 - u2 * du1
    if abs(wronskian - 1.0) > 1e-10:
        raise QuadratureFailure(f"monodromy determinant off by {wronskian - 1.0:.3e}")
    return np.array([[u1, u2], [du1, du2]])


def continuum_discriminant(v0, energy: float, period_length: float = TWO_PI,
                           rtol: float = 1e-12, atol: float = 1e-12) -> float:
    """Trace of the one-period transfer map of -u'' + v0 u = E u."""
    m = continuum_monodromy(v0, energy, period_length, rtol, atol)
    return float(m[0, 0] + m[1, 1])


def discriminant_curve(v0, energies, period_length: float = TWO_PI) -> DiscriminantCurve:
    energies = np.asarray(energies, dtype=float)
    values = np.array([continuum_discriminant(v0, e, period_length) for e in energies])
    return DiscriminantCurve(energies, values, period_length)


def continuum_band_edges(v0, e_range: tuple[float, float],
                         period_length: float = TWO_PI, scan_points: int = 240,
                         xtol: float = 1e-10) -> GapSet:
    """Bands of -d^2/dx^2 + v0 inside a scan range, edges refined by bisection.

    The scan should start below the spectrum; a warning is issued when it
    ends inside a band (the last band is then truncated at the scan end).
    """
    grid = np.linspace(e_range[0], e_range[1], scan_points)
    disc = np.array([continuum_discriminant(v0, e, period_length) for e in grid])
    inside = np.abs(disc) <= 2.0

    def refine(i_out, i_in):
        target = 2.0 if disc[i_out] > 2.0 else -2.0
        fn = lambda e: continuum_discriminant(v0, e, period_length) - target
        lo_e, hi_e = sorted((grid[i_out], grid[i_in]))
        return brentq(fn, lo_e, hi_e, xtol=xtol)

    bands = []
    i = 0
    if inside[0]:
        warnings.warn("scan range starts inside a band; lower e_range[0]")
    while i < scan_points:
        if not inside[i]:
            i += 1
            continue
        start = refine(i - 1, i) if i > 0 else grid[0]
        while i + 1 < scan_points and inside[i + 1]:
            i += 1
        if i + 1 < scan_points:
            end = refine(i + 1, i)
        else:
            warnings.warn("scan range ends inside a band; raise e_range[1]")
            end = grid[-1]
        bands.append((start, end))
        i += 1
    if not bands:
        raise ValueError("no band found in the scan range")
    return GapSet(tuple(bands))


@dataclass(frozen=True, eq=False)
class ContinuumGapPoint:
    mesh: float
    box_half: float
    coupling: float
    report: LtSumReport


@dataclass(frozen=True, eq=False)
class ContinuumGapSeries:
    gap: tuple[float, float]
    points: tuple[ContinuumGapPoint, ...]

    def sup_ratio(self, mesh: float, box_half: float) -> float:
        vals = [p.report.ratio for p in self.points
                if p.report.ratio and p.mesh == mesh and p.box_half == box_half]
        return max(vals) if vals else 0.0

    def configs(self) -> list[tuple[float, float]]:
        seen = []
        for p in self.points:
            if (p.mesh, p.box_half) not in seen:
                seen.append((p.mesh, p.box_half))
        return seen

    def stability(self) -> float:
        """Max relative change of the sup ratio across refinement configs."""
        sups = [self.sup_ratio(m, x) for m, x in self.configs()]
        base = sups[0]
        if base == 0.0:
            return 0.0
        return max(abs(s - base) / base for s in sups[1:]) if len(sups) > 1 else 0.0


def finite_difference_gap_eigs(v0, v, coupling: float, gap: tuple[float, float],
                               box_half: float, mesh: float,
                               pollution_tol: float = 1e-6):
    """Gap eigenvalues of the discretized -d^2/dx^2 + v0 + coupling*v on a box.

    Second-order finite differences with Dirichlet ends; eigenvectors
    carrying boundary weight above ``pollution_tol`` in the outer tenth of
    the box are discarded as truncation artifacts.
    """
    n = int(round(2.0 * box_half / mesh)) - 1
    x = -box_half + mesh * np.arange(1, n + 1)
    v0c = as_potential(v0, TWO_PI) if not callable(v0) else v0
    diag = 2.0 / mesh ** 2 + np.asarray(v0c(x), dtype=float) \
        + coupling * np.asarray(v(x), dtype=float)
    off = np.full(n - 1, -1.0 / mesh ** 2)
    inset = 1e-9 * max(1.0, abs(gap[0]), abs(gap[1]))
    vals, vecs = eig_tridiagonal_vectors((diag, off), (gap[0] + inset, gap[1] - inset))
    if vals.size == 0:
        return vals
    keep = boundary_weight(vecs) < pollution_tol
    return vals[keep]


def continuum_gap_experiment(v0, v, ess: GapSet, gap: tuple[float, float],
                             couplings, box_half: float, mesh: float,
                             v_l1: float | None = None) -> ContinuumGapSeries:
    """Coupling sweep on three discretizations: base, mesh/2, box doubled."""
    if v_l1 is None:
        xs = np.linspace(-box_half, box_half, 200001)
        v_l1 = float(np.trapezoid(np.abs(v(xs)), xs))
    points = []
    for m, x_half in ((mesh, box_half), (mesh / 2.0, box_half), (mesh, 2.0 * box_half)):
        for lam in couplings:
            eigs = finite_difference_gap_eigs(v0, v, lam, gap, x_half, m)
            report = lt_sum(eigs, ess, 0.5, region=gap,
                            rhs=lam * v_l1 if lam else 0.0, constant_name="continuum-gap")
            points.append(ContinuumGapPoint(m, x_half, float(lam), report))
    return ContinuumGapSeries(gap, tuple(points))
