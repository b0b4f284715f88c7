"""Cell averages of the nonlinear fields and effective tensor curves.

For a shift ``C`` of the transformed potential the cell averages are

    <lambda grad T>   fixed by the prescribed mean flux,
    <grad T>          integrals of T n over the four cell edges,
    <T>               area integral of the region-aware temperature.

Column j of the effective resistance tensor at ``<T>`` is ``<grad T> / (-A)``
for the run whose mean flux points along axis j.  Sweeping ``C`` gives one
curve; sampling the cells of the periodic composite gives another.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.interpolate import PchipInterpolator

from .cell_solver import CellProblem, HarmonicCellSolution, solve
from .conductivity import ContrastFamily
from .geometry import CellGeometry
from .reconstruction import NonlinearField

log = logging.getLogger(__name__)

FLUX_CHECK_TOL = 1e-8
DEFAULT_SAMPLES = 81
SWEEP_MARGIN = 1.3
ANGLES = (0.0, np.pi / 2)


class QuadratureError(RuntimeError):
    """An edge interpolant or panel split failed to converge."""


class FluxCheckWarning(UserWarning):
    """Quadrature of the cell-averaged flux disagrees with the prescribed value."""


@dataclass(frozen=True)
class CellAverages:
    avg_flux: np.ndarray
    avg_gradient: np.ndarray
    avg_temperature: float
    shift: float
    flux_check: float = 0.0  # |quadrature flux - prescribed flux|


# -- quadrature rules ---------------------------------------------------------


def _gauss_square(cells_lo: np.ndarray, size: float, order: int):
    """Tensor Gauss-Legendre nodes on squares with lower-left corners ``cells_lo``."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0) * size
    w = 0.5 * w * size
    off = (x[:, None] + 1j * x[None, :]).ravel()
    ww = (w[:, None] * w[None, :]).ravel()
    nodes = (cells_lo[:, None] + off[None, :]).ravel()
    return nodes, np.tile(ww, cells_lo.size)


def cell_quadrature(geometry: CellGeometry, base: int = 32, order: int = 6, depth: int = 4):
    """Nodes and weights on the unit cell, refined where a circle cuts a cell.

    Cells are split into quarters up to ``depth`` times while some inclusion
    boundary passes through them.  The weights sum to 1.
    """
    h = 1.0 / base
    idx = np.arange(base)
    lo = (-0.5 + h * idx[:, None] + 1j * (-0.5 + h * idx[None, :])).ravel()
    nodes, weights = [], []
    size = h
    for level in range(depth + 1):
        centre = lo + 0.5 * size * (1 + 1j)
        cut = np.zeros(lo.shape, dtype=bool)
        if level < depth:
            half_diag = size / np.sqrt(2.0)
            for inc in geometry.inclusions:
                cut |= np.abs(np.abs(centre - inc.center) - inc.radius) < half_diag
        n, w = _gauss_square(lo[~cut], size, order)
        nodes.append(n)
        weights.append(w)
        if not cut.any():
            break
        size *= 0.5
        q = lo[cut]
        lo = np.concatenate([q, q + size, q + 1j * size, q + size * (1 + 1j)])
    return np.concatenate(nodes), np.concatenate(weights)


def _edge_points(edge: str, s):
    s = np.asarray(s, dtype=float)
    return {
        "right": 0.5 + 1j * s,
        "left": -0.5 + 1j * s,
        "top": s + 0.5j,
        "bottom": s - 0.5j,
    }[edge]


EDGES = ("right", "left", "top", "bottom")


def _edge_interpolant(solution: HarmonicCellSolution, edge: str, tol: float = 1e-14, max_deg: int = 1024):
    """Chebyshev coefficients of the potential along an edge (s in [-1/2, 1/2])."""
    deg = 128
    while True:
        t = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
        vals = solution.eval_potential(_edge_points(edge, 0.5 * t))
        coef = cheb.chebfit(t, vals, deg)
        scale = max(np.abs(coef).max(), 1.0)
        if np.abs(coef[-8:]).max() <= tol * scale:
            return coef
        if deg >= max_deg:
            raise QuadratureError(f"edge potential interpolant did not converge on the {edge} edge")
        deg *= 2


# -- the averager ---------------------------------------------------------------


class CellAverager:
    """Precomputed quadrature for the averages of one linear solution.

    Node potentials and edge interpolants depend only on the solution; each
    shift then costs one vectorized Kirchhoff inversion.
    """

    def __init__(
        self,
        solution: HarmonicCellSolution,
        family: ContrastFamily,
        base: int = 32,
        order: int = 6,
        depth: int = 4,
        edge_panels: int = 8,
        edge_order: int = 16,
        scan_points: int = 4097,
    ):
        self.field = NonlinearField(solution, family)
        self.solution = solution
        geom = solution.geometry
        self.nodes, self.weights = cell_quadrature(geom, base, order, depth)
        self.region = geom.locate(self.nodes)
        self.potential = solution.potential(self.nodes)
        self.edge_coef = {e: _edge_interpolant(solution, e) for e in EDGES}
        self.edge_dcoef = {e: cheb.chebder(c) for e, c in self.edge_coef.items()}
        self._scan_t = np.linspace(-1.0, 1.0, scan_points)
        self._scan = {e: cheb.chebval(self._scan_t, c) for e, c in self.edge_coef.items()}
        self.edge_panels = edge_panels
        self._gl = np.polynomial.legendre.leggauss(edge_order)
        # flux self-check data: fixed panels, analytic gradient
        s, wts = self._panel_rule(np.linspace(-0.5, 0.5, edge_panels + 1))
        self._flux_nodes = s, wts
        self._flux_grad = {
            e: solution.eval_gradient(_edge_points(e, s)) for e in ("right", "top")
        }
        self.kinks = family.matrix_map.breakpoint_values

    @property
    def potential_range(self) -> float:
        """Oscillation of the transformed potential over the cell."""
        return float(self.potential.max() - self.potential.min())

    def _panel_rule(self, cuts: np.ndarray):
        x, w = self._gl
        a, b = cuts[:-1], cuts[1:]
        half = 0.5 * (b - a)
        s = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        return s.ravel(), (half[:, None] * w[None, :]).ravel()

    def _crossings(self, edge: str, level: float) -> np.ndarray:
        """Edge parameters where the potential equals ``level``."""
        g = self._scan[edge] - level
        i = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)[0]
        if i.size == 0:
            return i.astype(float)
        t0, t1 = self._scan_t[i], self._scan_t[i + 1]
        g0, g1 = g[i], g[i + 1]
        denom = np.where(g1 != g0, g1 - g0, 1.0)
        t = np.clip(t0 - g0 * (t1 - t0) / denom, t0, t1)
        coef, dcoef = self.edge_coef[edge], self.edge_dcoef[edge]
        for _ in range(30):
            f = cheb.chebval(t, coef) - level
            d = cheb.chebval(t, dcoef)
            step = np.where(d != 0, f / np.where(d != 0, d, 1.0), 0.0)
            t = np.clip(t - step, t0, t1)
            if np.all(np.abs(step) < 1e-14):
                break
        f = np.abs(cheb.chebval(t, coef) - level)
        if np.any(f > 1e-9 * max(1.0, abs(level))):
            raise QuadratureError("breakpoint crossing on a cell edge did not converge")
        return np.unique(0.5 * t)

    def edge_integral(self, edge: str, shift: float) -> float:
        """Integral of T along an edge, panels split where T crosses a breakpoint."""
        cuts = [np.linspace(-0.5, 0.5, self.edge_panels + 1)]
        for level in self.kinks:
            cuts.append(self._crossings(edge, level - shift))
        cuts = np.unique(np.concatenate(cuts))
        # drop slivers shorter than rounding
        cuts = cuts[np.concatenate([[True], np.diff(cuts) > 1e-14])]
        cuts[-1] = 0.5
        s, w = self._panel_rule(cuts)
        u = cheb.chebval(2.0 * s, self.edge_coef[edge]) + shift
        return float(w @ self.field.matrix_map.inverse(u))

    def average_gradient(self, shift: float) -> np.ndarray:
        gx = self.edge_integral("right", shift) - self.edge_integral("left", shift)
        gy = self.edge_integral("top", shift) - self.edge_integral("bottom", shift)
        return np.array([gx, gy])

    def temperature(self, shift: float) -> np.ndarray:
        return self.field.with_shift(shift).temperature_from_potential(self.potential, self.region)

    def average_temperature(self, shift: float) -> float:
        return float(self.weights @ self.temperature(shift))

    def quadrature_flux(self, shift: float) -> np.ndarray:
        """Mean flux from edge fluxes: <q_x> is the flux through the right edge, <q_y> through the top."""
        s, w = self._flux_nodes
        fld = self.field.with_shift(shift)
        out = []
        for edge, comp in (("right", 0), ("top", 1)):
            g = self._flux_grad[edge][:, comp]
            # lambda(T) dT/dn with dT/dn = (du/dn) / lambda(T)
            u = cheb.chebval(2.0 * s, self.edge_coef[edge]) + shift
            T = fld.matrix_map.inverse(u)
            lam = fld.family.matrix_profile(T)
            out.append(float(w @ (lam * (g / lam))))
        return np.array(out)

    def prescribed_flux(self) -> np.ndarray:
        q = self.solution.problem.mean_flux
        return np.array([q.real, q.imag])

    def averages(self, shift: float) -> CellAverages:
        flux = self.prescribed_flux()
        check = float(np.abs(self.quadrature_flux(shift) - flux).max())
        return CellAverages(
            avg_flux=flux,
            avg_gradient=self.average_gradient(shift),
            avg_temperature=self.average_temperature(shift),
            shift=float(shift),
            flux_check=check,
        )


_AVERAGERS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def averager_for(field: NonlinearField) -> CellAverager:
    """Cached averager for the field's solution and family."""
    key = field.solution
    cached = _AVERAGERS.get(key)
    if cached is None or cached.field.family is not field.family:
        cached = CellAverager(field.solution, field.family)
        _AVERAGERS[key] = cached
    return cached


def average_flux(field: NonlinearField) -> np.ndarray:
    """Cell-averaged heat flux, ``-A (cos t, sin t)``.

    The value is exact; the edge-flux quadrature is computed alongside and a
    `FluxCheckWarning` is issued if the two disagree.
    """
    avg = averager_for(field)
    flux = avg.prescribed_flux()
    diff = float(np.abs(avg.quadrature_flux(field.shift) - flux).max())
    if diff > FLUX_CHECK_TOL:
        warnings.warn(f"edge-flux quadrature differs from the prescribed flux by {diff:.3g}", FluxCheckWarning)
    return flux


def average_gradient(field: NonlinearField) -> np.ndarray:
    return averager_for(field).average_gradient(field.shift)


def average_temperature(field: NonlinearField) -> float:
    return averager_for(field).average_temperature(field.shift)


def cell_averages(field: NonlinearField) -> CellAverages:
    return averager_for(field).averages(field.shift)


# -- curves -------------------------------------------------------------------


@dataclass(frozen=True)
class DirectionSamples:
    """Raw per-direction sweep data, sorted by average temperature."""

    angle: float
    shifts: np.ndarray
    avg_temperature: np.ndarray
    avg_gradient: np.ndarray  # (n, 2)
    flux_intensity: float
    cells: np.ndarray | None = None  # (n, 2) cell indices for cell sweeps

    @property
    def columns(self) -> np.ndarray:
        """Resistance-tensor column per sample."""
        return self.avg_gradient / (-self.flux_intensity)


def _interpolant(x, y, kind: str):
    if kind == "pchip":
        return PchipInterpolator(x, y, axis=0, extrapolate=False)
    if kind == "linear":
        def lin(t):
            t = np.asarray(t, dtype=float)
            out = np.stack([np.interp(t, x, y[:, j], left=np.nan, right=np.nan) for j in range(y.shape[1])], -1)
            return out
        return lin
    raise ValueError(f"unknown interpolation {kind!r}")


@dataclass(frozen=True, eq=False)
class EffectiveCurve:
    avg_temperature: np.ndarray  # (n,) strictly increasing
    resistance: np.ndarray  # (n, 2, 2)
    conductivity: np.ndarray  # (n, 2, 2)
    directions: tuple[DirectionSamples, DirectionSamples]
    interpolation: str = "pchip"
    clusters: tuple = ()  # (angle, size, <T>) of merged near-duplicate samples
    _interp: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        T = self.avg_temperature
        if T.size < 2 or np.any(np.diff(T) <= 0):
            raise ValueError("average temperatures must be strictly increasing with at least two samples")
        self._interp["R"] = _interpolant(T, self.resistance.reshape(-1, 4), self.interpolation)
        self._interp["L"] = _interpolant(T, self.conductivity.reshape(-1, 4), self.interpolation)
        self._interp["cols"] = tuple(
            _interpolant(d.avg_temperature, d.columns, self.interpolation) for d in self.directions
        )

    def __len__(self):
        return self.avg_temperature.size

    @property
    def temperature_range(self) -> tuple[float, float]:
        return float(self.avg_temperature[0]), float(self.avg_temperature[-1])

    def resistance_at(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        return self._interp["R"](T).reshape(T.shape + (2, 2))

    def conductivity_at(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        return self._interp["L"](T).reshape(T.shape + (2, 2))

    def column_at(self, j: int, T) -> np.ndarray:
        """Resistance column j interpolated within its own direction samples."""
        return self._interp["cols"][j](np.asarray(T, dtype=float))


def merge_clusters(samples: DirectionSamples, rel_tol: float = 1e-3):
    """Merge samples whose average temperatures nearly coincide.

    Two neighbours form a cluster when their spacing is below ``rel_tol``
    times the median spacing.  Returns the merged samples and a list of
    ``(size, <T>)`` per merged cluster.
    """
    T = samples.avg_temperature
    if T.size < 3:
        return samples, []
    gaps = np.diff(T)
    typical = np.median(gaps[gaps > 0]) if np.any(gaps > 0) else 1.0
    new_group = np.concatenate([[True], gaps > rel_tol * typical])
    group = np.cumsum(new_group) - 1
    if group[-1] == T.size - 1:
        return samples, []
    count = np.bincount(group)

    def mean(a):
        out = np.zeros((count.size,) + a.shape[1:])
        np.add.at(out, group, a)
        return out / count.reshape((-1,) + (1,) * (a.ndim - 1))

    first = np.nonzero(new_group)[0]
    merged = DirectionSamples(
        angle=samples.angle,
        shifts=mean(samples.shifts),
        avg_temperature=mean(T),
        avg_gradient=mean(samples.avg_gradient),
        flux_intensity=samples.flux_intensity,
        cells=None if samples.cells is None else samples.cells[first],
    )
    clusters = [(int(c), float(t)) for c, t in zip(count, merged.avg_temperature) if c > 1]
    return merged, clusters


def assemble_curve(
    first: DirectionSamples, second: DirectionSamples, interpolation: str = "pchip", rel_tol: float = 1e-3
) -> EffectiveCurve:
    """Full tensors on the first direction's temperatures inside the common range.

    The second direction's columns are resampled by monotone piecewise-cubic
    (or linear) interpolation in the average temperature.
    """
    first, c1 = merge_clusters(first, rel_tol)
    second, c2 = merge_clusters(second, rel_tol)
    lo = max(first.avg_temperature[0], second.avg_temperature[0])
    hi = min(first.avg_temperature[-1], second.avg_temperature[-1])
    keep = (first.avg_temperature >= lo) & (first.avg_temperature <= hi)
    T = first.avg_temperature[keep]
    if T.size < 2:
        raise ValueError("the two flux directions share fewer than two average temperatures")
    col1 = first.columns[keep]
    col2 = _interpolant(second.avg_temperature, second.columns, interpolation)(T)
    R = np.stack([col1, col2], axis=-1)
    L = np.linalg.inv(R)
    clusters = tuple((first.angle, n, t) for n, t in c1) + tuple((second.angle, n, t) for n, t in c2)
    for angle, n, t in clusters:
        log.info("merged %d clustered samples near <T>=%.6g (angle %.3g)", n, t, angle)
    return EffectiveCurve(T, R, L, (first, second), interpolation, clusters)


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("PERIHOM_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _run_samples(averager: CellAverager, shifts, workers: int | None):
    shifts = np.asarray(shifts, dtype=float)
    n = _workers(workers)
    if n == 1 or shifts.size < 2:
        return [averager.averages(c) for c in shifts]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(averager.averages, shifts))


def _direction_samples(solution, averages, shifts, cells=None) -> DirectionSamples:
    T = np.array([a.avg_temperature for a in averages])
    order = np.argsort(T, kind="stable")
    grads = np.array([a.avg_gradient for a in averages])
    worst = max((a.flux_check for a in averages), default=0.0)
    if worst > FLUX_CHECK_TOL:
        import warnings

        warnings.warn(f"edge-flux quadrature off by {worst:.3g}", FluxCheckWarning)
    return DirectionSamples(
        angle=solution.problem.flux_angle,
        shifts=np.asarray(shifts, dtype=float)[order],
        avg_temperature=T[order],
        avg_gradient=grads[order],
        flux_intensity=solution.problem.flux_intensity,
        cells=None if cells is None else np.asarray(cells)[order],
    )


@dataclass(frozen=True, eq=False)
class SweepSetup:
    """The two directional solutions and their averagers."""

    family: ContrastFamily
    solutions: tuple[HarmonicCellSolution, HarmonicCellSolution]
    averagers: tuple[CellAverager, CellAverager]

    @property
    def geometry(self) -> CellGeometry:
        return self.solutions[0].geometry

    def default_shift_range(self) -> float:
        """Half-width of a shift range that covers every breakpoint strip plus linear tails."""
        kinks = self.family.matrix_map.breakpoint_values
        u_range = max(a.potential_range for a in self.averagers)
        return SWEEP_MARGIN * float(np.abs(kinks).max()) + u_range


def prepare_sweep(
    geometry: CellGeometry,
    family: ContrastFamily,
    flux_intensity: float = -1.0,
    averager_options: dict | None = None,
    **solver_options,
) -> SweepSetup:
    """Solve the linear problem for mean flux along x and along y."""
    ids = [inc.contrast_id for inc in geometry.inclusions]
    contrasts = family.contrasts(ids)
    sols = tuple(
        solve(CellProblem(geometry, contrasts, flux_intensity, angle, **solver_options)) for angle in ANGLES
    )
    opts = averager_options or {}
    avgs = tuple(CellAverager(s, family, **opts) for s in sols)
    return SweepSetup(family, sols, avgs)


TAIL_SAMPLES = 4
STRIP_SHARE = 0.4


def _allocate(widths, total):
    """Integer split of ``total`` proportional to ``widths`` (largest remainders)."""
    widths = np.asarray(widths, dtype=float)
    share = total * widths / widths.sum()
    counts = np.floor(share).astype(int)
    counts[np.argsort(counts - share)[: total - counts.sum()]] += 1
    return counts


def default_shifts(setup: SweepSetup, n_samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """``n_samples`` shifts covering the full range, placed where the tensors change.

    The strips of C for which ``u + C`` equals a breakpoint value somewhere in
    the cell share 40% of the samples evenly.  The gaps between strips get
    the rest on Chebyshev-like spacing, which crowds samples towards the
    strips where the curvature is largest.  Each outer tail, where T is an
    affine function of u and the tensors are constant, gets a few samples.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    half = setup.default_shift_range()
    lo = min(float(a.potential.min()) for a in setup.averagers)
    hi = max(float(a.potential.max()) for a in setup.averagers)
    pad = 0.1 * (hi - lo)
    strips = []
    for level in np.sort(setup.family.matrix_map.breakpoint_values):
        a, b = max(level - hi - pad, -half), min(level - lo + pad, half)
        if a >= b:
            continue
        if strips and a <= strips[-1][1]:
            strips[-1][1] = b
        else:
            strips.append([a, b])
    budget = n_samples - 1 - 2 * TAIL_SAMPLES
    if not strips or budget < 2 * len(strips):
        return np.linspace(-half, half, n_samples)
    gaps = [(strips[i][1], strips[i + 1][0]) for i in range(len(strips) - 1)]
    n_strip = budget if not gaps else int(round(STRIP_SHARE * budget))
    strip_counts = _allocate([b - a for a, b in strips], n_strip)
    gap_counts = _allocate([b - a for a, b in gaps], budget - n_strip) if gaps else []
    # segments in order; each contributes its points except the left end
    out = [np.array([-half])]

    def even(a, b, k):
        return np.linspace(a, b, k + 1)[1:]

    def clustered(a, b, k):
        return a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * np.arange(1, k + 1) / k))

    out.append(even(-half, strips[0][0], TAIL_SAMPLES))
    for i, (a, b) in enumerate(strips):
        out.append(even(a, b, strip_counts[i]))
        if i < len(gaps):
            out.append(clustered(*gaps[i], gap_counts[i]))
    out.append(even(strips[-1][1], half, TAIL_SAMPLES))
    return np.concatenate(out)


def resistance_curve(
    setup: SweepSetup,
    shifts=None,
    n_samples: int = DEFAULT_SAMPLES,
    interpolation: str = "pchip",
    workers: int | None = None,
) -> EffectiveCurve:
    """Effective tensors from a sweep of the additive constant C."""
    if shifts is None:
        shifts = default_shifts(setup, n_samples)
    shifts = np.asarray(shifts, dtype=float)
    dirs = []
    for sol, avg in zip(setup.solutions, setup.averagers):
        dirs.append(_direction_samples(sol, _run_samples(avg, shifts, workers), shifts))
    return assemble_curve(dirs[0], dirs[1], interpolation)


def default_cells(setup: SweepSetup) -> np.ndarray:
    """Cells on the two lattice axes reaching past every breakpoint strip."""
    half = setup.default_shift_range()
    step = min(max(abs(d) for d in s.period_jumps()) for s in setup.solutions)
    if step == 0:
        raise ValueError("degenerate lattice of cell shifts: the period jumps vanish")
    K = int(math.ceil(half / step))
    m = np.arange(-K, K + 1)
    axis1 = np.stack([m, np.zeros_like(m)], -1)
    m2 = m[m != 0]
    axis2 = np.stack([np.zeros_like(m2), m2], -1)
    return np.concatenate([axis1, axis2])


def cell_shift(solution: HarmonicCellSolution, cells) -> np.ndarray:
    """Potential increase from the cell (0, 0) to the cells (m1, m2).

    Evaluated by the series itself at a matrix point of each translated cell.
    """
    cells = np.asarray(cells, dtype=float).reshape(-1, 2)
    ref = _matrix_reference_point(solution.geometry)
    z = ref + cells[:, 0] + 1j * cells[:, 1]
    return solution.eval_potential(z) - solution.eval_potential(np.array([ref]))[0]


def _matrix_reference_point(geometry: CellGeometry) -> complex:
    for z in (0.5 + 0.5j, 0.5, 0.5j, 0j):
        if geometry.locate(np.array([z]))[0] == -1 and geometry.interface_distance(np.array([z]))[0] > 1e-3:
            return z
    raise ValueError("no reference point in the matrix")


def cell_sweep_curve(
    setup: SweepSetup,
    cells=None,
    interpolation: str = "pchip",
    workers: int | None = None,
) -> EffectiveCurve:
    """Effective tensors from the cells of the periodic composite.

    Each cell (m1, m2) carries the potential of the cell (0, 0) raised by the
    constant ``m1 d_x + m2 d_y``; its averages give one sample.
    """
    if cells is None:
        cells = default_cells(setup)
    cells = np.asarray(cells, dtype=int).reshape(-1, 2)
    dirs = []
    for sol, avg in zip(setup.solutions, setup.averagers):
        dx, dy = sol.period_jumps()
        if dx == 0 and dy == 0:
            raise ValueError("degenerate lattice of cell shifts: the period jumps vanish")
        shifts = cell_shift(sol, cells)
        dirs.append(_direction_samples(sol, _run_samples(avg, shifts, workers), shifts, cells))
    return assemble_curve(dirs[0], dirs[1], interpolation)


@dataclass(frozen=True)
class EquivalenceReport:
    max_discrepancy: float
    worst_temperature: float
    worst_direction: int
    compared: int


def compare_procedures(cell_curve: EffectiveCurve, shift_curve: EffectiveCurve) -> EquivalenceReport:
    """Largest resistance-component gap between a cell sweep and a shift sweep.

    Every cell sample inside the shift sweep's temperature range is compared
    with the shift sweep's interpolated column for the same flux direction.
    """
    worst, worst_T, worst_j, count = 0.0, float("nan"), -1, 0
    for j in range(2):
        d = cell_curve.directions[j]
        ref = shift_curve.directions[j].avg_temperature
        inside = (d.avg_temperature >= ref[0]) & (d.avg_temperature <= ref[-1])
        if not inside.any():
            continue
        gap = np.abs(shift_curve.column_at(j, d.avg_temperature[inside]) - d.columns[inside]).max(axis=1)
        count += int(inside.sum())
        i = int(np.argmax(gap))
        if gap[i] > worst:
            worst, worst_T, worst_j = float(gap[i]), float(d.avg_temperature[inside][i]), j
    return EquivalenceReport(worst, worst_T, worst_j, count)
