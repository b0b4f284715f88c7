"""Finite-difference cross-check of the linear cell problem.

A cell-centred five-point conservative scheme on an n x n periodic grid,
coefficients rasterized from the geometry with 4 x 4 subpixel sampling and
harmonic (or arithmetic) averaging across faces.  It shares no code with
the series solver beyond the geometry description.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .cell_solver import HarmonicCellSolution
from .geometry import CellGeometry

log = logging.getLogger(__name__)

SUBPIXELS = 4
FD_TOL = 1e-10


class OracleError(RuntimeError):
    """The iterative solve did not reach the requested residual."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True, eq=False)
class FdGrid:
    n: int
    cell: np.ndarray  # (n, n) cell coefficients, index [ix, iy]
    east: np.ndarray  # face coefficient between (ix, iy) and (ix+1, iy)
    north: np.ndarray  # face coefficient between (ix, iy) and (ix, iy+1)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def centers(self) -> np.ndarray:
        s = -0.5 + (np.arange(self.n) + 0.5) / self.n
        return s[:, None] + 1j * s[None, :]


def rasterize(geometry: CellGeometry, contrasts, n: int, averaging: str = "harmonic") -> FdGrid:
    """Coefficient field on an n x n grid: 1 in the matrix, ``rho_k`` in inclusion k."""
    if n < 32:
        raise ValueError("grid must have at least 32 points per side")
    contrasts = np.broadcast_to(np.asarray(contrasts, dtype=float), (geometry.n,))
    h = 1.0 / n
    sub = (np.arange(SUBPIXELS) + 0.5) / SUBPIXELS
    s = -0.5 + h * np.arange(n)
    cell = np.zeros((n, n))
    for dx in sub:
        for dy in sub:
            z = (s[:, None] + dx * h) + 1j * (s[None, :] + dy * h)
            a = np.ones((n, n))
            for inc, rho in zip(geometry.inclusions, contrasts):
                # periodic images: inclusions lie inside the cell, so the cell itself suffices
                a[np.abs(z - inc.center) < inc.radius] = rho
            cell += a
    cell /= SUBPIXELS**2
    right = np.roll(cell, -1, axis=0)
    up = np.roll(cell, -1, axis=1)
    if averaging == "harmonic":
        east = 2.0 * cell * right / (cell + right)
        north = 2.0 * cell * up / (cell + up)
    elif averaging == "arithmetic":
        east = 0.5 * (cell + right)
        north = 0.5 * (cell + up)
    else:
        raise ValueError(f"unknown face averaging {averaging!r}")
    return FdGrid(n, cell, east, north)


def _operator(grid: FdGrid) -> sp.csr_matrix:
    """Negative discrete divergence of the face fluxes (symmetric positive semidefinite)."""
    n = grid.n
    idx = np.arange(n * n).reshape(n, n)
    e = grid.east.ravel()
    no = grid.north.ravel()
    i_e = np.roll(idx, -1, axis=0).ravel()
    i_n = np.roll(idx, -1, axis=1).ravel()
    i = idx.ravel()
    rows = np.concatenate([i, i, i, i, i_e, i_n])
    cols = np.concatenate([i, i, i_e, i_n, i, i])
    diag = e + no + np.roll(grid.east, 1, axis=0).ravel() + np.roll(grid.north, 1, axis=1).ravel()
    vals = np.concatenate([diag, np.zeros_like(diag), -e, -no, -e, -no])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))


def solve_corrector(grid: FdGrid, gradient=(1.0, 0.0), tol: float = FD_TOL, maxiter: int = 500):
    """Periodic part ``v`` of ``w = g . x + v`` with mean gradient ``g``.

    Returns ``v`` on the grid (zero mean) and the residual history.
    """
    gx, gy = gradient
    h = grid.h
    A = _operator(grid)
    # face fluxes of the affine part: a_e * gx * h across east faces, a_n * gy * h across north
    fe = grid.east * gx * h
    fn = grid.north * gy * h
    rhs = (fe - np.roll(fe, 1, axis=0) + fn - np.roll(fn, 1, axis=1)).ravel()
    history = []
    norm_b = np.linalg.norm(rhs)
    if norm_b == 0:
        return np.zeros((grid.n, grid.n)), [0.0]
    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
    M = ml.aspreconditioner(cycle="V")

    def record(xk):
        history.append(float(np.linalg.norm(rhs - A @ xk) / norm_b))

    x = np.zeros_like(rhs)
    res = 1.0
    for _ in range(4):
        # restarts absorb the rounding drift of the singular (constant) mode
        x, info = cg(A, rhs, x0=x, rtol=0.5 * tol, atol=0.0, maxiter=maxiter, M=M, callback=record)
        x -= x.mean()
        res = float(np.linalg.norm(rhs - A @ x) / norm_b)
        if res <= tol:
            break
    else:
        raise OracleError(f"finite-difference solve stalled at relative residual {res:.3g}", history)
    v = x.reshape(grid.n, grid.n)
    return v - v.mean(), history


def _mean_flux(grid: FdGrid, v: np.ndarray, gradient) -> np.ndarray:
    gx, gy = gradient
    h = grid.h
    qx = grid.east * ((np.roll(v, -1, axis=0) - v) / h + gx)
    qy = grid.north * ((np.roll(v, -1, axis=1) - v) / h + gy)
    return np.array([qx.mean(), qy.mean()])


def fd_effective_column(geometry: CellGeometry, contrasts, direction: str = "x", n: int = 512,
                        averaging: str = "harmonic") -> np.ndarray:
    """Column of the effective conductivity tensor for a unit mean gradient along ``direction``."""
    g = {"x": (1.0, 0.0), "y": (0.0, 1.0)}[direction]
    grid = rasterize(geometry, contrasts, n, averaging)
    v, _ = solve_corrector(grid, g)
    return _mean_flux(grid, v, g)


def fd_effective_tensor(geometry: CellGeometry, contrasts, n: int = 512, averaging: str = "harmonic") -> np.ndarray:
    grid = rasterize(geometry, contrasts, n, averaging)
    cols = []
    for g in ((1.0, 0.0), (0.0, 1.0)):
        v, _ = solve_corrector(grid, g)
        cols.append(_mean_flux(grid, v, g))
    return np.array(cols).T


def richardson(values, sizes) -> tuple[np.ndarray, float]:
    """Extrapolate three results on grids n, 2n, 4n to n -> infinity.

    The observed order comes from the ratio of successive differences
    (taken on the largest component change); returns the extrapolated value
    and the order.
    """
    v = [np.asarray(x, dtype=float) for x in values]
    if len(v) != 3:
        raise ValueError("Richardson extrapolation needs exactly three grids")
    r = sizes[1] / sizes[0]
    if not np.isclose(sizes[2] / sizes[1], r):
        raise ValueError("grids must be refined by a constant factor")
    d1, d2 = v[1] - v[0], v[2] - v[1]
    k = np.unravel_index(np.argmax(np.abs(d2)), d2.shape) if d2.ndim else ()
    ratio = float(d1[k] / d2[k]) if d2[k] != 0 else np.inf
    if not np.isfinite(ratio) or ratio <= 1.0:
        # no asymptotic convergence visible: return the finest value
        return v[2], float("nan")
    order = np.log(ratio) / np.log(r)
    return v[2] + d2 / (ratio - 1.0), float(order)


def fd_field_compare(solution: HarmonicCellSolution, n: int = 512, margin: float | None = None,
                     averaging: str = "harmonic") -> float:
    """Max |grad w_fd - grad w_series| on matrix grid centres away from interfaces.

    The finite-difference field is built for the series solution's mean
    gradient (its period jumps); gradients are central differences of the
    cell-centred values.  Points closer than ``margin`` (default 3/n) to an
    interface are skipped.
    """
    geom = solution.geometry
    grid = rasterize(geom, solution.contrasts, n, averaging)
    g = solution.period_jumps()
    v = np.zeros((n, n))
    for comp, unit in ((g[0], (1.0, 0.0)), (g[1], (0.0, 1.0))):
        if comp != 0.0:
            vc, _ = solve_corrector(grid, unit)
            v += comp * vc
    h = grid.h
    gx = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2 * h) + g[0]
    gy = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2 * h) + g[1]
    z = grid.centers()
    margin = 3.0 / n if margin is None else margin
    mask = (geom.locate(z) == -1) & (geom.interface_distance(z) > margin)
    if not mask.any():
        return 0.0
    exact = solution.eval_gradient(z[mask])
    dev = np.hypot(gx[mask] - exact[:, 0], gy[mask] - exact[:, 1])
    return float(dev.max())
