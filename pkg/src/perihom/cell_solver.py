"""Series solution of the linear doubly periodic transmission problem.

Unknown: a potential ``w`` that is harmonic in the matrix (conductivity 1)
and in each inclusion k (conductivity ``rho_k``), continuous across the
circles, with continuous normal flux ``dw/dn = rho_k dw_k/dn`` and a
doubly periodic gradient whose cell-averaged flux is ``-A (cos t, sin t)``.

Representation (z = x + iy):

    matrix       w = Re phi(z),  phi(z) = B z + sum_k sum_m b_km Z_m(z - a_k)
    inclusion k  w = Re psi_k(z), psi_k(z) = sum_m c_km (z - a_k)**m

with the lattice functions ``Z_m`` of :mod:`perihom.lattice`.  The mean-flux
condition fixes ``B = conj(Q) + pi conj(sum_k b_k1)`` where
``Q = -A exp(i t)``; the transmission conditions are collocated on every
circle and solved in least squares.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import CellGeometry, validate, wrap_into_cell
from .lattice import ZETA_JUMP_X, ZETA_JUMP_Y, MultipoleSum, basis_values

log = logging.getLogger(__name__)

DEFAULT_ORDER = 6
DEFAULT_TOL = 1e-6
MAX_ORDER = 64
VERIFY_POINTS = 64


class SolverError(RuntimeError):
    """The collocation system is ill-conditioned or the residual did not converge."""

    def __init__(self, message, condition=None, residual=None):
        super().__init__(message)
        self.condition = condition
        self.residual = residual


class RegionError(ValueError):
    """A point was evaluated in a region it does not belong to."""


@dataclass(frozen=True)
class CellProblem:
    geometry: CellGeometry
    contrasts: tuple[float, ...]
    flux_intensity: float = -1.0
    flux_angle: float = 0.0
    truncation_order: int = DEFAULT_ORDER
    tol: float = DEFAULT_TOL
    max_order: int = MAX_ORDER

    def __post_init__(self):
        contrasts = np.broadcast_to(np.asarray(self.contrasts, dtype=float), (self.geometry.n,))
        object.__setattr__(self, "contrasts", tuple(float(c) for c in contrasts))
        if any(c <= 0 for c in self.contrasts):
            raise ValueError("contrasts must be positive")
        if self.truncation_order < 0:
            raise ValueError("truncation order must be non-negative")
        problems = validate(self.geometry)
        if problems:
            raise ValueError("invalid geometry: " + "; ".join(problems))

    @property
    def mean_flux(self) -> complex:
        """Prescribed cell-averaged flux as a complex number."""
        return -self.flux_intensity * np.exp(1j * self.flux_angle)


@dataclass(frozen=True, eq=False)
class HarmonicCellSolution:
    problem: CellProblem
    order: int
    background: complex
    exterior_coefficients: np.ndarray  # (N, M), multipole strengths b_{k,m}
    interior_coefficients: np.ndarray  # (N, M+1), Taylor coefficients c_{k,m}
    offset: float  # subtracted so that w(0) = 0
    residual_norm: float
    condition: float
    _multipoles: tuple = field(default=(), repr=False)

    @property
    def geometry(self) -> CellGeometry:
        return self.problem.geometry

    @property
    def contrasts(self) -> np.ndarray:
        return np.asarray(self.problem.contrasts)

    # -- complex potentials -------------------------------------------------

    def _phi(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        acc = self.background * z
        for inc, ms in zip(self.geometry.inclusions, self._multipoles):
            acc = acc + ms.value(z - inc.center)
        return acc

    def _dphi(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        acc = np.full(z.shape, self.background, dtype=complex)
        for inc, ms in zip(self.geometry.inclusions, self._multipoles):
            acc = acc + ms.derivative(z - inc.center)
        return acc

    def _psi(self, k, z) -> np.ndarray:
        inc = self.geometry.inclusions[k]
        t = (np.asarray(z, dtype=complex) - inc.center) / inc.radius
        acc = np.zeros(t.shape, dtype=complex)
        for c in self.interior_coefficients[k][::-1]:
            acc = acc * t + c
        return acc

    def _dpsi(self, k, z) -> np.ndarray:
        inc = self.geometry.inclusions[k]
        t = (np.asarray(z, dtype=complex) - inc.center) / inc.radius
        c = self.interior_coefficients[k]
        acc = np.zeros(t.shape, dtype=complex)
        for m in range(c.size - 1, 0, -1):
            acc = acc * t + m * c[m]
        return acc / inc.radius

    # -- public evaluation ----------------------------------------------------

    def _check_region(self, z, region):
        found = self.geometry.locate(z)
        expected = -1 if region in (None, "matrix") else int(region)
        bad = found != expected
        if expected == -1:
            # boundary points may be classified either way
            bad &= self.geometry.interface_distance(z) > 1e-12
        if np.any(bad):
            raise RegionError(f"points outside region {region!r}")
        return expected

    def _cell_shift(self, z):
        z = np.asarray(z, dtype=complex)
        z0 = wrap_into_cell(z)
        shift = z - z0
        dx, dy = self.period_jumps()
        return z0, shift.real * dx + shift.imag * dy

    def eval_potential(self, z, region="matrix") -> np.ndarray:
        """Potential w at z in the given region ('matrix' or inclusion index)."""
        k = self._check_region(z, region)
        if k == -1:
            return self._phi(z).real - self.offset
        z0, jump = self._cell_shift(z)
        return self._psi(k, z0).real - self.offset + jump

    def eval_gradient(self, z, region="matrix") -> np.ndarray:
        """Gradient of w, shape ``z.shape + (2,)``."""
        k = self._check_region(z, region)
        if k == -1:
            d = self._dphi(z)
        else:
            d = self._dpsi(k, wrap_into_cell(z))
        # grad Re f = (Re f', -Im f')
        return np.stack([d.real, -d.imag], axis=-1)

    def potential(self, z) -> np.ndarray:
        """Potential at arbitrary points, choosing the region per point."""
        z = np.asarray(z, dtype=complex)
        region = self.geometry.locate(z)
        out = np.empty(z.shape)
        mask = region == -1
        out[mask] = self._phi(z[mask]).real - self.offset
        if np.any(~mask):
            z0, jump = self._cell_shift(z[~mask])
            sub = np.empty(z0.shape)
            for k in np.unique(region[~mask]):
                sel = region[~mask] == k
                sub[sel] = self._psi(k, z0[sel]).real
            out[~mask] = sub - self.offset + jump
        return out

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        region = self.geometry.locate(z)
        d = np.empty(z.shape, dtype=complex)
        mask = region == -1
        d[mask] = self._dphi(z[mask])
        z0 = wrap_into_cell(z)
        for k in np.unique(region[~mask]):
            sel = region == k
            d[sel] = self._dpsi(k, z0[sel])
        return np.stack([d.real, -d.imag], axis=-1)

    def flux(self, z) -> np.ndarray:
        """Flux ``a grad w`` of the linear problem (conductivity 1 in the matrix)."""
        z = np.asarray(z, dtype=complex)
        g = self.gradient(z)
        region = self.geometry.locate(z)
        scale = np.ones(z.shape)
        for k, rho in enumerate(self.contrasts):
            scale[region == k] = rho
        return g * scale[..., None]

    def period_jumps(self) -> tuple[float, float]:
        """Constants ``w(z+1) - w(z)`` and ``w(z+i) - w(z)``."""
        s = complex(np.sum(self.exterior_coefficients[:, 0])) if self.order else 0j
        jx = self.background + s * ZETA_JUMP_X
        jy = 1j * self.background + s * ZETA_JUMP_Y
        return float(jx.real), float(jy.real)

    def interface_residuals(self, k: int, npts: int = VERIFY_POINTS) -> tuple[np.ndarray, np.ndarray]:
        """Potential and normal-flux jumps at ``npts`` points on circle k.

        The points are offset from the collocation nodes.
        """
        inc = self.geometry.inclusions[k]
        t = 2 * np.pi * (np.arange(npts) + 0.5) / npts + 0.1234
        n = np.exp(1j * t)
        z = inc.center + inc.radius * n
        jump = self._phi(z).real - self._psi(k, z).real
        flux = (self._dphi(z) * n).real - self.contrasts[k] * (self._dpsi(k, z) * n).real
        return jump, flux


def _assemble(problem: CellProblem, order: int, npts: int):
    """Real least-squares system for the given truncation order."""
    geom = problem.geometry
    nin = geom.n
    m = order
    # unknowns per inclusion: b (2m reals), c_0 (1 real), c_1..c_m (2m reals)
    per = 4 * m + 1
    ncol = per * nin
    rows_a, rows_b = [], []
    t = 2 * np.pi * np.arange(npts) / npts
    nvec = np.exp(1j * t)
    qbar = np.conj(problem.mean_flux)

    for j, incj in enumerate(geom.inclusions):
        z = incj.center + incj.radius * nvec
        rho = problem.contrasts[j]
        pot = np.zeros((npts, ncol))
        flx = np.zeros((npts, ncol))
        for k, inck in enumerate(geom.inclusions):
            if m == 0:
                break
            base = k * per
            zb = basis_values(z - inck.center, m + 1)
            scale = inck.radius ** np.arange(1, m + 2)
            for p in range(1, m + 1):
                g = zb[:, p - 1] * scale[p - 1]
                # Z_p' = -p Z_{p+1}
                dg = -p * zb[:, p] * scale[p - 1]
                for part, unit in ((0, 1.0), (1, 1j)):
                    val = unit * g
                    dval = unit * dg
                    if p == 1:
                        # background correction pi * conj(b_1) * z
                        val = val + np.pi * np.conj(unit) * inck.radius * z
                        dval = dval + np.pi * np.conj(unit) * inck.radius
                    col = base + 2 * (p - 1) + part
                    pot[:, col] = val.real
                    flx[:, col] = (dval * nvec).real
        # interior of inclusion j
        base = j * per + 2 * m
        pot[:, base] -= 1.0
        for p in range(1, m + 1):
            e = nvec**p
            de = p * nvec ** (p - 1) / incj.radius
            for part, unit in ((0, 1.0), (1, 1j)):
                col = base + 1 + 2 * (p - 1) + part
                pot[:, col] -= (unit * e).real
                flx[:, col] -= rho * (unit * de * nvec).real
        rows_a.append(pot)
        rows_b.append(-(qbar * z).real)
        # scale flux rows to the potential rows
        rows_a.append(flx * incj.radius)
        rows_b.append(-(qbar * nvec).real * incj.radius)
    if not rows_a:
        return np.zeros((0, 0)), np.zeros(0)
    return np.vstack(rows_a), np.concatenate(rows_b)


def _unpack(problem: CellProblem, order: int, x: np.ndarray):
    geom = problem.geometry
    m = order
    per = 4 * m + 1
    ext = np.zeros((geom.n, m), dtype=complex)
    inner = np.zeros((geom.n, m + 1), dtype=complex)
    for k, inc in enumerate(geom.inclusions):
        blk = x[k * per:(k + 1) * per]
        b = blk[: 2 * m : 2] + 1j * blk[1 : 2 * m : 2]
        ext[k] = b * inc.radius ** np.arange(1, m + 1)
        inner[k, 0] = blk[2 * m]
        inner[k, 1:] = blk[2 * m + 1 :: 2] + 1j * blk[2 * m + 2 :: 2]
    return ext, inner


def _solve_order(problem: CellProblem, order: int, cond_limit: float = 1e12) -> HarmonicCellSolution:
    geom = problem.geometry
    npts = 4 * (order + 1)
    qbar = np.conj(problem.mean_flux)
    condition = 1.0
    if geom.n and order:
        a, rhs = _assemble(problem, order, npts)
        x, _, rank, sv = np.linalg.lstsq(a, rhs, rcond=None)
        condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        if condition > cond_limit or rank < a.shape[1]:
            raise SolverError(
                f"collocation system ill-conditioned (condition {condition:.3g}); "
                "inclusions too close or order too small",
                condition=condition,
            )
        ext, inner = _unpack(problem, order, x)
    else:
        ext = np.zeros((geom.n, order), dtype=complex)
        inner = np.zeros((geom.n, order + 1), dtype=complex)
        if geom.n:
            # order 0: inclusions see the background field only
            inner[:, 0] = [(qbar * inc.center).real for inc in geom.inclusions]
    s = complex(np.sum(ext[:, 0])) if order else 0j
    background = complex(qbar + np.pi * np.conj(s))
    multipoles = tuple(MultipoleSum(ext[k]) for k in range(geom.n))
    sol = HarmonicCellSolution(
        problem=problem,
        order=order,
        background=background,
        exterior_coefficients=ext,
        interior_coefficients=inner,
        offset=0.0,
        residual_norm=0.0,
        condition=condition,
        _multipoles=multipoles,
    )
    offset = float(sol.potential(np.array([0j]))[0])
    residual = 0.0
    for k in range(geom.n):
        jump, flux = sol.interface_residuals(k)
        residual = max(residual, float(np.abs(jump).max()), float(np.abs(flux).max()))
    object.__setattr__(sol, "offset", offset)
    object.__setattr__(sol, "residual_norm", residual)
    return sol


def next_order(order: int) -> int:
    return order + 2 * max(1, order // 6)


def solve(problem: CellProblem) -> HarmonicCellSolution:
    """Solve the cell problem, raising the order until the residual meets ``tol``.

    The order starts at ``problem.truncation_order`` and grows geometrically
    up to ``problem.max_order``; set ``max_order <= truncation_order`` for a
    single fixed-order solve that reports its residual without raising.
    """
    order = problem.truncation_order
    if problem.geometry.n == 0:
        return _solve_order(problem, 0)
    if np.allclose(problem.contrasts, 1.0):
        return _solve_order(problem, order)
    if problem.max_order <= order:
        return _solve_order(problem, order)
    while True:
        sol = _solve_order(problem, order)
        log.debug("order %d residual %.3g condition %.3g", order, sol.residual_norm, sol.condition)
        if sol.residual_norm <= problem.tol:
            return sol
        if order >= problem.max_order:
            raise SolverError(
                f"residual {sol.residual_norm:.3g} above tolerance {problem.tol:.3g} at order {order}",
                condition=sol.condition,
                residual=sol.residual_norm,
            )
        order = min(next_order(order), problem.max_order)


def linear_tensor(geometry: CellGeometry, contrasts, **kwargs) -> tuple[np.ndarray, tuple]:
    """Effective conductivity tensor of the linear problem and the two solutions.

    Column j of the resistance tensor is the period-jump vector of the
    solution driven by a unit mean flux along axis j.
    """
    sols = []
    cols = []
    for angle in (0.0, np.pi / 2):
        sol = solve(CellProblem(geometry, contrasts, -1.0, angle, **kwargs))
        sols.append(sol)
        cols.append(sol.period_jumps())
    resistance = np.array(cols).T
    return np.linalg.inv(resistance), tuple(sols)
