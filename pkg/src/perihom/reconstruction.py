"""Physical temperature and heat flux rebuilt from the linear cell solution.

With ``lambda = C_k lambda_k`` the Kirchhoff potentials are ``u = f(T)`` in the
matrix and ``C_k u_k = C_k f_k(T)`` in inclusion k, and both equal the
continuous linear potential ``w`` up to the free additive constant ``C``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cell_solver import HarmonicCellSolution
from .conductivity import ContrastFamily, KirchhoffMap


@dataclass(frozen=True, eq=False)
class NonlinearField:
    solution: HarmonicCellSolution
    family: ContrastFamily
    shift: float = 0.0

    def __post_init__(self):
        consts = self.family.require_proportional()
        ids = [inc.contrast_id for inc in self.solution.geometry.inclusions]
        expected = np.array([1.0 / consts[k] for k in ids])
        if not np.allclose(expected, self.solution.contrasts, rtol=1e-9):
            raise ValueError("solution contrasts do not match 1/C_k of the conductivity family")

    def with_shift(self, shift: float) -> "NonlinearField":
        return NonlinearField(self.solution, self.family, shift)

    @property
    def matrix_map(self) -> KirchhoffMap:
        return self.family.matrix_map

    def _constant(self, k: int) -> float:
        return self.family.constants[self.solution.geometry.inclusions[k].contrast_id]

    def _inclusion_map(self, k: int) -> KirchhoffMap:
        return self.family.inclusion_map(self.solution.geometry.inclusions[k].contrast_id)

    def temperature_from_potential(self, w, region) -> np.ndarray:
        """T for potential values ``w`` (before shifting) located in ``region``."""
        w = np.asarray(w, dtype=float) + self.shift
        region = np.broadcast_to(region, w.shape)
        T = np.empty(w.shape)
        mask = region == -1
        T[mask] = self.matrix_map.inverse(w[mask])
        for k in np.unique(region[~mask]):
            sel = region == k
            T[sel] = self._inclusion_map(k).inverse(w[sel] / self._constant(k))
        return T

    def temperature_at(self, z, region="matrix") -> np.ndarray:
        w = self.solution.eval_potential(z, region)
        k = -1 if region in (None, "matrix") else int(region)
        return self.temperature_from_potential(w, np.full(np.shape(w), k))

    def temperature_gradient_at(self, z, region="matrix") -> np.ndarray:
        """grad T by the chain rule ``grad T = grad u / lambda(T)``."""
        T = self.temperature_at(z, region)
        g = self.solution.eval_gradient(z, region)
        if region in (None, "matrix"):
            lam = self.family.matrix_profile(T)
        else:
            k = int(region)
            lam = self._constant(k) * self.family.inclusion_profiles[
                self.solution.geometry.inclusions[k].contrast_id
            ](T)
        return g / lam[..., None]

    def flux_at(self, z, region="matrix") -> np.ndarray:
        """Heat flux ``lambda(T) grad T`` (matrix) or ``lambda_k(T) grad T`` (inclusion)."""
        T = self.temperature_at(z, region)
        grad_T = self.temperature_gradient_at(z, region)
        if region in (None, "matrix"):
            lam = self.family.matrix_profile(T)
        else:
            k = int(region)
            lam = self.family.inclusion_profiles[self.solution.geometry.inclusions[k].contrast_id](T)
        return lam[..., None] * grad_T

    def temperature(self, z) -> np.ndarray:
        """T at arbitrary points, choosing the region per point."""
        z = np.asarray(z, dtype=complex)
        return self.temperature_from_potential(self.solution.potential(z), self.solution.geometry.locate(z))


def temperature_at(field: NonlinearField, z, region="matrix"):
    return field.temperature_at(z, region)


def flux_at(field: NonlinearField, z, region="matrix"):
    return field.flux_at(z, region)


def nonlinear_residual(field: NonlinearField, grid_n: int, margin: float | None = None) -> float:
    """Max of the discrete divergence of ``lambda(T) grad T`` over matrix grid nodes.

    Only temperatures enter: the flux through each face of a node's control
    volume is ``lambda(T_face) (T_right - T_left) / h`` and the divergence is
    the central difference of those fluxes, an O(grid_n**-2) approximation
    of ``div(lambda(T) grad T)`` wherever T and lambda(T) are smooth.  Nodes
    closer than ``margin`` (default ``2/grid_n``) to an interface or to a
    level set where T crosses a conductivity breakpoint are skipped.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    h = 1.0 / grid_n
    margin = max(2.0 * h if margin is None else margin, 1.5 * h)
    s = -0.5 + h * np.arange(grid_n)
    x, y = np.meshgrid(s, s, indexing="ij")
    z = (x + 1j * y).ravel()
    geom = field.solution.geometry
    z = z[(geom.locate(z) == -1) & (geom.interface_distance(z) > margin)]
    if z.size == 0:
        return 0.0
    sol = field.solution
    w = sol.eval_potential(z) + field.shift
    grad = np.linalg.norm(sol.eval_gradient(z), axis=-1)
    kinks = field.matrix_map.breakpoint_values
    if kinks.size:
        dist = np.min(np.abs(w[:, None] - kinks[None, :]), axis=1) / np.maximum(grad, 1e-300)
        z = z[dist > margin]
    if z.size == 0:
        return 0.0
    lam = field.family.matrix_profile
    T0 = field.temperature_at(z)
    div = np.zeros(z.shape)
    for step in (h, 1j * h):
        Tp = field.temperature_at(z + step)
        Tm = field.temperature_at(z - step)
        qp = lam(field.temperature_at(z + 0.5 * step)) * (Tp - T0) / h
        qm = lam(field.temperature_at(z - 0.5 * step)) * (T0 - Tm) / h
        div += (qp - qm) / h
    return float(np.abs(div).max())
