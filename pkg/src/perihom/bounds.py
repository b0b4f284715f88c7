"""Bounds on the effective conductivity and the comparison with ``lambda(T) * Lambda_hat``.

Conductivities entering the bounds are evaluated at the sample's average
temperature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conductivity import ContrastFamily

MINOR_SLACK = 1e-8
HS_SLACK = 1e-8
DEGENERACY_CONDITION = 1e12

MINOR_NAMES = ("m11", "m21", "m12", "m22")


def phase_conductivities(family: ContrastFamily, T, inclusion: int = 0):
    """Matrix and inclusion conductivity at T; a family without inclusions repeats the matrix."""
    lam = family.matrix_profile(T)
    if not family.inclusion_profiles:
        return lam, lam
    return lam, family.inclusion_profiles[inclusion](T)


def voigt_reuss(family: ContrastFamily, volume_fraction: float, T, inclusion: int = 0):
    """Harmonic (``mu1``) and arithmetic (``mu2``) means of the two conductivities."""
    if not 0.0 <= volume_fraction < 1.0:
        raise ValueError("volume fraction must lie in [0, 1)")
    lam, lam_k = phase_conductivities(family, T, inclusion)
    f = volume_fraction
    mu1 = 1.0 / ((1.0 - f) / lam + f / lam_k)
    mu2 = (1.0 - f) * lam + f * lam_k
    return mu1, mu2


def elementary_minors(L, mu1, mu2) -> np.ndarray:
    """The four quantities whose signs encode ``mu1 I <= L <= mu2 I``.

    Works on one tensor or on a stack of shape ``(n, 2, 2)``; the last axis
    of the result holds ``m11, m21, m12, m22``.
    """
    L = np.asarray(L, dtype=float)
    l11, l22 = L[..., 0, 0], L[..., 1, 1]
    s = L[..., 0, 1] + L[..., 1, 0]
    return np.stack(
        [
            mu1 - l11,
            mu2 - l11,
            4.0 * (mu1 - l11) * (mu1 - l22) - s**2,
            4.0 * (mu2 - l11) * (mu2 - l22) - s**2,
        ],
        axis=-1,
    )


def check_elementary(L, mu1, mu2, slack: float = MINOR_SLACK):
    """Minors and their feasibility: m11 <= 0, m21 >= 0, m12 >= 0, m22 >= 0."""
    m = elementary_minors(L, mu1, mu2)
    ok = np.stack([m[..., 0] <= slack, m[..., 1] >= -slack, m[..., 2] >= -slack, m[..., 3] >= -slack], axis=-1)
    return m, ok


@dataclass(frozen=True)
class HashinShtrikman:
    lower_lhs: float
    lower_rhs: float
    upper_lhs: float
    upper_rhs: float
    lower_ok: bool
    upper_ok: bool
    degenerate: bool
    matrix_is_lower: bool  # False when the inclusion is the poorer conductor


def _trace_inverse(M):
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > DEGENERACY_CONDITION:
        return np.nan
    return float(np.trace(np.linalg.inv(M)))


def check_hashin_shtrikman(L, lam: float, lam_k: float, mu1: float, mu2: float, slack: float = HS_SLACK):
    """Trace inequalities bounding ``L`` from both phases.

    With ``a`` the smaller and ``b`` the larger phase conductivity:

        tr[(L - a I)^-1] <= 1/(mu2 - a) + 1/(mu1 - a)
        tr[(b I - L)^-1] <= 1/(b - mu2) + 1/(b - mu1)

    A singular left-hand matrix or coinciding bounds make the check
    degenerate; both flags are then False.
    """
    L = np.asarray(L, dtype=float)
    matrix_is_lower = lam <= lam_k
    a, b = (lam, lam_k) if matrix_is_lower else (lam_k, lam)
    eye = np.eye(2)
    lhs1 = _trace_inverse(L - a * eye)
    lhs2 = _trace_inverse(b * eye - L)
    with np.errstate(divide="ignore"):
        gaps = np.array([mu2 - a, mu1 - a, b - mu2, b - mu1])
    tiny = np.abs(gaps) <= 1e-12 * max(abs(b), 1.0)
    degenerate = bool(np.isnan(lhs1) or np.isnan(lhs2) or tiny.any())
    if degenerate:
        rhs1 = rhs2 = np.nan
        ok1 = ok2 = False
    else:
        rhs1 = 1.0 / gaps[0] + 1.0 / gaps[1]
        rhs2 = 1.0 / gaps[2] + 1.0 / gaps[3]
        ok1 = bool(lhs1 <= rhs1 + slack)
        ok2 = bool(lhs2 <= rhs2 + slack)
    return HashinShtrikman(lhs1, rhs1, lhs2, rhs2, ok1, ok2, degenerate, bool(matrix_is_lower))


@dataclass(frozen=True)
class BoundsReport:
    avg_temperature: np.ndarray  # (n,)
    mu1: np.ndarray
    mu2: np.ndarray
    minors: np.ndarray  # (n, 4): m11, m21, m12, m22
    minors_ok: np.ndarray  # (n, 4)
    hs: tuple  # HashinShtrikman per sample

    @property
    def hs_ok(self) -> np.ndarray:
        """(n, 2) feasibility of the lower and upper trace inequalities; degenerate counts as feasible."""
        return np.array([[h.lower_ok or h.degenerate, h.upper_ok or h.degenerate] for h in self.hs]).reshape(-1, 2)

    @property
    def degenerate(self) -> np.ndarray:
        return np.array([h.degenerate for h in self.hs], dtype=bool)

    @property
    def feasible(self) -> bool:
        return bool(self.minors_ok.all() and self.hs_ok.all())

    def violations(self) -> list[str]:
        """Descriptions of every failed inequality, largest violation first."""
        found = []
        for i, T in enumerate(self.avg_temperature):
            for j, name in enumerate(MINOR_NAMES):
                if not self.minors_ok[i, j]:
                    found.append((abs(self.minors[i, j]), f"<T>={T:.6g}: {name} = {self.minors[i, j]:.6g}"))
            h = self.hs[i]
            if not (h.lower_ok or h.degenerate):
                found.append((h.lower_lhs - h.lower_rhs,
                              f"<T>={T:.6g}: lower trace bound {h.lower_lhs:.6g} > {h.lower_rhs:.6g}"))
            if not (h.upper_ok or h.degenerate):
                found.append((h.upper_lhs - h.upper_rhs,
                              f"<T>={T:.6g}: upper trace bound {h.upper_lhs:.6g} > {h.upper_rhs:.6g}"))
        found.sort(key=lambda item: -item[0])
        return [msg for _, msg in found]


def bounds_report(avg_temperature, conductivity, family: ContrastFamily, volume_fraction: float,
                  inclusion: int = 0) -> BoundsReport:
    """Elementary and trace bounds along a sampled curve of tensors ``(n, 2, 2)``."""
    T = np.asarray(avg_temperature, dtype=float)
    L = np.asarray(conductivity, dtype=float)
    mu1, mu2 = voigt_reuss(family, volume_fraction, T, inclusion)
    minors, ok = check_elementary(L, mu1, mu2)
    lam, lam_k = phase_conductivities(family, T, inclusion)
    hs = tuple(
        check_hashin_shtrikman(L[i], lam[i], lam_k[i], mu1[i], mu2[i]) for i in range(T.size)
    )
    return BoundsReport(T, np.asarray(mu1), np.asarray(mu2), minors, ok, hs)


@dataclass(frozen=True)
class ComparisonReport:
    avg_temperature: np.ndarray
    delta_left: np.ndarray  # (n, 2, 2)
    delta_right: np.ndarray  # (n, 2, 2)
    reference: np.ndarray  # linear tensor Lambda_hat

    def max_diagonal(self) -> tuple[float, float]:
        """Largest diagonal |delta| and the average temperature where it occurs."""
        d = np.maximum(
            np.abs(self.delta_left[:, [0, 1], [0, 1]]).max(axis=1),
            np.abs(self.delta_right[:, [0, 1], [0, 1]]).max(axis=1),
        )
        i = int(np.argmax(d))
        return float(d[i]), float(self.avg_temperature[i])

    def max_off_diagonal(self) -> float:
        return float(
            max(
                np.abs(self.delta_left[:, [0, 1], [1, 0]]).max(),
                np.abs(self.delta_right[:, [0, 1], [1, 0]]).max(),
            )
        )


def proportional_compare(avg_temperature, conductivity, family: ContrastFamily, reference) -> ComparisonReport:
    """Relative gaps between the nonlinear tensors and ``lambda(<T>) * reference``.

    ``delta_l = (L - lambda Lhat) L^-1`` and ``delta_r = L^-1 (L - lambda Lhat)``.
    """
    T = np.asarray(avg_temperature, dtype=float)
    L = np.asarray(conductivity, dtype=float)
    ref = np.asarray(reference, dtype=float)
    lam = family.matrix_profile(T)
    diff = L - lam[:, None, None] * ref
    inv = np.linalg.inv(L)
    return ComparisonReport(T, diff @ inv, inv @ diff, ref)
