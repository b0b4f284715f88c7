"""Temperature-dependent conductivities and their Kirchhoff maps.

A profile is piecewise linear in T with constant extrapolation, so the
Kirchhoff map ``f(T) = int_0^T lambda`` is piecewise quadratic and its inverse
has a closed form on each branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PROPORTIONALITY_TOL = 1e-10


@dataclass(frozen=True)
class ConductivityProfile:
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float).ravel()
        y = np.asarray(self.values, dtype=float).ravel()
        if x.size == 0 or x.size != y.size:
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(y <= 0) or not np.all(np.isfinite(y)):
            raise ValueError("conductivity values must be positive and finite")
        object.__setattr__(self, "breakpoints", tuple(x.tolist()))
        object.__setattr__(self, "values", tuple(y.tolist()))

    @classmethod
    def constant(cls, value: float) -> "ConductivityProfile":
        return cls((0.0,), (value,))

    @classmethod
    def trapezoid(cls, x1: float, x2: float, y_lo: float, y_hi: float) -> "ConductivityProfile":
        """Tent profile: ``y_lo`` outside [x1, x2], peak ``y_hi`` at T = 0."""
        if not x1 < 0 < x2:
            raise ValueError("trapezoid profile needs x1 < 0 < x2")
        return cls((x1, 0.0, x2), (y_lo, y_hi, y_lo))

    def __call__(self, T):
        return eval_lambda(self, T)

    def scaled(self, factor: float) -> "ConductivityProfile":
        return ConductivityProfile(self.breakpoints, tuple(factor * v for v in self.values))

    def refined(self, points: Sequence[float]) -> "ConductivityProfile":
        """Same function with extra breakpoints inserted."""
        x = np.union1d(self.breakpoints, points)
        return ConductivityProfile(tuple(x), tuple(eval_lambda(self, x)))


def eval_lambda(profile: ConductivityProfile, T):
    x = np.asarray(profile.breakpoints)
    y = np.asarray(profile.values)
    # np.interp extrapolates with the end values
    return np.interp(T, x, y)


@dataclass(frozen=True, eq=False)
class KirchhoffMap:
    """``f(T) = int_0^T lambda`` for a piecewise-linear profile, and its inverse."""

    profile: ConductivityProfile
    _x: np.ndarray = field(init=False, repr=False)
    _v: np.ndarray = field(init=False, repr=False)
    _s: np.ndarray = field(init=False, repr=False)
    _F: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.profile.breakpoints, dtype=float)
        v = np.asarray(self.profile.values, dtype=float)
        s = np.diff(v) / np.diff(x) if x.size > 1 else np.zeros(0)
        # antiderivative at the breakpoints, anchored at x[0]
        F = np.concatenate([[0.0], np.cumsum(0.5 * (v[:-1] + v[1:]) * np.diff(x))])
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_F", F - self._raw(0.0, x, v, s, F))

    @staticmethod
    def _raw(T, x, v, s, F):
        T = np.asarray(T, dtype=float)
        i = np.clip(np.searchsorted(x, T, side="right") - 1, 0, max(x.size - 1, 0))
        tau = T - x[i]
        below = T < x[0]
        inner = (~below) & (i < x.size - 1)
        slope = np.zeros_like(tau)
        if s.size:
            slope[inner] = s[i[inner]]
        out = F[i] + v[i] * tau + 0.5 * slope * tau**2
        return np.where(below, F[0] + v[0] * (T - x[0]), out)

    def forward(self, T):
        T = np.asarray(T, dtype=float)
        # the anchor leaves rounding noise at T = 0; pin f(0) = 0 exactly
        return np.where(T == 0.0, 0.0, self._raw(T, self._x, self._v, self._s, self._F))

    def inverse(self, u):
        """Closed-form inverse, branch by branch."""
        u = np.asarray(u, dtype=float)
        x, v, s, F = self._x, self._v, self._s, self._F
        i = np.clip(np.searchsorted(F, u, side="right") - 1, 0, x.size - 1)
        delta = u - F[i]
        below = u < F[0]
        inner = (~below) & (i < x.size - 1)
        slope = np.zeros_like(delta)
        if s.size:
            slope[inner] = s[i[inner]]
        # root of slope/2 tau^2 + v tau - delta = 0 continuous with the linear case;
        # the discriminant is lambda(T)^2 > 0
        disc = np.sqrt(np.maximum(v[i] ** 2 + 2.0 * slope * delta, 0.0))
        tau = 2.0 * delta / (v[i] + disc)
        T = x[i] + tau
        return np.where(below, x[0] + (u - F[0]) / v[0], T)

    @property
    def breakpoint_values(self) -> np.ndarray:
        """Values f(x_i) at the profile breakpoints (where f is not C^2)."""
        return self._F.copy()

    def __call__(self, T):
        return self.forward(T)


def kirchhoff_forward(kmap: KirchhoffMap, T):
    return kmap.forward(T)


def kirchhoff_inverse(kmap: KirchhoffMap, u):
    return kmap.inverse(u)


def detect_proportionality(
    matrix: ConductivityProfile,
    inclusion: ConductivityProfile,
    tol: float = PROPORTIONALITY_TOL,
    reference_temperature: float = 0.0,
) -> float | None:
    """Constant ``C`` with ``lambda = C * lambda_k`` everywhere, or None.

    Both profiles are piecewise linear, so checking the union of their
    breakpoints is exhaustive.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    c = float(matrix(reference_temperature) / inclusion(reference_temperature))
    pts = np.union1d(matrix.breakpoints, inclusion.breakpoints)
    lam = matrix(pts)
    dev = np.abs(lam - c * inclusion(pts)) / lam
    return c if dev.max() <= tol else None


class NotProportionalError(ValueError):
    """The matrix and some inclusion conductivities are not proportional."""


@dataclass(frozen=True, eq=False)
class ContrastFamily:
    matrix_profile: ConductivityProfile
    inclusion_profiles: tuple[ConductivityProfile, ...]
    tol: float = PROPORTIONALITY_TOL
    constants: tuple[float | None, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "inclusion_profiles", tuple(self.inclusion_profiles))
        object.__setattr__(
            self,
            "constants",
            tuple(detect_proportionality(self.matrix_profile, p, self.tol) for p in self.inclusion_profiles),
        )
        object.__setattr__(self, "_matrix_map", KirchhoffMap(self.matrix_profile))
        object.__setattr__(self, "_maps", tuple(KirchhoffMap(p) for p in self.inclusion_profiles))

    @property
    def proportional(self) -> bool:
        return all(c is not None for c in self.constants)

    def require_proportional(self) -> tuple[float, ...]:
        bad = [k for k, c in enumerate(self.constants) if c is None]
        if bad:
            raise NotProportionalError(
                "matrix conductivity is not a constant multiple of the conductivity of "
                f"inclusion profile(s) {bad}: lambda(T) = C_k lambda_k(T) fails"
            )
        return tuple(self.constants)

    @property
    def matrix_map(self) -> KirchhoffMap:
        return self._matrix_map

    def inclusion_map(self, k: int) -> KirchhoffMap:
        return self._maps[k]

    def contrasts(self, contrast_ids: Sequence[int]) -> tuple[float, ...]:
        """Inclusion-to-matrix ratios 1/C_k of the linear problem per inclusion."""
        consts = self.require_proportional()
        return tuple(1.0 / consts[k] for k in contrast_ids)


def interface_map(family: ContrastFamily, k: int, xi):
    """F_k(xi) = f(f_k^{-1}(xi))."""
    return family.matrix_map.forward(family.inclusion_map(k).inverse(xi))


def reference_family() -> ContrastFamily:
    """Tent-shaped profiles with x1=-2, x2=2, matrix 4.5..13.5, inclusions 50..150."""
    return ContrastFamily(
        ConductivityProfile.trapezoid(-2.0, 2.0, 4.5, 13.5),
        (ConductivityProfile.trapezoid(-2.0, 2.0, 50.0, 150.0),),
    )
