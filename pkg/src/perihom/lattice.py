"""Weierstrass-type basis functions for the square lattice with periods 1 and i.

The exterior basis used by the cell solver is

    Z_1(w) = zeta(w),   Z_{p+1}(w) = -Z_p'(w) / p,

so that ``Z_p(w) = w**-p + (regular part)`` near the origin, ``Z_2`` is the
Weierstrass p-function and ``Z_p = sum over lattice of (w - omega)**-p`` for
p >= 3.  Every ``Z_p`` with p >= 2 is doubly periodic; ``Z_1`` gains the
Legendre constants ``ZETA_JUMP_X = pi`` and ``ZETA_JUMP_Y = -i pi`` per period.

Evaluation wraps the argument into the fundamental square, sums the 3x3 block
of nearest lattice poles exactly and adds the far-lattice contribution as a
Taylor series whose radius of convergence (1.5 from the square) is large
compared with the wrapped argument (at most sqrt(2)/2).
"""

from __future__ import annotations

from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import comb

ZETA_JUMP_X = np.pi
ZETA_JUMP_Y = -1j * np.pi

# Lattice points of the 3x3 block around the origin, origin excluded.
NEAR_POINTS = np.array(
    [m1 + 1j * m2 for m1 in (-1, 0, 1) for m2 in (-1, 0, 1) if (m1, m2) != (0, 0)]
)

FAR_ORDER = 480
_DIRECT_RADIUS = 40


def _eisenstein_qseries(order: int, dps: int = 40) -> float:
    """G_order = sum' (m1 + i m2)**-order via the q-expansion at tau = i."""
    with mpmath.workdps(dps):
        k2 = order
        q = mpmath.exp(-2 * mpmath.pi)
        total = mpmath.mpf(0)
        n = 1
        while True:
            sigma = sum(mpmath.mpf(d) ** (k2 - 1) for d in range(1, n + 1) if n % d == 0)
            term = sigma * q**n
            total += term
            if term < mpmath.mpf(10) ** (-dps + 5) * total:
                break
            n += 1
        pref = 2 * (2 * mpmath.pi * 1j) ** k2 / mpmath.factorial(k2 - 1)
        value = 2 * mpmath.zeta(k2) + pref * total
        return float(mpmath.re(value))


@lru_cache(maxsize=None)
def eisenstein_sums(max_order: int = FAR_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Full and far-lattice Eisenstein sums ``G_n`` and ``Gfar_n`` for n <= max_order.

    ``Gfar_n`` sums ``omega**-n`` over lattice points outside the 3x3 block.
    Both vanish unless n is a multiple of 4 (square-lattice symmetry).  The
    two lowest orders come from the q-expansion; higher far sums converge fast
    enough for direct square-shell summation.
    """
    full = np.zeros(max_order + 1)
    far = np.zeros(max_order + 1)
    m = np.arange(-_DIRECT_RADIUS, _DIRECT_RADIUS + 1)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    mask = np.maximum(np.abs(m1), np.abs(m2)) >= 2
    far_points = (m1 + 1j * m2)[mask]
    # sort by decreasing modulus so small terms are accumulated first
    far_points = far_points[np.argsort(-np.abs(far_points))]
    inv = 1.0 / far_points
    for n in range(4, max_order + 1, 4):
        near = np.sum(NEAR_POINTS ** (-n)).real
        if n <= 8:
            full[n] = _eisenstein_qseries(n)
            far[n] = full[n] - near
        else:
            far[n] = np.sum(inv**n).real
            full[n] = far[n] + near
    return full, far


def wrap_to_cell(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split ``w = w0 + m1 + i m2`` with w0 in the closed unit square around 0."""
    w = np.asarray(w, dtype=complex)
    m1 = np.round(w.real)
    m2 = np.round(w.imag)
    return w - m1 - 1j * m2, m1, m2


@lru_cache(maxsize=None)
def _far_matrix(pmax: int, nmax: int) -> np.ndarray:
    """Column p-1 holds the Taylor coefficients of the far-lattice part of Z_p."""
    _, far = eisenstein_sums()
    out = np.zeros((nmax + 1, pmax))
    for p in range(1, pmax + 1):
        n = np.arange(max(p - 1, 2), nmax + 1)
        out[n - p + 1, p - 1] = (-1.0) ** p * comb(n, p - 1) * far[n + 1]
    out.setflags(write=False)
    return out


def _far_coefficients(p: int, nmax: int) -> np.ndarray:
    """Taylor coefficients c_j (j = 0..nmax-p+1) of the far-lattice part of Z_p."""
    return _far_matrix(p, nmax)[: nmax - p + 2, p - 1]


def _horner(coeff: np.ndarray, w: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(w)
    for c in coeff[::-1]:
        acc = acc * w + c
    return acc


def basis_values(w, pmax: int, nmax: int = 400) -> np.ndarray:
    """Evaluate Z_1..Z_pmax at the points ``w`` (any location off the lattice).

    Returns an array of shape ``w.shape + (pmax,)``; column p-1 holds Z_p.
    """
    w = np.asarray(w, dtype=complex)
    w0, m1, m2 = wrap_to_cell(w)
    flat = w0.ravel()
    powers = flat[:, None] ** np.arange(nmax + 1)
    out = powers @ _far_matrix(pmax, nmax)
    for p in range(1, pmax + 1):
        near = flat ** (-p)
        for nu in NEAR_POINTS:
            near = near + (flat - nu) ** (-p)
            if p == 1:
                near = near + 1.0 / nu + flat / nu**2
            elif p == 2:
                near = near - 1.0 / nu**2
        out[:, p - 1] += near
    out = out.reshape(w.shape + (pmax,))
    out[..., 0] += m1 * ZETA_JUMP_X + m2 * ZETA_JUMP_Y
    return out


class MultipoleSum:
    """A fixed linear combination ``sum_p b_p Z_p(w)`` with fast evaluation.

    The far-lattice parts of all basis functions are folded into a single
    power series, and the nine near poles are summed with one Horner pass in
    ``1/(w - nu)`` each.  The subtraction terms of zeta and p drop out because
    the near-block sums of 1/nu and 1/nu**2 vanish.
    """

    def __init__(self, coefficients, tol: float = 1e-18):
        b = np.asarray(coefficients, dtype=complex)
        self.coefficients = b
        pmax = b.size
        if pmax:
            series = (_far_matrix(pmax, FAR_ORDER - 1) @ b)[: FAR_ORDER - pmax]
        else:
            series = np.zeros(1, dtype=complex)
        # |w0| <= sqrt(2)/2 on the wrapped square
        bound = np.abs(series) * (np.sqrt(0.5) ** np.arange(series.size))
        keep = np.nonzero(bound > tol * max(bound.max(), 1e-300))[0]
        last = keep[-1] + 1 if keep.size else 1
        self._series = series[:last]
        self._dseries = np.arange(1, last) * series[1:last] if last > 1 else np.zeros(1, dtype=complex)
        self._poly = np.concatenate([[0.0], b])  # H(s) = sum_p b_p s**p
        self._dpoly = np.arange(1, pmax + 1) * b  # H'(s)

    def value(self, w) -> np.ndarray:
        w0, m1, m2 = wrap_to_cell(w)
        acc = _horner(self._series, w0)
        for nu in _BLOCK:
            acc = acc + _horner(self._poly, 1.0 / (w0 - nu))
        if self.coefficients.size:
            acc = acc + self.coefficients[0] * (m1 * ZETA_JUMP_X + m2 * ZETA_JUMP_Y)
        return acc

    def derivative(self, w) -> np.ndarray:
        w0, _, _ = wrap_to_cell(w)
        acc = _horner(self._dseries, w0)
        if self.coefficients.size:
            for nu in _BLOCK:
                s = 1.0 / (w0 - nu)
                acc = acc - s * s * _horner(self._dpoly, s)
        return acc


_BLOCK = np.concatenate([[0j], NEAR_POINTS])
