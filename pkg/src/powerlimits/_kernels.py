"""Hot numeric kernels, with optional numba acceleration.

Every kernel here has a pure-numpy implementation and, when numba imports
successfully, a compiled twin.  Which path runs is decided per call:

1. an explicit ``use_numba=`` argument wins,
2. otherwise the ``POWERLIMITS_PURE_NUMPY`` environment variable (any value
   other than empty/``0`` forces the numpy paths),
3. otherwise the numba path is used whenever numba is available.

Matrix factorizations (QR, eigendecompositions, batched matmul) are *not*
here on purpose: they are LAPACK/BLAS bound and gain nothing from jitting.
``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

TAU = 2.0 * math.pi

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled(use_numba=None):
    """Resolve which path to take (see module docstring for the order)."""
    if use_numba is not None:
        return bool(use_numba) and NUMBA_AVAILABLE
    flag = os.environ.get("POWERLIMITS_PURE_NUMPY", "")
    if flag and flag != "0":
        return False
    return NUMBA_AVAILABLE


def wrap_angles(x):
    """Reduce angles to [0, 2*pi).

    ``np.mod`` alone can round a tiny negative input up to exactly 2*pi,
    which would violate the half-open range, hence the second pass.
    """
    w = np.mod(np.asarray(x, dtype=np.float64), TAU)
    return np.where(w >= TAU, 0.0, w)


# ---------------------------------------------------------------------------
# empirical Fourier sums: sum_s exp(-i p . theta_s) for a batch of lattice
# points p; this is the workhorse of every statistical suite.
# ---------------------------------------------------------------------------


def _fourier_sums_numpy(angles, lattice):
    out = np.empty(lattice.shape[0], dtype=np.complex128)
    for k, p in enumerate(lattice):
        out[k] = np.exp(-1j * (angles @ p.astype(np.float64))).sum()
    return out


@njit(cache=True)
def _fourier_sums_numba(angles, lattice):  # pragma: no cover - jitted
    S, n = angles.shape
    K = lattice.shape[0]
    out = np.empty(K, dtype=np.complex128)
    for k in range(K):
        acc_re = 0.0
        acc_im = 0.0
        for s in range(S):
            phase = 0.0
            for j in range(n):
                phase += lattice[k, j] * angles[s, j]
            acc_re += math.cos(phase)
            acc_im -= math.sin(phase)
        out[k] = complex(acc_re, acc_im)
    return out


def fourier_sums(angles, lattice, use_numba=None):
    """Sums of exp(-i p.theta) over sample rows, one per lattice row."""
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    lattice = np.ascontiguousarray(lattice, dtype=np.int64)
    if angles.ndim != 2 or lattice.ndim != 2 or angles.shape[1] != lattice.shape[1]:
        raise ValueError("angles must be (S, n) and lattice (K, n)")
    if numba_enabled(use_numba):
        return _fourier_sums_numba(angles, lattice)
    return _fourier_sums_numpy(angles, lattice)


# ---------------------------------------------------------------------------
# trigonometric polynomial evaluation at arbitrary points (rejection
# samplers evaluate densities at ~2S proposal points per draw batch).
# ---------------------------------------------------------------------------


def _trig_poly_numpy(lattice, coeffs, points):
    phases = points @ lattice.T.astype(np.float64)
    return np.real(np.exp(1j * phases) @ coeffs)


@njit(cache=True)
def _trig_poly_numba(lattice, coeffs, points):  # pragma: no cover - jitted
    S, n = points.shape
    K = lattice.shape[0]
    out = np.empty(S, dtype=np.float64)
    for s in range(S):
        acc = 0.0
        for k in range(K):
            phase = 0.0
            for j in range(n):
                phase += lattice[k, j] * points[s, j]
            acc += coeffs[k].real * math.cos(phase) - coeffs[k].imag * math.sin(phase)
        out[s] = acc
    return out


def trig_poly_values(lattice, coeffs, points, use_numba=None):
    """Real part of sum_p a_p exp(+i p.theta) at each point row."""
    lattice = np.ascontiguousarray(lattice, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != lattice.shape[1]:
        raise ValueError("points must be (S, n) matching the lattice width")
    if numba_enabled(use_numba):
        return _trig_poly_numba(lattice, coeffs, points)
    return _trig_poly_numpy(lattice, coeffs, points)


# ---------------------------------------------------------------------------
# grid fold: the m-fold branch average that pushes a density grid forward
# under theta -> m*theta (mod 2*pi).  Output grid has G/m points per axis;
# entry q averages the m**n input entries {q + l*(G/m)} per axis.
# ---------------------------------------------------------------------------


def _fold_grid_numpy(values, m):
    n = values.ndim
    g = values.shape[0]
    coarse = g // m
    shaped = values.reshape(tuple(x for _ in range(n) for x in (m, coarse)))
    return shaped.mean(axis=tuple(range(0, 2 * n, 2)))


@njit(cache=True)
def _fold_grid_1d(values, m):  # pragma: no cover - jitted
    g = values.shape[0]
    coarse = g // m
    out = np.zeros(coarse, dtype=np.float64)
    for l in range(m):
        base = l * coarse
        for q in range(coarse):
            out[q] += values[base + q]
    return out / m


@njit(cache=True)
def _fold_grid_2d(values, m):  # pragma: no cover - jitted
    g = values.shape[0]
    coarse = g // m
    out = np.zeros((coarse, coarse), dtype=np.float64)
    for l1 in range(m):
        for l2 in range(m):
            b1 = l1 * coarse
            b2 = l2 * coarse
            for q1 in range(coarse):
                for q2 in range(coarse):
                    out[q1, q2] += values[b1 + q1, b2 + q2]
    return out / (m * m)


def fold_grid(values, m, use_numba=None):
    """Branch-average a (G,)*n value grid down to (G/m,)*n.

    Requires m | G on every axis.  Works on arbitrary signed grids (the
    contraction property is tested on signed inputs, not just densities).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if m < 1:
        raise ValueError("m must be a positive integer")
    g = values.shape[0]
    if any(s != g for s in values.shape):
        raise ValueError("grid must have equal extent on every axis")
    if g % m != 0:
        raise ValueError(f"m={m} must divide the grid size {g}")
    if m == 1:
        return values.copy()
    if numba_enabled(use_numba):
        if values.ndim == 1:
            return _fold_grid_1d(values, m)
        if values.ndim == 2:
            return _fold_grid_2d(values, m)
    return _fold_grid_numpy(values, m)


# ---------------------------------------------------------------------------
# entrywise power map on angle rows
# ---------------------------------------------------------------------------


def _power_mod_numpy(rows, m):
    return wrap_angles(m * rows)


@njit(cache=True)
def _power_mod_numba(rows, m):  # pragma: no cover - jitted
    S, n = rows.shape
    out = np.empty((S, n), dtype=np.float64)
    for s in range(S):
        for j in range(n):
            t = (m * rows[s, j]) % TAU
            if t >= TAU:
                t = 0.0
            out[s, j] = t
    return out


def power_mod(rows, m, use_numba=None):
    """Entrywise m*theta reduced to [0, 2*pi) on an (S, n) angle array."""
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-D angle array")
    if m < 1:
        raise ValueError("m must be a positive integer")
    if numba_enabled(use_numba):
        return _power_mod_numba(rows, float(m))
    return _power_mod_numpy(rows, m)
