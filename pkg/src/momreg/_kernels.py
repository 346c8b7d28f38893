"""Hot per-block kernels with a numba backend and a pure-numpy fallback.

All kernels take the design matrix restricted to the partitioned rows
(shape ``(n*m, d)``, C-contiguous float64) plus coefficient vectors, and
return one value per block.  Within a block, sums are accumulated pairwise:
the numpy path inherits numpy's pairwise reduction, the numba path uses an
explicit bottom-up pairwise pass, so the decomposition identity for the
block increments stays testable at tight relative tolerance.

The backend is selected once at import time from the ``MOMREG_BACKEND``
environment variable (``auto`` | ``numba`` | ``numpy``; default ``auto``).
"""
from __future__ import annotations

import os
import warnings

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    njit = None
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _block_losses_numpy(X, y, theta, n, m):
    r = X @ theta - y
    return np.square(r).reshape(n, m).mean(axis=1)


def _block_quad_numpy(X, theta_f, theta_h, n, m):
    z = X @ (theta_f - theta_h)
    return np.square(z).reshape(n, m).mean(axis=1)


def _block_mult_numpy(X, y, theta_f, theta_h, n, m):
    z = X @ (theta_f - theta_h)
    r = X @ theta_h - y
    return 2.0 * (z * r).reshape(n, m).mean(axis=1)


def _block_increment_numpy(X, y, theta_f, theta_h, n, m):
    lf = np.square(X @ theta_f - y).reshape(n, m).mean(axis=1)
    lh = np.square(X @ theta_h - y).reshape(n, m).mean(axis=1)
    return lf - lh


NUMPY_IMPL = {
    "block_losses": _block_losses_numpy,
    "block_quad": _block_quad_numpy,
    "block_mult": _block_mult_numpy,
    "block_increment": _block_increment_numpy,
}


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _pairwise_reduce(buf, length):
        # Bottom-up pairwise summation of buf[:length], in place.
        while length > 1:
            half = length // 2
            for i in range(half):
                buf[i] = buf[2 * i] + buf[2 * i + 1]
            if length & 1:
                buf[half] = buf[length - 1]
                length = half + 1
            else:
                length = half
        return buf[0]

    @njit(cache=True)
    def _block_losses_numba(X, y, theta, n, m):
        d = theta.shape[0]
        out = np.empty(n)
        buf = np.empty(m)
        for j in range(n):
            base = j * m
            for i in range(m):
                acc = -y[base + i]
                for k in range(d):
                    acc += X[base + i, k] * theta[k]
                buf[i] = acc * acc
            out[j] = _pairwise_reduce(buf, m) / m
        return out

    @njit(cache=True)
    def _block_quad_numba(X, theta_f, theta_h, n, m):
        d = theta_f.shape[0]
        out = np.empty(n)
        buf = np.empty(m)
        for j in range(n):
            base = j * m
            for i in range(m):
                acc = 0.0
                for k in range(d):
                    acc += X[base + i, k] * (theta_f[k] - theta_h[k])
                buf[i] = acc * acc
            out[j] = _pairwise_reduce(buf, m) / m
        return out

    @njit(cache=True)
    def _block_mult_numba(X, y, theta_f, theta_h, n, m):
        d = theta_f.shape[0]
        out = np.empty(n)
        buf = np.empty(m)
        for j in range(n):
            base = j * m
            for i in range(m):
                z = 0.0
                r = -y[base + i]
                for k in range(d):
                    xv = X[base + i, k]
                    z += xv * (theta_f[k] - theta_h[k])
                    r += xv * theta_h[k]
                buf[i] = z * r
            out[j] = 2.0 * _pairwise_reduce(buf, m) / m
        return out

    @njit(cache=True)
    def _block_increment_numba(X, y, theta_f, theta_h, n, m):
        d = theta_f.shape[0]
        out = np.empty(n)
        buf_f = np.empty(m)
        buf_h = np.empty(m)
        for j in range(n):
            base = j * m
            for i in range(m):
                rf = -y[base + i]
                rh = -y[base + i]
                for k in range(d):
                    xv = X[base + i, k]
                    rf += xv * theta_f[k]
                    rh += xv * theta_h[k]
                buf_f[i] = rf * rf
                buf_h[i] = rh * rh
            out[j] = (_pairwise_reduce(buf_f, m) - _pairwise_reduce(buf_h, m)) / m
        return out

    NUMBA_IMPL = {
        "block_losses": _block_losses_numba,
        "block_quad": _block_quad_numba,
        "block_mult": _block_mult_numba,
        "block_increment": _block_increment_numba,
    }
else:  # pragma: no cover
    NUMBA_IMPL = None


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

def _resolve_backend() -> str:
    choice = os.environ.get("MOMREG_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        warnings.warn(
            f"unknown MOMREG_BACKEND={choice!r}; falling back to 'auto'",
            stacklevel=2,
        )
        choice = "auto"
    if choice == "numpy":
        return "numpy"
    if choice == "numba" and not HAS_NUMBA:
        warnings.warn(
            "MOMREG_BACKEND=numba but numba is not importable; using numpy",
            stacklevel=2,
        )
        return "numpy"
    return "numba" if HAS_NUMBA else "numpy"


_BACKEND = _resolve_backend()
_IMPL = NUMBA_IMPL if _BACKEND == "numba" else NUMPY_IMPL


def active_backend() -> str:
    """Name of the kernel backend selected at import ('numba' or 'numpy')."""
    return _BACKEND


def available_backends() -> tuple[str, ...]:
    return ("numpy", "numba") if HAS_NUMBA else ("numpy",)


def block_losses(X, y, theta, n, m):
    """Per-block mean of (X theta - y)^2 over n contiguous blocks of size m."""
    return _IMPL["block_losses"](X, y, theta, n, m)


def block_quad(X, theta_f, theta_h, n, m):
    """Per-block mean of (X (theta_f - theta_h))^2."""
    return _IMPL["block_quad"](X, theta_f, theta_h, n, m)


def block_mult(X, y, theta_f, theta_h, n, m):
    """Per-block mean of 2 (X(theta_f - theta_h)) (X theta_h - y)."""
    return _IMPL["block_mult"](X, y, theta_f, theta_h, n, m)


def block_increment(X, y, theta_f, theta_h, n, m):
    """Per-block squared-loss difference of theta_f and theta_h.

    Computed directly from the two blockwise mean losses, not from the
    quadratic/multiplier split.
    """
    return _IMPL["block_increment"](X, y, theta_f, theta_h, n, m)
