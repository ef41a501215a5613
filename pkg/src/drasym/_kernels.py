"""Hot elementwise loops over particles and coordinates.

Every kernel has a pure-numpy implementation. When numba is importable and
``DRASYM_NUMBA`` is not set to ``0``, the jitted versions replace them at
import time. Both paths are deterministic and single-threaded; they agree to
rounding but are not bit-identical to each other.
"""

import os

import numpy as np

__all__ = [
    "USE_NUMBA",
    "soft_threshold",
    "ensemble_moments",
    "mean_j",
    "advance_particles",
    "numpy_kernels",
    "numba_kernels",
]

_BLOCK = 256


def _env_wants_numba():
    flag = os.environ.get("DRASYM_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------

def _np_soft_threshold(r, theta):
    r = np.asarray(r, dtype=float)
    return np.sign(r) * np.maximum(np.abs(r) - theta, 0.0)


def _np_ensemble_moments(x, z, h):
    w = z - x
    n = x.shape[0]
    # np.sum uses pairwise summation on contiguous float arrays
    return (np.sum(h * h) / n, np.sum(h * w) / n, np.sum(w * w) / n)


def _np_mean_j(alpha, beta, sqrt_delta, gamma, x, h, z):
    a = beta * sqrt_delta / alpha
    c = 1.0 / gamma
    s = (a * (x + (alpha / sqrt_delta) * h) + c * z) / (a + c)
    e = s - x
    j = 0.5 * a * e * e - beta * h * e + 0.5 * c * (s - z) ** 2
    return np.sum(j) / x.shape[0]


def _np_advance_particles(alpha, beta, sqrt_delta, gamma, threshold, rho, x, h, z):
    a = beta * sqrt_delta / alpha
    c = 1.0 / gamma
    s = (a * (x + (alpha / sqrt_delta) * h) + c * z) / (a + c)
    z_new = z + rho * (_np_soft_threshold(2.0 * s - z, threshold) - s)
    return s, z_new


numpy_kernels = {
    "soft_threshold": _np_soft_threshold,
    "ensemble_moments": _np_ensemble_moments,
    "mean_j": _np_mean_j,
    "advance_particles": _np_advance_particles,
}


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    @njit(cache=True)
    def _tree_sum(blocks):
        # pairwise reduction of block partials; fixed order for any length
        n = blocks.shape[0]
        buf = blocks.copy()
        while n > 1:
            half = n // 2
            for i in range(half):
                buf[i] = buf[2 * i] + buf[2 * i + 1]
            if n % 2 == 1:
                buf[half] = buf[n - 1]
                n = half + 1
            else:
                n = half
        return buf[0]

    @njit(cache=True)
    def _soft_threshold_1d(r, theta):
        out = np.empty_like(r)
        for i in range(r.shape[0]):
            v = r[i]
            if v > theta:
                out[i] = v - theta
            elif v < -theta:
                out[i] = v + theta
            else:
                out[i] = 0.0
        return out

    def soft_threshold(r, theta):
        r = np.asarray(r, dtype=float)
        if r.ndim != 1:
            return _np_soft_threshold(r, theta)
        return _soft_threshold_1d(np.ascontiguousarray(r), float(theta))

    @njit(cache=True)
    def _moments(x, z, h):
        n = x.shape[0]
        nb = (n + _BLOCK - 1) // _BLOCK
        bhh = np.zeros(nb)
        bhw = np.zeros(nb)
        bww = np.zeros(nb)
        for b in range(nb):
            lo = b * _BLOCK
            hi = min(lo + _BLOCK, n)
            shh = 0.0
            shw = 0.0
            sww = 0.0
            for i in range(lo, hi):
                w = z[i] - x[i]
                shh += h[i] * h[i]
                shw += h[i] * w
                sww += w * w
            bhh[b] = shh
            bhw[b] = shw
            bww[b] = sww
        return _tree_sum(bhh) / n, _tree_sum(bhw) / n, _tree_sum(bww) / n

    def ensemble_moments(x, z, h):
        return _moments(x, z, h)

    @njit(cache=True)
    def _mean_j(alpha, beta, sqrt_delta, gamma, x, h, z):
        a = beta * sqrt_delta / alpha
        c = 1.0 / gamma
        g = alpha / sqrt_delta
        n = x.shape[0]
        nb = (n + _BLOCK - 1) // _BLOCK
        blocks = np.zeros(nb)
        for b in range(nb):
            lo = b * _BLOCK
            hi = min(lo + _BLOCK, n)
            acc = 0.0
            for i in range(lo, hi):
                s = (a * (x[i] + g * h[i]) + c * z[i]) / (a + c)
                e = s - x[i]
                d = s - z[i]
                acc += 0.5 * a * e * e - beta * h[i] * e + 0.5 * c * d * d
            blocks[b] = acc
        return _tree_sum(blocks) / n

    def mean_j(alpha, beta, sqrt_delta, gamma, x, h, z):
        return _mean_j(float(alpha), float(beta), float(sqrt_delta), float(gamma), x, h, z)

    @njit(cache=True)
    def _advance(alpha, beta, sqrt_delta, gamma, threshold, rho, x, h, z):
        a = beta * sqrt_delta / alpha
        c = 1.0 / gamma
        g = alpha / sqrt_delta
        n = x.shape[0]
        s = np.empty(n)
        z_new = np.empty(n)
        for i in range(n):
            si = (a * (x[i] + g * h[i]) + c * z[i]) / (a + c)
            r = 2.0 * si - z[i]
            if r > threshold:
                p = r - threshold
            elif r < -threshold:
                p = r + threshold
            else:
                p = 0.0
            s[i] = si
            z_new[i] = z[i] + rho * (p - si)
        return s, z_new

    def advance_particles(alpha, beta, sqrt_delta, gamma, threshold, rho, x, h, z):
        return _advance(
            float(alpha), float(beta), float(sqrt_delta), float(gamma),
            float(threshold), float(rho), x, h, z,
        )

    return {
        "soft_threshold": soft_threshold,
        "ensemble_moments": ensemble_moments,
        "mean_j": mean_j,
        "advance_particles": advance_particles,
    }


numba_kernels = None
if _env_wants_numba():
    try:
        numba_kernels = _build_numba_kernels()
    except ImportError:
        numba_kernels = None

USE_NUMBA = numba_kernels is not None
_active = numba_kernels if USE_NUMBA else numpy_kernels

soft_threshold = _active["soft_threshold"]
ensemble_moments = _active["ensemble_moments"]
mean_j = _active["mean_j"]
advance_particles = _active["advance_particles"]
