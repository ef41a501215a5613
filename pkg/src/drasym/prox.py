"""Proximity operators: the squared-loss prox and separable regularizers."""

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from . import _kernels

__all__ = [
    "FactorizationError",
    "SquaredLossProx",
    "build_squared_loss_prox",
    "apply_squared_loss_prox",
    "soft_threshold",
    "L1",
    "CustomRegularizer",
    "prox_separable",
]


_DEBUG = bool(os.environ.get("DRASYM_DEBUG"))


class FactorizationError(np.linalg.LinAlgError):
    pass


class SquaredLossProx:
    """``z -> argmin_s 1/2||y - A s||^2 + 1/(2 gamma)||s - z||^2``.

    The Cholesky factor of ``A^T A + c I`` (``path == "direct"``) or of
    ``A A^T + c I`` (``path == "woodbury"``, chosen when M < N) is computed
    once, with ``c = 1/gamma``. No inverse is ever formed.
    """

    def __init__(self, a, y, gamma, path=None):
        a = np.asarray(a, dtype=float)
        y = np.asarray(y, dtype=float)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if a.ndim != 2 or y.shape != (a.shape[0],):
            raise ValueError(f"inconsistent shapes A{a.shape}, y{y.shape}")
        m, n = a.shape
        if path is None:
            path = "woodbury" if m < n else "direct"
        if path not in ("direct", "woodbury"):
            raise ValueError(f"unknown path {path!r}")
        self.a = a
        self.y = y
        self.gamma = float(gamma)
        self.c = 1.0 / self.gamma
        self.path = path
        self.aty = a.T @ y
        gram = a @ a.T if path == "woodbury" else a.T @ a
        gram[np.diag_indices_from(gram)] += self.c
        try:
            if not np.all(np.isfinite(gram)):
                raise np.linalg.LinAlgError("non-finite entries")
            self.factor = sla.cho_factor(gram, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            with np.errstate(all="ignore"):
                cond = np.linalg.cond(gram) if np.all(np.isfinite(gram)) else np.nan
            raise FactorizationError(
                f"Cholesky of the {path} system failed ({exc}); condition number {cond:.3e}"
            ) from exc

    @property
    def n(self):
        return self.a.shape[1]

    def solve(self, w):
        """Solve ``(A^T A + c I) s = w``."""
        if self.path == "direct":
            return sla.cho_solve(self.factor, w, check_finite=False)
        inner = sla.cho_solve(self.factor, self.a @ w, check_finite=False)
        return (w - self.a.T @ inner) / self.c

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n,):
            raise ValueError(f"expected length {self.n}, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("non-finite entries in prox input")
        s = self.solve(self.aty + self.c * z)
        if _DEBUG:
            res = self.stationarity_residual(s, z)
            assert res <= 1e-8 * (1.0 + np.max(np.abs(z))), f"prox stationarity residual {res:.3e}"
        return s

    apply = __call__

    def stationarity_residual(self, s, z):
        g = self.a.T @ (self.a @ s - self.y) + self.c * (s - z)
        return float(np.max(np.abs(g)))


def build_squared_loss_prox(a, y, gamma):
    return SquaredLossProx(a, y, gamma)


def apply_squared_loss_prox(p, z):
    return p(z)


def soft_threshold(r, theta):
    """``sign(r) * max(|r| - theta, 0)`` for scalars or arrays."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if np.ndim(r) == 0:
        r = float(r)
        return float(np.sign(r) * max(abs(r) - theta, 0.0))
    return _kernels.soft_threshold(r, theta)


@dataclass(frozen=True)
class L1:
    description: str = "l1 norm"

    def scalar_prox(self, t, threshold):
        return soft_threshold(t, threshold)

    def value(self, s):
        return float(np.sum(np.abs(s)))


@dataclass(frozen=True)
class CustomRegularizer:
    """Separable regularizer given by its scalar prox.

    ``scalar_prox(t, threshold)`` must accept numpy arrays for ``t`` and act
    elementwise. ``value`` is only needed for objective reporting.
    """

    scalar_prox: Callable[[np.ndarray, float], np.ndarray]
    description: str = "custom"
    value_fn: Optional[Callable[[np.ndarray], float]] = None

    def value(self, s):
        if self.value_fn is None:
            return float("nan")
        return float(self.value_fn(s))


def prox_separable(reg, r, threshold):
    """Apply ``reg``'s scalar prox coordinate-wise with the given threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    r = np.asarray(r, dtype=float)
    if isinstance(reg, L1):
        return _kernels.soft_threshold(r, threshold)
    return np.asarray(reg.scalar_prox(r, threshold), dtype=float)
