"""Scalar min-max problem that predicts the output of the squared-loss prox.

For an input ``z`` with i.i.d. entries, the prox output behaves in the large
system limit like the scalar

    S(alpha, beta) = argmin_s  (b sqrt(D) / 2a)(s - X)^2 - b H (s - X) + (1/2g)(s - Z)^2

at the saddle point of

    F(alpha, beta) = a b sqrt(D)/2 + b sv2 sqrt(D)/(2a) - b^2/2 + E[J(alpha, beta)],

with ``J`` the minimum value above, and the prox MSE is ``alpha*^2 - sv2``.
Expectations are replaced by averages over a fixed particle ensemble.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .search import BracketError, golden_with_expansion

__all__ = [
    "ScalarSample",
    "SaddlePoint",
    "SearchOptions",
    "SaddleSearchError",
    "s_hat",
    "j_integrand",
    "j_value",
    "scalar_objective",
    "EnsembleMoments",
    "solve_saddle",
    "predicted_mse",
]


class SaddleSearchError(BracketError):
    pass


@dataclass(frozen=True)
class ScalarSample:
    """Realizations of ``(X, H, Z)``; each field is a scalar or a 1-d array."""

    x: np.ndarray
    h: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "h", "z"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if not (self.x.shape == self.h.shape == self.z.shape) or self.x.ndim != 1:
            raise ValueError("x, h, z must be 1-d arrays of equal length")
        for name in ("x", "h", "z"):
            arr = getattr(self, name)
            if not arr.flags.c_contiguous:
                object.__setattr__(self, name, np.ascontiguousarray(arr))

    def __len__(self):
        return self.x.shape[0]


@dataclass(frozen=True)
class SearchOptions:
    alpha_bracket: tuple = (1e-4, 10.0)
    beta_bracket: tuple = (1e-4, 10.0)
    tol: float = 1e-6
    max_expansions: int = 20

    def __post_init__(self):
        for lo, hi in (self.alpha_bracket, self.beta_bracket):
            if not (0 < lo < hi):
                raise ValueError("brackets need 0 < lo < hi")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SaddlePoint:
    alpha: float
    beta: float
    value: float
    evaluations: int
    bracket_diagnostics: str = ""


def s_hat(alpha, beta, delta, gamma, x, h, z):
    """Minimizer over ``s`` of the J integrand; works elementwise on arrays."""
    a = beta * math.sqrt(delta) / alpha
    c = 1.0 / gamma
    return (a * (x + (alpha / math.sqrt(delta)) * h) + c * z) / (a + c)


def j_integrand(s, alpha, beta, delta, gamma, x, h, z):
    a = beta * math.sqrt(delta) / alpha
    return 0.5 * a * (s - x) ** 2 - beta * h * (s - x) + (s - z) ** 2 / (2.0 * gamma)


def j_value(alpha, beta, delta, gamma, x, h, z):
    s = s_hat(alpha, beta, delta, gamma, x, h, z)
    return j_integrand(s, alpha, beta, delta, gamma, x, h, z)


def _outer_terms(alpha, beta, sqrt_delta, noise_var):
    return (
        0.5 * alpha * beta * sqrt_delta
        + 0.5 * beta * noise_var * sqrt_delta / alpha
        - 0.5 * beta * beta
    )


def scalar_objective(alpha, beta, ensemble, delta, noise_var, gamma):
    """Min-max objective with the expectation taken as a particle average."""
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    sd = math.sqrt(delta)
    ej = _kernels.mean_j(alpha, beta, sd, gamma, ensemble.x, ensemble.h, ensemble.z)
    return _outer_terms(alpha, beta, sd, noise_var) + ej


@dataclass(frozen=True)
class EnsembleMoments:
    """``mean(H^2)``, ``mean(H W)``, ``mean(W^2)`` with ``W = Z - X``.

    J is quadratic in ``s``, so its particle average is an exact function of
    these three moments:

        mean J = -(b^2 hh + 2 b c hw + c^2 ww) / (2 (a + c)) + c ww / 2,

    with ``a = b sqrt(D)/alpha`` and ``c = 1/gamma``.
    """

    hh: float
    hw: float
    ww: float

    @classmethod
    def of(cls, ensemble):
        return cls(*(float(v) for v in _kernels.ensemble_moments(ensemble.x, ensemble.z, ensemble.h)))

    def mean_j(self, alpha, beta, sqrt_delta, gamma):
        a = beta * sqrt_delta / alpha
        c = 1.0 / gamma
        q = beta * beta * self.hh + 2.0 * beta * c * self.hw + c * c * self.ww
        return -q / (2.0 * (a + c)) + 0.5 * c * self.ww

    def objective(self, alpha, beta, delta, noise_var, gamma):
        sd = math.sqrt(delta)
        return _outer_terms(alpha, beta, sd, noise_var) + self.mean_j(alpha, beta, sd, gamma)


def solve_saddle(ensemble, delta, noise_var, gamma, opts=None, method="moments"):
    """Nested golden-section search: min over alpha of max over beta.

    Every evaluation reuses the same ensemble. ``method="moments"`` evaluates
    the particle average through :class:`EnsembleMoments` (exact, O(1) per
    evaluation); ``method="particles"`` sums over the particles directly.
    """
    opts = SearchOptions() if opts is None else opts
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    if method == "moments":
        mom = EnsembleMoments.of(ensemble)

        def F(alpha, beta):
            return mom.objective(alpha, beta, delta, noise_var, gamma)

    elif method == "particles":

        def F(alpha, beta):
            return scalar_objective(alpha, beta, ensemble, delta, noise_var, gamma)

    else:
        raise ValueError(f"unknown method {method!r}")

    count = [0]
    notes = []
    best_beta = {}

    def inner(alpha):
        res = golden_with_expansion(
            lambda b: F(alpha, b),
            *opts.beta_bracket,
            opts.tol,
            maximize=True,
            max_expansions=opts.max_expansions,
        )
        count[0] += res.evaluations
        for w in res.warnings:
            notes.append(f"beta search at alpha={alpha:.6g}: {w}")
        best_beta[alpha] = res.x
        return res.fx

    try:
        outer = golden_with_expansion(
            inner, *opts.alpha_bracket, opts.tol, maximize=False, max_expansions=opts.max_expansions
        )
    except BracketError as exc:
        raise SaddleSearchError(str(exc)) from exc
    notes.extend(f"alpha search: {w}" for w in outer.warnings)
    alpha = outer.x
    beta = best_beta[alpha]
    if outer.expansions:
        notes.append(f"alpha bracket expanded {outer.expansions}x")
    return SaddlePoint(
        alpha=alpha,
        beta=beta,
        value=F(alpha, beta),
        evaluations=count[0] + 1,
        bracket_diagnostics="; ".join(notes),
    )


def predicted_mse(saddle, noise_var):
    """``max(alpha*^2 - noise_var, 0)``; warns when the clamp is active."""
    mse = saddle.alpha ** 2 - noise_var
    if mse < 0:
        warnings.warn(
            f"alpha*^2 - noise_var = {mse:.3e} < 0; clamped to 0", RuntimeWarning, stacklevel=2
        )
        return 0.0
    return float(mse)
