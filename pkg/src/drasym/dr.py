"""Douglas-Rachford iterations for ``min 1/2||y - As||^2 + lam f(s)``.

Also home to the objective, the l1 first-order optimality residual and a
plain proximal-gradient (ISTA) solver kept as an independent oracle.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import empirical_mse
from .prox import L1, SquaredLossProx, prox_separable

__all__ = [
    "NonFiniteIterateError",
    "NotConvergedError",
    "DRState",
    "RunMetrics",
    "dr_step",
    "dr_run",
    "objective_value",
    "optimality_residual",
    "spectral_norm",
    "ista_reference",
]


class NonFiniteIterateError(FloatingPointError):
    def __init__(self, k, what):
        super().__init__(f"non-finite {what} at iteration {k}")
        self.k = k


class NotConvergedError(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(
            f"no convergence after {iterations} iterations (optimality residual {residual:.3e})"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class DRState:
    """Iterate ``(s^(k), z^(k))``.

    ``r`` is the regularizer-prox output of the last step. It equals ``s`` at
    a fixed point but has exact zeros, so it is the iterate to test for
    optimality.
    """

    s: Optional[np.ndarray]
    z: np.ndarray
    k: int = 0
    r: Optional[np.ndarray] = None


@dataclass
class RunMetrics:
    k: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    final_state: Optional[DRState] = None

    def __len__(self):
        return len(self.k)

    def append(self, k, mse, objective, wall_time):
        if self.k and k <= self.k[-1]:
            raise ValueError("iteration index must increase")
        self.k.append(k)
        self.mse.append(mse)
        self.objective.append(objective)
        self.wall_time.append(wall_time)


def dr_step(state, p, reg, gamma, lam, rho):
    """One relaxed Douglas-Rachford update.

    ``s' = prox_{gamma L}(z)``, ``z' = z + rho (prox_{gamma lam f}(2 s' - z) - s')``.
    """
    k = state.k + 1
    s = p(state.z)
    if not np.all(np.isfinite(s)):
        raise NonFiniteIterateError(k, "s")
    r = prox_separable(reg, 2.0 * s - state.z, gamma * lam)
    z = state.z + rho * (r - s)
    if not np.all(np.isfinite(z)):
        raise NonFiniteIterateError(k, "z")
    return DRState(s=s, z=z, k=k, r=r)


def dr_run(
    instance,
    config,
    iterations=None,
    *,
    reg=None,
    z0=None,
    tol=None,
    rho_schedule: Optional[Callable[[int], float]] = None,
):
    """Run DR from ``z0`` (zero by default) and record metrics per iteration.

    Exactly ``iterations`` steps are taken unless ``tol`` is given, in which
    case the run stops once the l1 optimality residual of the sparse iterate
    ``r`` drops below it.
    """
    iterations = config.iterations if iterations is None else int(iterations)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    reg = L1() if reg is None else reg
    p = SquaredLossProx(instance.a, instance.y, config.gamma)
    z = np.zeros(instance.n) if z0 is None else np.array(z0, dtype=float)
    state = DRState(s=None, z=z, k=0)
    metrics = RunMetrics()
    t0 = time.perf_counter()
    for _ in range(iterations):
        rho = config.rho if rho_schedule is None else rho_schedule(state.k)
        state = dr_step(state, p, reg, config.gamma, config.lam, rho)
        metrics.append(
            state.k,
            empirical_mse(state.s, instance.x),
            objective_value(instance, config.lam, state.s, reg),
            time.perf_counter() - t0,
        )
        if tol is not None and optimality_residual(instance, config.lam, state.r) <= tol:
            break
    metrics.final_state = state
    return metrics


def objective_value(instance, lam, s, reg=None):
    reg = L1() if reg is None else reg
    r = instance.y - instance.a @ s
    return float(0.5 * np.dot(r, r) + lam * reg.value(s))


def optimality_residual(instance, lam, s, zero_tol=0.0):
    """Largest violation of the l1 subgradient condition ``0 in A^T(As - y) + lam d|s|``.

    Entries with ``|s_n| <= zero_tol`` count as zero.
    """
    s = np.asarray(s, dtype=float)
    g = instance.a.T @ (instance.a @ s - instance.y)
    on = np.abs(s) > zero_tol
    viol = np.where(on, np.abs(g + lam * np.sign(s)), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.max(viol)) if viol.size else 0.0


def spectral_norm(a, iters=500, tol=1e-12, seed=0):
    """Largest singular value of ``a`` by power iteration on ``a^T a``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= tol * nw:
            est = nw
            break
        est = nw
    return float(np.sqrt(est))


def ista_reference(instance, lam, max_iter=100_000, tol=1e-8):
    """Proximal gradient with step ``1/||A||_2^2`` until the residual is below ``tol``."""
    a, y = instance.a, instance.y
    # a little slack on the step keeps the power-iteration underestimate safe
    lip = 1.01 * spectral_norm(a) ** 2
    if lip == 0.0:
        return np.zeros(instance.n)
    step = 1.0 / lip
    aty = a.T @ y
    s = np.zeros(instance.n)
    res = optimality_residual(instance, lam, s)
    for it in range(max_iter):
        if res <= tol:
            return s
        grad = a.T @ (a @ s) - aty
        s = prox_separable(L1(), s - step * grad, step * lam)
        res = optimality_residual(instance, lam, s)
    if res <= tol:
        return s
    raise NotConvergedError(res, max_iter)
