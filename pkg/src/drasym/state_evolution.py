"""Particle realization of the scalar process that tracks Douglas-Rachford.

Each particle carries a pair ``(X, Z_k)``. One step solves the saddle problem
on the current ensemble, maps every particle through ``S_{k+1} = S(alpha_k*,
beta_k*; Z_k)`` and then applies the scalar DR update to get ``Z_{k+1}``.

The Gaussian ``H`` attached to each particle stands in for the measurement
matrix. By default it is drawn once and held fixed across iterations, the way
the matrix is fixed across DR iterations (``persistent_h=True``). Passing
``persistent_h=False`` redraws it every iteration instead.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from . import _kernels
from .cgmt import ScalarSample, SearchOptions, predicted_mse, s_hat, solve_saddle
from .model import STREAM_ENSEMBLE, STREAM_NOISE_H, make_rng
from .prox import L1, prox_separable

__all__ = [
    "ScalarEnsemble",
    "TraceRow",
    "EvolutionTrace",
    "init_ensemble",
    "se_step",
    "se_run",
    "ks_distance",
]


@dataclass(frozen=True)
class ScalarEnsemble:
    x: np.ndarray
    z: np.ndarray
    k: int
    seed: int
    persistent_h: bool = True
    s: Optional[np.ndarray] = None
    _h_fixed: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __len__(self):
        return self.x.shape[0]

    def h_for_step(self):
        """Gaussian draws used by the step that advances this ensemble."""
        if self.persistent_h:
            if self._h_fixed is not None:
                return self._h_fixed
            return make_rng(self.seed, STREAM_NOISE_H, 0).standard_normal(len(self))
        return make_rng(self.seed, STREAM_NOISE_H, self.k).standard_normal(len(self))


def init_ensemble(prior, count, seed, persistent_h=True):
    """``count`` particles with ``x ~ prior`` and ``z = 0`` at ``k = 0``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    x = prior.draw(make_rng(seed, STREAM_ENSEMBLE), int(count))
    ens = ScalarEnsemble(x=x, z=np.zeros(int(count)), k=0, seed=int(seed), persistent_h=persistent_h)
    if persistent_h:
        ens = replace(ens, _h_fixed=ens.h_for_step())
    return ens


def se_step(ensemble, reg, delta, noise_var, gamma, lam, rho, opts=None, h=None):
    """Advance the ensemble by one iteration.

    Returns ``(saddle, new_ensemble, predicted_mse)``, where the MSE refers to
    ``S_{k+1}``. The same ``h`` is used for the saddle solve and for the
    particle map.
    """
    h = ensemble.h_for_step() if h is None else np.ascontiguousarray(h, dtype=float)
    sample = ScalarSample(ensemble.x, h, ensemble.z)
    saddle = solve_saddle(sample, delta, noise_var, gamma, opts)
    threshold = gamma * lam
    if isinstance(reg, L1):
        s, z = _kernels.advance_particles(
            saddle.alpha, saddle.beta, math.sqrt(delta), gamma, threshold, rho,
            sample.x, sample.h, sample.z,
        )
    else:
        s = s_hat(saddle.alpha, saddle.beta, delta, gamma, sample.x, sample.h, sample.z)
        z = sample.z + rho * (prox_separable(reg, 2.0 * s - sample.z, threshold) - s)
    new = replace(ensemble, z=z, s=s, k=ensemble.k + 1)
    return saddle, new, predicted_mse(saddle, noise_var)


@dataclass(frozen=True)
class TraceRow:
    k: int
    alpha_star: float
    beta_star: float
    predicted_mse: float
    saddle_value: float
    ensemble_s_mean: float
    ensemble_s_var: float
    ensemble_mse: float
    ensemble_mse_stderr: float


@dataclass
class EvolutionTrace:
    rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    final_ensemble: Optional[ScalarEnsemble] = None

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def predicted(self):
        return self.column("predicted_mse")


def se_run(config, iterations=None, *, opts=None, reg=None, persistent_h=True, seed=None, particles=None):
    """Run the particle process for ``iterations`` steps from ``Z_0 = 0``.

    Row ``k`` predicts the MSE of the DR iterate ``s^(k)``, k = 1..K.
    """
    iterations = config.iterations if iterations is None else int(iterations)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    reg = L1() if reg is None else reg
    seed = config.seed if seed is None else seed
    count = config.mc_particles if particles is None else particles
    ens = init_ensemble(config.prior, count, seed, persistent_h=persistent_h)
    trace = EvolutionTrace()
    for _ in range(iterations):
        saddle, ens, mse = se_step(
            ens, reg, config.delta, config.noise_var, config.gamma, config.lam, config.rho, opts
        )
        err2 = (ens.s - ens.x) ** 2
        trace.rows.append(
            TraceRow(
                k=ens.k,
                alpha_star=saddle.alpha,
                beta_star=saddle.beta,
                predicted_mse=mse,
                saddle_value=saddle.value,
                ensemble_s_mean=float(np.mean(ens.s)),
                ensemble_s_var=float(np.var(ens.s)),
                ensemble_mse=float(np.mean(err2)),
                ensemble_mse_stderr=float(np.std(err2) / math.sqrt(count)),
            )
        )
        if saddle.bracket_diagnostics:
            trace.diagnostics.append(f"k={ens.k}: {saddle.bracket_diagnostics}")
    trace.final_ensemble = ens
    return trace


def ks_distance(sample_a, sample_b):
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs two nonempty samples")
    return float(stats.ks_2samp(a, b).statistic)
