import numpy as np
import pytest

from drasym.model import BernoulliGaussian, SystemConfig, sample_instance

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_config():
    return SystemConfig(n=50, m=35, noise_var=1e-3, prior=BernoulliGaussian(0.9), lam=0.05,
                        gamma=10.0, rho=1.0, iterations=30, seed=7, mc_particles=10_000, trials=4)


@pytest.fixture
def small_instance(small_config):
    return sample_instance(small_config, (small_config.seed, 1))


def random_instance(rng, m, n, noise=1e-2):
    """Dense Gaussian instance built without going through drasym.model."""
    from drasym.model import ProblemInstance

    a = rng.standard_normal((m, n)) / np.sqrt(n)
    x = np.where(rng.random(n) < 0.8, 0.0, rng.standard_normal(n))
    v = noise * rng.standard_normal(m)
    return ProblemInstance(x=x, a=a, v=v, y=a @ x + v)
