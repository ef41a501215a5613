"""Flat ``key = value`` experiment configuration files.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Unknown keys are rejected so typos fail loudly.
"""

import hashlib
from dataclasses import dataclass, field, replace

from .model import BernoulliGaussian, SystemConfig

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "MODES",
    "parse_config",
    "load_config",
    "dump_config",
    "config_hash",
]

MODES = ("empirical", "predict", "both", "sweep_gamma")
_MODE_ALIASES = {"sweep": "sweep_gamma"}
H_MODES = ("persistent", "fresh")

KEYS = (
    "n", "m", "noise_var", "prior", "p0", "lambda", "gamma", "rho", "iterations",
    "seed", "mc_particles", "trials", "mode", "gamma_grid", "snapshot_iterations",
    "out", "h_mode", "workers",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    mode: str = "both"
    gamma_grid: tuple = ()
    output_path: str = "drasym_results.csv"
    snapshot_iterations: tuple = ()
    h_mode: str = "persistent"
    workers: int = 1

    def __post_init__(self):
        mode = _MODE_ALIASES.get(self.mode, self.mode)
        object.__setattr__(self, "mode", mode)
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.h_mode not in H_MODES:
            raise ConfigError(f"h_mode must be one of {H_MODES}, got {self.h_mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if any(g <= 0 for g in self.gamma_grid):
            raise ConfigError("gamma_grid entries must be positive")
        if mode == "sweep_gamma":
            if not self.gamma_grid:
                raise ConfigError("sweep mode needs a nonempty gamma_grid")
            if not self.snapshot_iterations:
                raise ConfigError("sweep mode needs snapshot_iterations")
        for k in self.snapshot_iterations:
            if not (1 <= k <= self.system.iterations):
                raise ConfigError(f"snapshot iteration {k} outside 1..{self.system.iterations}")

    @property
    def persistent_h(self):
        return self.h_mode == "persistent"

    def with_overrides(self, **kw):
        """Return a copy with ``SystemConfig`` or experiment fields replaced."""
        sys_fields = {k: kw.pop(k) for k in list(kw) if k in SystemConfig.__dataclass_fields__}
        system = replace(self.system, **sys_fields) if sys_fields else self.system
        return replace(self, system=system, **kw)


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def parse_config(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    try:
        prior_name = raw.get("prior", "bernoulli_gaussian")
        if prior_name != "bernoulli_gaussian":
            raise ConfigError(f"unsupported prior {prior_name!r} (only bernoulli_gaussian)")
        sys_kw = {}
        for key, conv, name in (
            ("n", int, "n"), ("m", int, "m"), ("noise_var", float, "noise_var"),
            ("lambda", float, "lam"), ("gamma", float, "gamma"), ("rho", float, "rho"),
            ("iterations", int, "iterations"), ("seed", int, "seed"),
            ("mc_particles", int, "mc_particles"), ("trials", int, "trials"),
        ):
            if key in raw:
                sys_kw[name] = conv(raw[key])
        if "p0" in raw:
            sys_kw["prior"] = BernoulliGaussian(float(raw["p0"]))
        system = SystemConfig(**sys_kw)
        exp_kw = {}
        if "mode" in raw:
            exp_kw["mode"] = raw["mode"]
        if "gamma_grid" in raw:
            exp_kw["gamma_grid"] = _floats(raw["gamma_grid"])
        if "snapshot_iterations" in raw:
            exp_kw["snapshot_iterations"] = _ints(raw["snapshot_iterations"])
        if "out" in raw:
            exp_kw["output_path"] = raw["out"]
        if "h_mode" in raw:
            exp_kw["h_mode"] = raw["h_mode"]
        if "workers" in raw:
            exp_kw["workers"] = int(raw["workers"])
        return ExperimentConfig(system=system, **exp_kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg):
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    s = cfg.system
    if not isinstance(s.prior, BernoulliGaussian):
        raise ConfigError("only Bernoulli-Gaussian priors can be serialized")
    lines = [
        f"n = {s.n}",
        f"m = {s.m}",
        f"noise_var = {s.noise_var!r}",
        "prior = bernoulli_gaussian",
        f"p0 = {s.prior.p0!r}",
        f"lambda = {s.lam!r}",
        f"gamma = {s.gamma!r}",
        f"rho = {s.rho!r}",
        f"iterations = {s.iterations}",
        f"seed = {s.seed}",
        f"mc_particles = {s.mc_particles}",
        f"trials = {s.trials}",
        f"mode = {cfg.mode}",
        f"gamma_grid = {', '.join(repr(g) for g in cfg.gamma_grid)}",
        f"snapshot_iterations = {', '.join(str(k) for k in cfg.snapshot_iterations)}",
        f"out = {cfg.output_path}",
        f"h_mode = {cfg.h_mode}",
        f"workers = {cfg.workers}",
    ]
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    # workers and out do not change results
    text = dump_config(replace(cfg, workers=1, output_path=""))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
