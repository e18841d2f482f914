"""Seeded regression experiments on synthesized improper processes.

One trial draws a sample function on the grid, adds improper noise, picks
``n`` training nodes uniformly without replacement and predicts the
noise-free function at every grid node. All predictors in a trial share the
same function, noise and training indices, so their errors are paired.
"""

from __future__ import annotations

import cmath
import csv
import dataclasses
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import WCGPR, ProperCGPR
from .exceptions import WCGPRError
from .kernels import kernel_from_descriptor
from .noise import NoiseModel
from .synthesis import (
    DEFAULT_AMPLITUDES,
    DEFAULT_GAMMA,
    Axis,
    Grid,
    WidelyLinearFilterModel,
    generate_improper_gp,
    generate_improper_noise,
)

logger = logging.getLogger(__name__)

PREDICTORS = ("widely", "proper")
DEFAULT_SIGMA = 0.0165
DEFAULT_RHO = 0.8 * cmath.exp(1j * 3 * math.pi / 2)
DEFAULT_SWEEP = (50, 100, 200, 300, 400, 500)
MSE_FLOOR = 1e-30
MSE_FLOOR_DB = -300.0
CSV_COLUMNS = ("trial", "predictor", "n", "mse", "mse_db")


class ExperimentError(WCGPRError):
    """A trial failed; ``stage`` names the step that raised."""

    def __init__(self, stage, message, trial=None):
        self.stage = stage
        self.trial = trial
        where = stage if trial is None else f"{stage}, trial {trial}"
        super().__init__(f"[{where}] {message}")


class ConfigError(WCGPRError, ValueError):
    """The experiment configuration is invalid."""


def to_db(mse):
    mse = float(mse)
    if mse < MSE_FLOOR:
        return MSE_FLOOR_DB
    return 10.0 * math.log10(mse)


def mse_db(estimate, truth):
    """``10 log10(mean |estimate - truth|^2)``, floored at -300 dB."""
    estimate = np.asarray(estimate).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if estimate.shape != truth.shape or estimate.size == 0:
        raise ValueError(f"need equal non-empty lengths, got {estimate.size} and {truth.size}")
    return to_db(np.mean(np.abs(estimate - truth) ** 2))


def _parse_complex(value):
    if isinstance(value, dict):
        if "magnitude" in value:
            return cmath.rect(float(value["magnitude"]), float(value.get("phase", 0.0)))
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)):
        re, im = value
        return complex(float(re), float(im))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def _parse_axis(value):
    if isinstance(value, Axis):
        return value
    if isinstance(value, (list, tuple)):
        return Axis(*value)
    return Axis(**value)


def _parse_grid(value):
    if isinstance(value, Grid):
        return value
    return Grid(_parse_axis(value.get("re", {})), _parse_axis(value.get("im", {})))


@dataclass(frozen=True)
class ExperimentConfig:
    """Every field defaults to the first experiment (n = 500, sigma = 0.0165)."""

    gamma: float = DEFAULT_GAMMA
    amplitudes: tuple = DEFAULT_AMPLITUDES
    grid: Grid = field(default_factory=Grid)
    normalize: bool = True
    sigma: float = DEFAULT_SIGMA
    rho: complex = DEFAULT_RHO
    n: int = 500
    sweep: tuple | None = None
    trials: int = 1
    seed: int = 0
    predictor: str = "both"
    kernel: dict = field(default_factory=lambda: {"kind": "filter_induced"})
    output: str | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("grid", _parse_grid(self.grid))
        set_("rho", _parse_complex(self.rho))
        set_("amplitudes", tuple(float(v) for v in self.amplitudes))
        if self.sweep is not None:
            set_("sweep", tuple(int(v) for v in self.sweep))
        set_("kernel", dict(self.kernel))
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        set_("n", int(self.n))
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        set_("trials", int(self.trials))
        set_("seed", int(self.seed))
        if self.predictor not in ("widely", "proper", "both"):
            raise ConfigError(f"predictor must be widely, proper or both, got {self.predictor!r}")
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        total = self.grid.size
        for size in self.sizes:
            if size < 1 or size > total:
                raise ConfigError(f"training size {size} outside [1, {total}] grid nodes")
        if self.sweep is not None:
            if not self.sweep:
                raise ConfigError("sweep list is empty")
            if any(b <= a for a, b in zip(self.sweep, self.sweep[1:])):
                raise ConfigError(f"sweep list must be strictly increasing, got {list(self.sweep)}")
        try:
            self.model
            self.noise
        except WCGPRError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def sizes(self):
        return self.sweep if self.sweep is not None else (self.n,)

    @property
    def predictors(self):
        return PREDICTORS if self.predictor == "both" else (self.predictor,)

    @property
    def model(self):
        return WidelyLinearFilterModel(self.gamma, self.amplitudes, self.grid, self.normalize)

    @property
    def noise(self):
        return NoiseModel.from_sigma(self.sigma, self.rho)

    def with_overrides(self, **changes):
        """Copy with every non-None keyword applied (CLI flags)."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "amplitudes": list(self.amplitudes),
            "grid": {
                axis: {"start": a.start, "stop": a.stop, "count": a.count}
                for axis, a in (("re", self.grid.re), ("im", self.grid.im))
            },
            "normalize": self.normalize,
            "sigma": self.sigma,
            "rho": {"re": self.rho.real, "im": self.rho.imag},
            "n": self.n,
            "sweep": None if self.sweep is None else list(self.sweep),
            "trials": self.trials,
            "seed": self.seed,
            "predictor": self.predictor,
            "kernel": dict(self.kernel),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class TrialResult:
    trial: int
    predictor: str
    n: int
    mse: float

    @property
    def mse_db(self):
        return to_db(self.mse)


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    rows: tuple

    def select(self, predictor=None, n=None):
        return [
            r for r in self.rows
            if (predictor is None or r.predictor == predictor) and (n is None or r.n == n)
        ]

    def mean_db(self, predictor, n=None):
        """Average of the per-trial dB values."""
        rows = self.select(predictor, self.config.sizes[-1] if n is None else n)
        return float(np.mean([r.mse_db for r in rows]))

    def db_of_mean(self, predictor, n=None):
        rows = self.select(predictor, self.config.sizes[-1] if n is None else n)
        return to_db(np.mean([r.mse for r in rows]))

    def summary_rows(self):
        out = []
        for n in self.config.sizes:
            for p in self.config.predictors:
                rows = self.select(p, n)
                dbs = [r.mse_db for r in rows]
                out.append({
                    "n": n,
                    "predictor": p,
                    "trials": len(rows),
                    "mean_db": float(np.mean(dbs)),
                    "std_db": float(np.std(dbs)),
                    "db_of_mean_mse": to_db(np.mean([r.mse for r in rows])),
                })
        return out

    def to_csv(self, fh=None):
        out = io.StringIO() if fh is None else fh
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r.trial, r.predictor, r.n, repr(r.mse), repr(r.mse_db)])
        return out.getvalue() if fh is None else None

    def summary(self):
        cfg = self.config
        lines = [
            f"# trials={cfg.trials} seed={cfg.seed} sigma={cfg.sigma:g} "
            f"rho={cfg.rho.real:.4g}{cfg.rho.imag:+.4g}j grid={cfg.grid.shape[0]}x{cfg.grid.shape[1]}",
            f"# {'n':>5} {'predictor':>9} {'mean dB':>9} {'std dB':>7} {'dB(mean)':>9}",
        ]
        for s in self.summary_rows():
            lines.append(
                f"# {s['n']:>5} {s['predictor']:>9} {s['mean_db']:>9.3f} "
                f"{s['std_db']:>7.3f} {s['db_of_mean_mse']:>9.3f}"
            )
        if len(cfg.predictors) == 2:
            gaps = [
                self.mean_db("proper", n) - self.mean_db("widely", n) for n in cfg.sizes
            ]
            lines.append(f"# widely gain over proper: max {max(gaps):.3f} dB, min {min(gaps):.3f} dB")
        return "\n".join(lines)


def trial_seeds(seed, trial):
    """Integer seeds ``(process, noise, indices)`` for one trial.

    Independent of the total trial count, so trial ``t`` is reproducible on
    its own.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    return tuple(int(s) for s in ss.generate_state(3))


def _stage(name, trial, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except WCGPRError as exc:
        raise ExperimentError(name, str(exc), trial) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise ExperimentError(name, f"{type(exc).__name__}: {exc}", trial) from exc


def _predict(predictor, kp, noise, X, y, points):
    if predictor == "widely":
        return WCGPR(kp, noise, X, y).mean(points)
    return ProperCGPR(kp, noise.sigma2, X, y).mean(points)


def _run(config, sizes):
    model, noise = config.model, config.noise
    kp = _stage("kernel", None, kernel_from_descriptor, config.kernel, model)
    points = config.grid.points()
    rows = []
    for trial in range(config.trials):
        gp_seed, noise_seed, idx_seed = trial_seeds(config.seed, trial)
        f = _stage("synthesis", trial, generate_improper_gp, model, gp_seed).flat()
        eps = _stage("noise", trial, generate_improper_noise, noise, f.size, noise_seed)
        y_all = f + eps
        for n in sizes:
            rng = np.random.default_rng([idx_seed, n])
            idx = rng.choice(f.size, size=n, replace=False)
            X, y = points[idx], y_all[idx]
            for p in config.predictors:
                est = _stage(f"predict:{p}", trial, _predict, p, kp, noise, X, y, points)
                mse = float(np.mean(np.abs(est - f) ** 2))
                rows.append(TrialResult(trial, p, n, mse))
                logger.info("trial %d n=%d %s: %.3f dB", trial, n, p, to_db(mse))
    return ExperimentReport(config, tuple(rows))


def run_single(config):
    """Run ``config.trials`` trials at training size ``config.n``."""
    return _run(dataclasses.replace(config, sweep=None), (config.n,))


def run_sweep(config):
    """Run every training size in ``config.sweep`` (default: 50..500) with paired seeds."""
    if config.sweep is None:
        config = dataclasses.replace(config, sweep=DEFAULT_SWEEP)
    return _run(config, config.sweep)
