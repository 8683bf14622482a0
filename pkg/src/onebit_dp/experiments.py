"""Experiment sweeps over mechanisms, privacy budgets and observation ratios.

Results are long-format CSV rows::

    dataset,mechanism,link,epsilon,ratio,seed,metric,value,wall_ms

with one row per (cell, seed, metric). The clear baseline has no budget;
its value is repeated at every grid epsilon so each epsilon column carries
a full set of series.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import (
    binarize_mean_threshold,
    binarize_rc,
    gen_synthetic,
    load_movielens,
    load_movielens_split,
    load_rc,
    sample_observations,
)
from .links import LinkModel
from .mechanisms import RunConfig, run_mechanism, run_output_perturbation
from .metrics import are, sign_accuracy
from .privacy import Mechanism, RngHandle
from .spg import SolverParams

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "CSV_HEADER",
    "ConfigError",
    "load_config",
    "run_synthetic",
    "run_real",
    "run_ratio_sweep",
    "write_rows",
    "read_rows",
    "aggregate",
    "write_plotdata",
]

log = logging.getLogger(__name__)

CSV_HEADER = ["dataset", "mechanism", "link", "epsilon", "ratio", "seed", "metric", "value", "wall_ms"]
ALL_MECHANISMS = tuple(m.value for m in Mechanism)
_STREAM_TRUTH = 1
_STREAM_SAMPLE = 2
_STREAM_SPLIT = 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = "synthetic"
    d1: int = 100
    d2: int = 100
    rank: int = 1
    alpha: float = 1.0
    scaling: str = "max"
    data_path: str | None = None
    test_path: str | None = None
    mechanisms: tuple[str, ...] = ALL_MECHANISMS
    epsilons: tuple[float, ...] = tuple(float(e) for e in range(1, 11))
    ratios: tuple[float, ...] = (0.15,)
    seeds: tuple[int, ...] = tuple(range(40))
    link: str = "logistic"
    sigma: float = 1.0
    projection: str = "dykstra"
    max_iters: int = 500
    iterations: int = 50
    clamp: float = 0.5
    jobs: int = 1
    out: str = "results.csv"

    def validate(self):
        if not self.mechanisms or not self.epsilons or not self.ratios or not self.seeds:
            raise ConfigError("mechanism, epsilon, ratio and seed grids must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        for m in self.mechanisms:
            if m not in ALL_MECHANISMS:
                raise ConfigError(f"unknown mechanism {m!r}; choose from {ALL_MECHANISMS}")
        if any(not e > 0 for e in self.epsilons):
            raise ConfigError("epsilons must be positive")
        if any(not 0 < r <= 1 for r in self.ratios):
            raise ConfigError("observation ratios must lie in (0, 1]")
        if self.link not in ("logistic", "gaussian"):
            raise ConfigError(f"unknown link {self.link!r}")
        if not self.sigma > 0 or not self.alpha > 0:
            raise ConfigError("sigma and alpha must be positive")
        if self.projection not in ("dykstra", "nuclear_only"):
            raise ConfigError(f"unknown projection {self.projection!r}")
        if self.dataset not in ("synthetic", "ml100k", "rc"):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.iterations < 1 or not self.clamp > 0:
            raise ConfigError("gradient perturbation needs iterations >= 1 and clamp > 0")
        return self

    def link_model(self) -> LinkModel:
        return LinkModel(self.link, self.sigma)

    def run_config(self, mechanism, epsilon, shape, seed) -> RunConfig:
        return RunConfig.build(
            mechanism, epsilon, shape, link=self.link_model(), alpha=self.alpha,
            rank=self.rank, seed=seed, projection=self.projection,
            solver=SolverParams(max_iters=self.max_iters),
            iterations=self.iterations, clamp=self.clamp,
        )


def _floats(s):
    return tuple(float(v) for v in _split(s))


def _split(s):
    return [v.strip() for v in str(s).replace(";", ",").split(",") if v.strip()]


def parse_seeds(s) -> tuple[int, ...]:
    """``"0-9"``, ``"1,2,5"`` or a mix such as ``"0-3,10"``."""
    out = []
    for part in _split(s):
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


_CONVERTERS = {
    "d1": int, "d2": int, "rank": int, "alpha": float, "sigma": float,
    "max_iters": int, "iterations": int, "clamp": float, "jobs": int,
    "mechanisms": lambda s: tuple(_split(s)), "epsilons": _floats, "eps": _floats,
    "ratios": _floats, "ratio": _floats, "seeds": parse_seeds,
}
_ALIASES = {"eps": "epsilons", "ratio": "ratios", "path": "data_path", "test": "test_path"}


def load_config(path=None, base: ExperimentConfig | None = None, **overrides) -> ExperimentConfig:
    """Read an INI-style config (any section names) and apply overrides.

    Keys match :class:`ExperimentConfig` fields; ``eps``, ``ratio``, ``path``
    and ``test`` are accepted as aliases. Override values of ``None`` are
    ignored.
    """
    cfg = replace(base) if base is not None else ExperimentConfig()
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            values.update(parser[section])
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = set(ExperimentConfig.__dataclass_fields__)
    for key, raw in values.items():
        name = _ALIASES.get(key, key)
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        conv = _CONVERTERS.get(key, _CONVERTERS.get(name))
        try:
            setattr(cfg, name, conv(raw) if conv and isinstance(raw, str) else raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return cfg.validate()


@dataclass(frozen=True, order=True)
class ResultRow:
    dataset: str
    mechanism: str
    link: str
    epsilon: float
    ratio: float
    seed: int
    metric: str
    value: float = field(compare=False)
    wall_ms: float = field(compare=False, default=0.0)
    epsilon_spent: float = field(compare=False, default=0.0)

    def as_csv(self):
        return [self.dataset, self.mechanism, self.link, _fmt(self.epsilon), _fmt(self.ratio),
                str(self.seed), self.metric, repr(float(self.value)), f"{self.wall_ms:.1f}"]


def _fmt(x):
    return "inf" if math.isinf(x) else repr(float(x))


# --- cells -------------------------------------------------------------------

def _evaluate_cell(cfg: ExperimentConfig, obs, seed, ratio, score, metric, dataset):
    """Run every (mechanism, epsilon) for one dataset draw; return rows."""
    rows = []
    link = cfg.link
    clean = None
    clean_ms = 0.0
    if Mechanism.CLEAR.value in cfg.mechanisms or Mechanism.OUTPUT.value in cfg.mechanisms:
        t0 = time.perf_counter()
        clean = run_mechanism(obs, cfg.run_config("clear", None, obs.shape, seed))
        clean_ms = 1000 * (time.perf_counter() - t0)
    for mech in cfg.mechanisms:
        for eps in cfg.epsilons:
            if mech == Mechanism.CLEAR.value:
                res, ms = clean, clean_ms
            else:
                rc = cfg.run_config(mech, eps, obs.shape, seed)
                t0 = time.perf_counter()
                if mech == Mechanism.OUTPUT.value:
                    res = run_output_perturbation(obs, rc, clean=clean)
                    ms = clean_ms + 1000 * (time.perf_counter() - t0)
                else:
                    res = run_mechanism(obs, rc)
                    ms = 1000 * (time.perf_counter() - t0)
                declared = eps
                if not math.isclose(res.epsilon_spent, declared, rel_tol=1e-12):
                    raise RuntimeError(
                        f"{mech} at eps={eps} spent {res.epsilon_spent}, declared {declared}"
                    )
            spent = res.epsilon_spent
            log.info("%s %s eps=%s ratio=%s seed=%s spent=%s", dataset, mech, eps, ratio, seed, spent)
            rows.append(ResultRow(dataset, mech, link, float(eps), float(ratio), int(seed),
                                  metric, score(res.solution), ms, spent))
    return rows


def _synthetic_cell(cfg: ExperimentConfig, seed: int, ratio: float):
    gt = gen_synthetic(cfg.d1, cfg.d2, cfg.rank, cfg.alpha, RngHandle(seed, _STREAM_TRUTH),
                       scaling=cfg.scaling)
    obs = sample_observations(gt, ratio, cfg.link_model(), RngHandle(seed, _STREAM_SAMPLE))
    return _evaluate_cell(cfg, obs, seed, ratio, lambda X: are(X, gt.M), "are", "synthetic")


def _real_cell(cfg: ExperimentConfig, seed: int, train, test):
    return _evaluate_cell(cfg, train, seed, 1.0, lambda X: sign_accuracy(X, test), "acc", cfg.dataset)


def _run_cells(cfg, fn, args):
    if cfg.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            parts = list(pool.map(fn, *zip(*args)))
    else:
        parts = [fn(*a) for a in args]
    return sorted(r for part in parts for r in part)


def run_synthetic(cfg: ExperimentConfig):
    """Mechanism x epsilon x seed grid on synthetic data at ``cfg.ratios[0]``."""
    cfg.validate()
    ratio = cfg.ratios[0]
    return _run_cells(cfg, _synthetic_cell, [(cfg, s, ratio) for s in cfg.seeds])


def run_ratio_sweep(cfg: ExperimentConfig):
    """Mechanism x epsilon x observation-ratio x seed grid on synthetic data."""
    cfg.validate()
    return _run_cells(cfg, _synthetic_cell, [(cfg, s, r) for r in cfg.ratios for s in cfg.seeds])


def load_real(cfg: ExperimentConfig, seed: int):
    """Return ``(train, test)`` observation sets for a real dataset."""
    if cfg.data_path is None:
        raise ConfigError(f"dataset {cfg.dataset} needs a data path")
    path = Path(cfg.data_path)
    if cfg.dataset == "ml100k":
        if cfg.test_path is not None:
            return binarize_mean_threshold(*load_movielens_split(path, cfg.test_path))
        if path.is_dir():
            base, test = path / "u1.base", path / "u1.test"
            if base.is_file() and test.is_file():
                return binarize_mean_threshold(*load_movielens_split(base, test))
            path = path / "u.data"
        table = load_movielens(path)
        obs = binarize_mean_threshold(table)
        perm = RngHandle(seed, _STREAM_SPLIT).generator.permutation(obs.n)
        k = int(round(0.8 * obs.n))
        return obs.subset(np.sort(perm[:k])), obs.subset(np.sort(perm[k:]))
    if path.is_dir():
        path = path / "rating_final.csv"
    return binarize_rc(load_rc(path), RngHandle(seed, _STREAM_SPLIT))


def run_real(cfg: ExperimentConfig):
    """Mechanism x epsilon x seed grid on ML-100K or RC, scored by sign accuracy."""
    cfg.validate()
    args = []
    for s in cfg.seeds:
        train, test = load_real(cfg, s)
        args.append((cfg, s, train, test))
    return _run_cells(cfg, _real_cell, args)


# --- files -------------------------------------------------------------------

def write_rows(rows, path, budget_path=None):
    """Write result rows; the per-row privacy spend goes to ``budget_path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.as_csv())
    if budget_path is not None:
        with open(budget_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER[:7] + ["epsilon_spent"])
            for r in rows:
                w.writerow(r.as_csv()[:7] + [repr(r.epsilon_spent)])
    return path


def read_rows(path):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: header {header} does not match {CSV_HEADER}")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(CSV_HEADER):
                raise ConfigError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields")
            try:
                rows.append(ResultRow(rec[0], rec[1], rec[2], float(rec[3]), float(rec[4]),
                                      int(rec[5]), rec[6], float(rec[7]), float(rec[8])))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return rows


def aggregate(rows):
    """Mean and standard deviation over seeds for every grid point.

    Returns ``{(dataset, link, metric): [(mechanism, epsilon, ratio, mean, std, n), ...]}``.
    """
    groups: dict = {}
    for r in rows:
        key = (r.dataset, r.link, r.metric)
        groups.setdefault(key, {}).setdefault((r.mechanism, r.epsilon, r.ratio), []).append(r.value)
    out = {}
    for key, cells in sorted(groups.items()):
        series = []
        for (mech, eps, ratio), vals in sorted(cells.items()):
            v = np.asarray(vals, dtype=float)
            std = float(v.std(ddof=1)) if v.size > 1 else 0.0
            series.append((mech, eps, ratio, float(np.mean(v)), std, int(v.size)))
        out[key] = series
    return out


def write_plotdata(result_csv, out_dir=None):
    """Write one aggregated CSV per (dataset, link, metric); return the paths."""
    rows = read_rows(result_csv)
    if not rows:
        raise ConfigError(f"{result_csv}: no result rows")
    result_csv = Path(result_csv)
    out_dir = Path(out_dir) if out_dir is not None else result_csv.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for (dataset, link, metric), series in aggregate(rows).items():
        p = out_dir / f"{result_csv.stem}_{dataset}_{link}_{metric}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mechanism", "epsilon", "ratio", "mean", "std", "n"])
            for mech, eps, ratio, mean, std, n in series:
                w.writerow([mech, _fmt(eps), _fmt(ratio), repr(mean), repr(std), n])
        paths.append(p)
    return paths
