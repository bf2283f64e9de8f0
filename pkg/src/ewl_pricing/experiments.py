"""Experiment sweeps: trade-off sweep, frat5 grid and detailed policy view.

Every experiment is a set of *points* (an episode configuration plus the true
frat5 of each episode). Episodes are identified by integer ids; the same ids
are reused across points, so methods and trade-off values are compared under
common random numbers. Work is split into fixed-size chunks of episode ids and
reduced in id order, which keeps results identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .fare_demand import demand_curve
from .market_simulator import EpisodeConfig, simulate_batch

Z99 = NormalDist().inv_cdf(0.995)
ETA_RANGE = (0.0, 8000.0)
ETA_REFERENCE = 2167.0
FRAT5_INTERVAL = (2.1, 3.8)
DETAILED_FRAT5 = (2.1, 2.56, 3.7)
FRAT5_BIN_WIDTH = 0.1

SCALES = {
    "desk": {"eta_samples": 16, "eta_episodes": 128, "grid_points": 18, "grid_episodes": 256,
             "detailed_episodes": 256},
    "paper": {"eta_samples": 160, "eta_episodes": 2560, "grid_points": 18, "grid_episodes": 4000,
              "detailed_episodes": 4000},
}


class DegenerateNormalizationError(ValueError):
    pass


def reference_revenues(frat5_true, config: EpisodeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-sell-date expected revenue of the oracle and of uniform random pricing."""
    phi = np.log(2.0) / (np.asarray(frat5_true, dtype=float) - 1.0)
    per_offer = config.structure.fares * demand_curve(phi, config.nu_true, config.structure)
    return config.H * per_offer.max(axis=-1), config.H * per_offer.mean(axis=-1)


def normalized_revenue(mean_rev, frat5_true, config: EpisodeConfig):
    """0 for uniform random pricing, 1 for the oracle that knows the true demand."""
    r_opt, r_rand = reference_revenues(frat5_true, config)
    gap = r_opt - r_rand
    if np.any(gap <= 0):
        raise DegenerateNormalizationError(
            "oracle and random revenue coincide; normalisation undefined"
        )
    out = (np.asarray(mean_rev, dtype=float) - r_rand) / gap
    return float(out) if out.ndim == 0 else out


def mse_phi(trajectories, phi_true) -> float:
    """Mean squared error over every estimate of every trajectory.

    ``phi_true`` is a scalar or one value per trajectory.
    """
    trajectories = [np.asarray(t, dtype=float).ravel() for t in trajectories]
    truth = np.broadcast_to(np.asarray(phi_true, dtype=float), (len(trajectories),))
    errs = [t - p for t, p in zip(trajectories, truth)]
    n = sum(e.size for e in errs)
    if n == 0:
        raise ValueError("no estimates to score")
    return float(sum((e**2).sum() for e in errs) / n)


def ci99(samples) -> float:
    """Half-width of the normal-approximation 99% interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return math.inf
    return float(Z99 * x.std(ddof=1) / math.sqrt(x.size))


def stratified_etas(n: int, seed: int, low: float = ETA_RANGE[0], high: float = ETA_RANGE[1],
                    include: Sequence[float] = (0.0, ETA_REFERENCE)) -> list[float]:
    """One uniform draw per equal-width stratum, plus the mandatory reference values."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xE7A, 0))))
    u = gen.random(n)
    etas = low + (np.arange(n) + u) * (high - low) / n
    return sorted(set(float(e) for e in etas) | set(float(e) for e in include))


def sample_frat5(n: int, seed: int, interval: tuple[float, float] = FRAT5_INTERVAL) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xF5, 0))))
    return gen.uniform(interval[0], interval[1], n)


def frat5_bins(clamp: tuple[float, float]) -> np.ndarray:
    n = max(1, int(round((clamp[1] - clamp[0]) / FRAT5_BIN_WIDTH)))
    return np.linspace(clamp[0], clamp[1], n + 1)


@dataclass
class SweepSpec:
    kind: str
    base: EpisodeConfig = field(default_factory=EpisodeConfig)
    etas: tuple[float, ...] = ()
    eta_fixed: float = ETA_REFERENCE
    frat5_interval: tuple[float, float] = FRAT5_INTERVAL
    frat5_points: tuple[float, ...] = ()
    episodes_per_point: int = 128
    seed: int = 0
    workers: int = 1
    chunk_size: int = 64

    def __post_init__(self) -> None:
        if self.kind not in ("eta_sweep", "frat5_grid", "detailed"):
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if self.episodes_per_point < 1:
            raise ValueError("episodes_per_point must be >= 1")
        lo, hi = self.frat5_interval
        if not 1 < lo <= hi:
            raise ValueError(f"invalid frat5 interval {self.frat5_interval!r}")
        if any(e < 0 for e in self.etas) or self.eta_fixed < 0:
            raise ValueError("eta values must be >= 0")
        if any(f <= 1 for f in self.frat5_points):
            raise ValueError("frat5 points must be > 1")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be >= 1")

    @classmethod
    def preset(cls, kind: str, scale: str = "desk", seed: int = 0, **overrides) -> "SweepSpec":
        p = SCALES[scale]
        if kind == "eta_sweep":
            kw = dict(etas=tuple(stratified_etas(p["eta_samples"], seed)),
                      episodes_per_point=p["eta_episodes"])
        elif kind == "frat5_grid":
            kw = dict(frat5_points=tuple(np.round(np.linspace(*FRAT5_INTERVAL, p["grid_points"]), 6)),
                      episodes_per_point=p["grid_episodes"])
        else:
            kw = dict(frat5_points=DETAILED_FRAT5, episodes_per_point=p["detailed_episodes"])
        kw.update(overrides)
        return cls(kind=kind, seed=seed, **kw)


@dataclass
class PointStats:
    """Per-episode metrics at one experiment point, ordered by episode id."""

    norm_rev: np.ndarray
    mse: np.ndarray
    fare_shares: np.ndarray  # (E, n) share of offers per fare
    frat5_hist: np.ndarray  # (E, bins) share of estimates per frat5 bin

    @property
    def summary(self) -> dict[str, float]:
        return {
            "norm_rev": float(self.norm_rev.mean()),
            "norm_rev_ci99": ci99(self.norm_rev),
            "mse": float(self.mse.mean()),
            "mse_ci99": ci99(self.mse),
        }


@dataclass
class SweepResult:
    kind: str
    spec: SweepSpec
    points: dict[tuple, PointStats]
    tables: dict[str, tuple[list[str], list[list]]]


def _run_chunk(config: EpisodeConfig, frat5: np.ndarray, ids: np.ndarray):
    res = simulate_batch(config, frat5, ids)
    phi_true = np.log(2.0) / (frat5 - 1.0)
    mse = ((res.phi_hat - phi_true[:, None]) ** 2).mean(axis=1)
    shares = res.fare_histogram / res.fare_histogram.sum(axis=1, keepdims=True)
    edges = frat5_bins(config.clamp)
    f5_hat = 1.0 + np.log(2.0) / res.phi_hat
    idx = np.clip(np.searchsorted(edges, f5_hat, side="right") - 1, 0, edges.size - 2)
    hist = np.zeros((ids.size, edges.size - 1))
    np.add.at(hist, (np.arange(ids.size)[:, None], idx), 1.0)
    return res.mean_expected_revenue, mse, shares, hist / res.phi_hat.shape[1]


def run_points(points: dict[tuple, tuple[EpisodeConfig, np.ndarray]], spec: SweepSpec) -> dict[tuple, PointStats]:
    """Simulate each ``key -> (config, frat5 per episode)`` point."""
    jobs = []
    for key, (config, frat5) in points.items():
        ids = np.arange(frat5.size)
        for start in range(0, frat5.size, spec.chunk_size):
            sl = slice(start, start + spec.chunk_size)
            jobs.append((key, config, frat5[sl], ids[sl]))
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outs = list(pool.map(_run_chunk, *zip(*[(c, f, i) for _, c, f, i in jobs])))
    else:
        outs = [_run_chunk(c, f, i) for _, c, f, i in jobs]

    stats = {}
    for key, (config, frat5) in points.items():
        parts = [o for (k, *_), o in zip(jobs, outs) if k == key]
        mean_rev, mse, shares, hist = (np.concatenate(x) for x in zip(*parts))
        stats[key] = PointStats(normalized_revenue(mean_rev, frat5, config), mse, shares, hist)
    return stats


def _fmt(x: float) -> str:
    return repr(float(x))


def run_eta_sweep(spec: SweepSpec) -> SweepResult:
    etas = sorted(set(spec.etas) | {0.0}) if spec.etas else stratified_etas(16, spec.seed)
    frat5 = sample_frat5(spec.episodes_per_point, spec.seed, spec.frat5_interval)
    base = replace(spec.base, seed=spec.seed, policy_kind="unified")
    points = {(eta,): (replace(base, eta=eta), frat5) for eta in etas}
    stats = run_points(points, spec)
    header = ["eta", "norm_rev", "norm_rev_ci99", "mse", "mse_ci99"]
    rows = []
    for eta in etas:
        s = stats[(eta,)].summary
        rows.append([_fmt(eta)] + [_fmt(s[h]) for h in header[1:]])
    return SweepResult("eta_sweep", spec, stats, {"eta_sweep": (header, rows)})


def _method_configs(spec: SweepSpec) -> dict[str, EpisodeConfig]:
    base = replace(spec.base, seed=spec.seed)
    return {
        "greedy": replace(base, policy_kind="greedy", eta=0.0),
        "unified": replace(base, policy_kind="unified", eta=spec.eta_fixed),
    }


def run_frat5_grid(spec: SweepSpec) -> SweepResult:
    grid = spec.frat5_points or tuple(np.round(np.linspace(*spec.frat5_interval, 18), 6))
    methods = _method_configs(spec)
    points = {
        (f5, m): (cfg, np.full(spec.episodes_per_point, float(f5)))
        for f5 in grid
        for m, cfg in methods.items()
    }
    stats = run_points(points, spec)
    header = ["frat5", "method", "norm_rev", "norm_rev_ci99", "mse", "mse_ci99"]
    rows = []
    for f5 in grid:
        for m in methods:
            s = stats[(f5, m)].summary
            rows.append([_fmt(f5), m] + [_fmt(s[h]) for h in header[2:]])
    return SweepResult("frat5_grid", spec, stats, {"frat5_grid": (header, rows)})


def detailed_label(frat5: float) -> str:
    return f"{frat5:g}".replace(".", "_")


def run_detailed_view(spec: SweepSpec) -> SweepResult:
    """Offered-fare and estimated-frat5 histograms per method.

    Besides greedy and unified, an ``oracle`` method prices greedily with the
    estimate pinned to the true frat5.
    """
    grid = spec.frat5_points or DETAILED_FRAT5
    methods = _method_configs(spec)
    points = {}
    for f5 in grid:
        frat5 = np.full(spec.episodes_per_point, float(f5))
        for m, cfg in methods.items():
            points[(f5, m)] = (cfg, frat5)
        points[(f5, "oracle")] = (replace(methods["greedy"], clamp=(float(f5), float(f5))), frat5)
    stats = run_points(points, spec)

    s = spec.base.structure
    edges = frat5_bins(spec.base.clamp)
    tables = {}
    for f5 in grid:
        rows = []
        for m in ("greedy", "unified", "oracle"):
            st = stats[(f5, m)]
            for fare, share in zip(s.fares, st.fare_shares.mean(axis=0)):
                rows.append([m, f"fare:{fare:.2f}", _fmt(share)])
            if m == "oracle":
                continue
            for lo, share in zip(edges[:-1], st.frat5_hist.mean(axis=0)):
                rows.append([m, f"frat5:{lo:.2f}", _fmt(share)])
        tables[f"detailed_{detailed_label(f5)}"] = (["method", "fare_or_frat5bin", "share"], rows)
    return SweepResult("detailed", spec, stats, tables)


def run_sweep(spec: SweepSpec) -> SweepResult:
    return {"eta_sweep": run_eta_sweep, "frat5_grid": run_frat5_grid,
            "detailed": run_detailed_view}[spec.kind](spec)
