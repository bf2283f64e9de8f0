"""Single-leg market simulation.

At every sell date one policy prices all ``H`` active flights. Each flight
draws its fare from the policy, receives Poisson(d_true(f)) bookings, and the
sell date's aggregate counts are appended to the rolling window. The system
re-estimates ``phi`` from the window before each pricing decision.

Randomness is fixed per (seed, episode, sell date, flight): every sell date
consumes exactly two uniforms per flight, one that picks the fare by inverse
CDF and one that turns into a booking count by Poisson inverse CDF. Policies
therefore never shift each other's random streams, and two methods facing the
same episode see identical booking luck whenever they offer the same fare.

Episodes are simulated in lock-step batches; a single episode is a batch of
one, and every per-row computation is independent of the batch it sits in.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence, TextIO

import numpy as np

from .booking_history import HistoryWindow, SellDateRecord
from .estimator import DEFAULT_CLAMP, estimate_phi_from_totals
from .fare_demand import FareStructure, demand_curve, greedy_index, phi_from_frat5
from .policy_optimizer import ConvergenceWarning, ObjectiveContext, maximize_unified, solve_unified

POLICY_KINDS = ("greedy", "unified", "random")
DEFAULT_H = 22
DEFAULT_NU = 4.0 / 22.0
DEFAULT_STEPS = 20 * DEFAULT_H


@dataclass(frozen=True)
class EpisodeConfig:
    structure: FareStructure = field(default_factory=FareStructure.default)
    H: int = DEFAULT_H
    nu_true: float = DEFAULT_NU
    frat5_true: float = 2.56
    clamp: tuple[float, float] = DEFAULT_CLAMP
    eta: float = 0.0
    steps: int = DEFAULT_STEPS
    policy_kind: str = "greedy"
    seed: int = 0
    episode_id: int = 0
    solver: str = "exact"

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if self.nu_true < 0:
            raise ValueError("nu_true must be >= 0")
        if not self.frat5_true > 1:
            raise ValueError("frat5_true must be > 1")
        if not 1 < self.clamp[0] <= self.clamp[1]:
            raise ValueError(f"invalid frat5 clamp {self.clamp!r}")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.policy_kind not in POLICY_KINDS:
            raise ValueError(f"policy_kind must be one of {POLICY_KINDS}")
        if self.solver not in ("exact", "projected_gradient"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class EpisodeResult:
    total_revenue: float
    per_step_revenue: np.ndarray
    expected_revenue: np.ndarray  # R(pi_t) under the true demand
    phi_hat_trajectory: np.ndarray
    policy_trajectory: np.ndarray
    fare_offer_histogram: np.ndarray
    degenerate_estimation_count: int
    optimizer_warnings: int = 0
    records: list[SellDateRecord] = field(default_factory=list)

    def trace_table(self) -> tuple[list[str], list[list]]:
        """Header and rows of the per-step trace, one row per sell date and fare."""
        n = self.policy_trajectory.shape[1]
        header = ["step", "fare_index", "offers", "bookings", "revenue", "expected_revenue",
                  "phi_hat"] + [
            f"pi_{i}" for i in range(n)
        ]
        rows = []
        for k, rec in enumerate(self.records):
            probs = [repr(float(p)) for p in self.policy_trajectory[k]]
            rev = repr(float(self.per_step_revenue[k]))
            exp_rev = repr(float(self.expected_revenue[k]))
            phi = repr(float(self.phi_hat_trajectory[k]))
            for i in range(n):
                rows.append([k, i, int(rec.offers[i]), int(rec.bookings[i]), rev, exp_rev, phi] + probs)
        return header, rows

    def write_csv(self, fh: TextIO) -> None:
        header, rows = self.trace_table()
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


@dataclass
class BatchResult:
    """Per-episode arrays from a lock-step batch (leading axis = episode)."""

    episode_ids: np.ndarray
    frat5_true: np.ndarray
    per_step_revenue: np.ndarray  # (E, steps) realised
    expected_revenue: np.ndarray  # (E, steps) R(pi_t) under the true demand
    phi_hat: np.ndarray  # (E, steps)
    fare_histogram: np.ndarray  # (E, n)
    degenerate_counts: np.ndarray  # (E,)
    optimizer_warnings: np.ndarray  # (E,)
    policies: np.ndarray | None = None  # (E, steps, n)
    offers: np.ndarray | None = None  # (E, steps, n)
    bookings: np.ndarray | None = None  # (E, steps, n)

    @property
    def mean_revenue(self) -> np.ndarray:
        return self.per_step_revenue.mean(axis=1)

    @property
    def mean_expected_revenue(self) -> np.ndarray:
        return self.expected_revenue.mean(axis=1)


def episode_stream(seed: int, episode_id: int, n_dates: int, H: int) -> np.ndarray:
    """Uniforms for one episode, shape ``(n_dates, 2, H)``.

    Row ``[t, 0, k]`` picks flight ``k``'s fare on sell date ``t``;
    row ``[t, 1, k]`` decides its bookings.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(int(episode_id),))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.random((n_dates, 2, H))


def choose_fares(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF fare draw; ``probs`` is ``(..., n)``, ``u`` is ``(..., H)``."""
    cdf = np.cumsum(probs, axis=-1)
    n = probs.shape[-1]
    # the last fare with positive mass owns the top of the unit interval
    last = n - 1 - np.argmax(probs[..., ::-1] > 0, axis=-1)
    cdf = np.where(np.arange(n) >= last[..., None], 1.0, cdf)
    idx = (u[..., :, None] >= cdf[..., None, :]).sum(axis=-1)
    return np.minimum(idx, n - 1)


def poisson_inverse_cdf(mu: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Smallest ``k`` with ``P(X <= k) > v`` for ``X ~ Poisson(mu)``."""
    mu = np.asarray(mu, dtype=float)
    p = np.exp(-mu)
    cdf = p.copy()
    k = np.zeros(mu.shape, dtype=np.int64)
    for j in range(1, 200):
        more = v >= cdf
        if not more.any():
            break
        k += more
        p = p * mu / j
        if not (p > 0).any():
            break
        cdf = cdf + p
    return k


def sample_bookings(
    pi,
    nu: float,
    phi: float,
    structure: FareStructure,
    H: int,
    uniforms: np.ndarray,
    sell_date: int = 0,
) -> SellDateRecord:
    """Price ``H`` flights from ``pi`` and draw their bookings.

    ``uniforms`` has shape ``(2, H)`` as produced by :func:`episode_stream`.
    """
    probs = np.asarray(getattr(pi, "probs", pi), dtype=float)
    fares = choose_fares(probs, uniforms[0])
    mu = demand_curve(phi, nu, structure)[fares]
    booked = poisson_inverse_cdf(mu, uniforms[1])
    n = structure.n
    return SellDateRecord(
        sell_date,
        np.bincount(fares, minlength=n),
        np.bincount(fares, weights=booked, minlength=n).astype(np.int64),
    )


def burn_in(config: EpisodeConfig, uniforms: np.ndarray | None = None) -> HistoryWindow:
    """Fill a window with ``H`` sell dates priced uniformly at random."""
    if uniforms is None:
        uniforms = episode_stream(config.seed, config.episode_id, config.H, config.H)
    s = config.structure
    window = HistoryWindow(config.H, s.n)
    phi = phi_from_frat5(config.frat5_true)
    uniform = np.full(s.n, 1.0 / s.n)
    for t in range(config.H):
        window.append(sample_bookings(uniform, config.nu_true, phi, s, config.H, uniforms[t], t))
    return window


def simulate_batch(
    config: EpisodeConfig,
    frat5_true: Sequence[float],
    episode_ids: Sequence[int],
    keep_trajectories: bool = False,
) -> BatchResult:
    """Run a batch of episodes that share everything except true frat5 and id.

    ``config.frat5_true`` and ``config.episode_id`` are ignored in favour of
    the per-episode arrays.
    """
    s = config.structure
    H, n, steps = config.H, s.n, config.steps
    frat5_true = np.asarray(frat5_true, dtype=float)
    ids = np.asarray(episode_ids, dtype=np.int64)
    E = ids.size
    if frat5_true.shape != (E,):
        raise ValueError("frat5_true and episode_ids must have the same length")
    phi_true = np.log(2.0) / (frat5_true - 1.0)
    d_true = demand_curve(phi_true, config.nu_true, s)  # (E, n)
    cents = np.asarray(s.cents, dtype=np.int64)
    rows = np.arange(E)

    stream = np.stack([episode_stream(config.seed, i, H + steps, H) for i in ids]) if E else np.zeros((0, H + steps, 2, H))

    buf_o = np.zeros((E, H, n), dtype=np.int64)
    buf_b = np.zeros((E, H, n), dtype=np.int64)
    tot_o = np.zeros((E, n), dtype=np.int64)
    tot_b = np.zeros((E, n), dtype=np.int64)

    def step(t: int, probs: np.ndarray):
        u = stream[:, t]
        fares = choose_fares(probs, u[:, 0])  # (E, H)
        mu = np.take_along_axis(d_true, fares, axis=1)
        booked = poisson_inverse_cdf(mu, u[:, 1])
        o = np.zeros((E, n), dtype=np.int64)
        b = np.zeros((E, n), dtype=np.int64)
        np.add.at(o, (rows[:, None], fares), 1)
        np.add.at(b, (rows[:, None], fares), booked)
        slot = t % H
        tot_o[:] += o - buf_o[:, slot]
        tot_b[:] += b - buf_b[:, slot]
        buf_o[:, slot] = o
        buf_b[:, slot] = b
        return o, b

    uniform = np.full((E, n), 1.0 / n)
    for t in range(H):
        step(t, uniform)

    revenue = np.zeros((E, steps))
    exp_revenue = np.zeros((E, steps))
    rev_per_offer = H * s.fares * d_true  # (E, n)
    phi_hat = np.zeros((E, steps))
    hist = np.zeros((E, n), dtype=np.int64)
    degenerate_counts = np.zeros(E, dtype=np.int64)
    warn_counts = np.zeros(E, dtype=np.int64)
    policies = np.zeros((E, steps, n)) if keep_trajectories else None
    offers_log = np.zeros((E, steps, n), dtype=np.int64) if keep_trajectories else None
    bookings_log = np.zeros((E, steps, n), dtype=np.int64) if keep_trajectories else None

    for k in range(steps):
        t = H + k
        ph, _, degen = estimate_phi_from_totals(tot_o, tot_b, config.nu_true, s, config.clamp)
        degenerate_counts += degen
        if config.policy_kind == "random":
            probs = uniform
        elif config.policy_kind == "greedy" or config.eta == 0.0:
            probs = np.zeros((E, n))
            probs[rows, greedy_index(ph, s)] = 1.0
        elif config.solver == "exact":
            # the oldest slot is about to be overwritten by this sell date
            past = tot_o - buf_o[:, t % H]
            probs = solve_unified(ph, past, config.nu_true, H, config.eta, s)
        else:
            probs, warns = _solve_rows_pgd(config, ph, tot_o - buf_o[:, t % H])
            warn_counts += warns
        o, b = step(t, probs)
        revenue[:, k] = (b @ cents) / 100.0
        exp_revenue[:, k] = (probs * rev_per_offer).sum(axis=1)
        phi_hat[:, k] = ph
        hist += o
        if keep_trajectories:
            policies[:, k] = probs
            offers_log[:, k] = o
            bookings_log[:, k] = b

    return BatchResult(
        episode_ids=ids,
        frat5_true=frat5_true,
        per_step_revenue=revenue,
        expected_revenue=exp_revenue,
        phi_hat=phi_hat,
        fare_histogram=hist,
        degenerate_counts=degenerate_counts,
        optimizer_warnings=warn_counts,
        policies=policies,
        offers=offers_log,
        bookings=bookings_log,
    )


def _solve_rows_pgd(config: EpisodeConfig, phi_hat: np.ndarray, past: np.ndarray):
    s = config.structure
    out = np.zeros((phi_hat.size, s.n))
    warns = np.zeros(phi_hat.size, dtype=np.int64)
    for r in range(phi_hat.size):
        ctx = ObjectiveContext(
            None, float(phi_hat[r]), config.nu_true, config.H, config.eta, past_offers=past[r]
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            res = maximize_unified(ctx, s, method="projected_gradient")
        out[r] = res.policy.probs
        warns[r] = not res.converged
    return out, warns


def run_episode(config: EpisodeConfig) -> EpisodeResult:
    """Simulate one episode after a random-pricing burn-in of ``H`` sell dates."""
    res = simulate_batch(config, [config.frat5_true], [config.episode_id], keep_trajectories=True)
    records = [
        SellDateRecord(config.H + k, res.offers[0, k], res.bookings[0, k])
        for k in range(config.steps)
    ]
    per_step = res.per_step_revenue[0]
    return EpisodeResult(
        total_revenue=float(per_step.sum()),
        per_step_revenue=per_step,
        expected_revenue=res.expected_revenue[0],
        phi_hat_trajectory=res.phi_hat[0],
        policy_trajectory=res.policies[0],
        fare_offer_histogram=res.fare_histogram[0],
        degenerate_estimation_count=int(res.degenerate_counts[0]),
        optimizer_warnings=int(res.optimizer_warnings[0]),
        records=records,
    )


def expected_step_revenue(probs, nu: float, frat5: float, H: int, structure: FareStructure) -> float:
    """Closed-form expected revenue of one sell date under a fixed policy."""
    d = demand_curve(phi_from_frat5(frat5), nu, structure)
    return float(H * (np.asarray(probs) * structure.fares * d).sum())


def with_policy(config: EpisodeConfig, policy_kind: str, **changes) -> EpisodeConfig:
    return replace(config, policy_kind=policy_kind, **changes)
