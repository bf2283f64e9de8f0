"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the summary lines are
repeated at the end of the session) or as a script with
``python3 tests/test_acceptance.py``.  The simulation criteria take a minute
or two on one core.
"""

import functools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

from ewl_pricing.cli import execute
from ewl_pricing.config import RunConfig
from ewl_pricing.estimator import estimate_phi, log_likelihood, phi_bounds, score_from_totals
from ewl_pricing.experiments import SCALES, SweepSpec, ci99, run_sweep
from ewl_pricing.fare_demand import FareStructure, phi_from_frat5
from ewl_pricing.market_simulator import EpisodeConfig
from ewl_pricing.policy_optimizer import (
    ObjectiveContext,
    greedy_policy,
    maximize_unified,
    policy_fisher_information,
    unified_gradient,
)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_window  # noqa: E402

SEED = 0
BASE = EpisodeConfig(nu_true=0.18, clamp=(1.5, 4.3))
GRID = (2.1, 2.56, 3.0, 3.4, 3.7)
ETAS = (0.0, 500.0, 1000.0, 2167.0, 4000.0, 6000.0, 8000.0)
ETA = 2167.0

REPORT: list[str] = []


def report(label: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


@functools.lru_cache(maxsize=None)
def grid_run():
    spec = SweepSpec(kind="frat5_grid", base=BASE, frat5_points=GRID, eta_fixed=ETA,
                     episodes_per_point=256, seed=SEED)
    return run_sweep(spec)


@functools.lru_cache(maxsize=None)
def eta_run():
    spec = SweepSpec(kind="eta_sweep", base=BASE, etas=ETAS, episodes_per_point=128, seed=SEED)
    return run_sweep(spec)


@functools.lru_cache(maxsize=None)
def detailed_run():
    spec = SweepSpec(kind="detailed", base=BASE, frat5_points=(2.1, 2.56), eta_fixed=ETA,
                     episodes_per_point=256, seed=SEED)
    return run_sweep(spec)


def check_grid_revenue() -> bool:
    pts = grid_run().points
    parts, ok = [], True
    for f5 in (2.56, 3.0):  # grid points inside the 2.2..3.0 region
        diff = pts[(f5, "unified")].norm_rev.mean() - pts[(f5, "greedy")].norm_rev.mean()
        ok &= diff >= 0.03
        parts.append(f"F5*={f5} gain {100 * diff:.1f} pp (need >= 3)")
    g, u = pts[(3.7, "greedy")], pts[(3.7, "unified")]
    diff = u.norm_rev.mean() - g.norm_rev.mean()
    band = max(ci99(g.norm_rev), ci99(u.norm_rev))
    ok &= abs(diff) < band
    parts.append(
        f"F5*=3.7 diff {100 * diff:.2f} pp vs 99% CI {100 * band:.2f} pp "
        f"(paired CI {100 * ci99(u.norm_rev - g.norm_rev):.2f} pp)"
    )
    return report("1 frat5 grid revenue", ok, "; ".join(parts))


def check_eta_shape() -> bool:
    pts = eta_run().points
    mean = {e: pts[(e,)].norm_rev.mean() for e in ETAS}
    ci = {e: ci99(pts[(e,)].norm_rev) for e in ETAS}
    best = max(ETAS, key=mean.get)
    above_greedy = mean[2167.0] - ci[2167.0] > mean[0.0] + ci[0.0]
    below_best = best != 8000.0 and mean[8000.0] + ci[8000.0] < mean[best] - ci[best]
    detail = (
        f"eta=0 {mean[0.0]:.3f}±{ci[0.0]:.3f}, eta=2167 {mean[2167.0]:.3f}±{ci[2167.0]:.3f}, "
        f"best eta={best:g} {mean[best]:.3f}±{ci[best]:.3f}, eta=8000 {mean[8000.0]:.3f}±{ci[8000.0]:.3f}"
    )
    return report("2 eta sweep ordering", above_greedy and below_best, detail)


def check_mse_ordering() -> bool:
    pts = grid_run().points
    g = [pts[(f5, "greedy")].mse.mean() for f5 in GRID]
    u = [pts[(f5, "unified")].mse.mean() for f5 in GRID]
    unified_lower = all(b <= a for a, b in zip(g, u))
    decreasing = all(b < a for a, b in zip(g, g[1:]))
    detail = "greedy " + ", ".join(f"{v:.4f}" for v in g) + " | unified " + ", ".join(f"{v:.4f}" for v in u)
    return report("3 MSE ordering", unified_lower and decreasing, detail)


def check_histograms() -> bool:
    pts = detailed_run().points
    fares = BASE.structure.fares
    g21 = pts[(2.1, "greedy")].fare_shares.mean(axis=0)
    g256 = pts[(2.56, "greedy")].fare_shares.mean(axis=0)
    modal_ok = fares[np.argmax(g21)] == 50 and abs(g21[0] - 0.40) <= 0.10
    low_share = g256[:3].sum()
    low_ok = abs(low_share - 0.38) <= 0.10
    parts = [f"F5*=2.1 greedy modal ${fares[np.argmax(g21)]:.0f} share {g21[0]:.3f}",
             f"F5*=2.56 greedy {{50,70,90}} share {low_share:.3f}"]
    dom_ok = True
    for f5 in (2.1, 2.56):
        # per-episode CDF differences; dominance fails where unified's CDF is
        # significantly above greedy's at the 99% level
        diff = (np.cumsum(pts[(f5, "unified")].fare_shares, axis=1)
                - np.cumsum(pts[(f5, "greedy")].fare_shares, axis=1))
        mean = diff.mean(axis=0)
        band = np.array([ci99(diff[:, i]) for i in range(diff.shape[1])])
        bad = np.flatnonzero(mean > band)
        strict = bool((mean <= 0).all())
        dom_ok &= bad.size == 0
        where = ", ".join(f"${fares[i]:.0f} +{mean[i]:.4f} (CI {band[i]:.4f})" for i in bad) or "none"
        parts.append(f"F5*={f5} dominance violations {where}, sample-strict {'yes' if strict else 'no'}")
    return report("4 detailed-view histograms", modal_ok and low_ok and dom_ok, "; ".join(parts))


def _dense_mle(window, nu, structure, clamp, points=100_000):
    lo, hi = phi_bounds(clamp)
    grid = np.linspace(lo, hi, points)
    o, b = window.offer_totals(), window.booking_totals()
    x = structure.ratio_excess
    ll = (b * (np.log(nu) - grid[:, None] * x) - o * nu * np.exp(-grid[:, None] * x)).sum(axis=1)
    return grid[np.argmax(ll)]


def check_oracles() -> bool:
    s = FareStructure.default()
    rng = np.random.default_rng(SEED)
    parts, ok = [], True

    worst = 0.0
    for _ in range(100):
        nu = rng.uniform(0.05, 0.6)
        w = random_window(rng, nu=nu, length=rng.integers(1, 23),
                          concentration=rng.uniform(0.2, 2), phi=rng.uniform(0.25, 1.2))
        if w.offer_totals()[1:].sum() == 0:
            continue
        worst = max(worst, abs(estimate_phi(w, nu, s).phi_hat - _dense_mle(w, nu, s, (1.5, 4.3))))
    ok &= worst < 1e-4
    parts.append(f"MLE vs grid {worst:.1e}")

    worst_ll = worst_u = 0.0
    for _ in range(100):
        w = random_window(rng, length=rng.integers(0, 23), concentration=rng.uniform(0.1, 2))
        phi = rng.uniform(0.2, 1.4)
        h = 1e-5 * phi
        if len(w):
            fd = (log_likelihood(w, phi + h, 0.18, s) - log_likelihood(w, phi - h, 0.18, s)) / (2 * h)
            an = float(score_from_totals(phi, w.offer_totals(), w.booking_totals(), 0.18, s))
            worst_ll = max(worst_ll, abs(an - fd) / max(abs(fd), 1e-3))
        ctx = ObjectiveContext(w, phi, 0.18, 22, rng.uniform(0, 8000))
        p = rng.dirichlet(np.ones(10))
        grad = unified_gradient(p, ctx, s)
        d = ctx.nu * np.exp(-phi * s.ratio_excess)

        def u(q):
            info = np.sum((ctx.past_offers + 22 * q) * d * s.ratio_excess**2)
            return 22 * np.sum(s.fares * q * d) - ctx.eta / (phi * math.sqrt(info))

        eye = np.eye(10) * 1e-6
        fd = np.array([(u(p + e) - u(p - e)) / 2e-6 for e in eye])
        worst_u = max(worst_u, float(np.max(np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-3))))
    ok &= worst_ll < 1e-4 and worst_u < 1e-5
    parts.append(f"score FD {worst_ll:.1e}, grad U FD {worst_u:.1e}")

    w = random_window(rng, length=22)
    ctx = ObjectiveContext(w, 0.55, 0.18, 22, 0.0)
    pi = rng.dirichlet(np.ones(10))
    weight = 0.18 * np.exp(-0.55 * s.ratio_excess) * s.ratio_excess**2
    draws = rng.multinomial(22, pi, size=100_000)
    mc = ((w.offer_totals(21) + draws) @ weight).mean()
    from ewl_pricing.policy_optimizer import PricingPolicy
    exact = policy_fisher_information(PricingPolicy(pi), ctx, s)
    rel = abs(mc - exact) / exact
    ok &= rel < 0.01
    parts.append(f"I(pi) MC rel {rel:.1e}")

    worst_tv = 0.0
    for _ in range(100):
        w = random_window(rng, length=rng.integers(0, 23), concentration=rng.uniform(0.1, 2))
        ctx = ObjectiveContext(w, phi_from_frat5(rng.uniform(1.5, 4.3)), 0.18, 22, 0.0)
        worst_tv = max(worst_tv, maximize_unified(ctx, s).policy.total_variation(greedy_policy(ctx, s)))
    ok &= worst_tv < 1e-6
    parts.append(f"eta=0 TV {worst_tv:.1e}")

    samples = rng.dirichlet(np.ones(3), size=1_000_000)
    worst_gap = -math.inf
    for _ in range(5):
        fares = np.sort(rng.choice(np.arange(50, 400, 10), size=3, replace=False)).astype(float)
        s3 = FareStructure.from_fares(fares)
        w = random_window(rng, n=3, length=rng.integers(0, 23), concentration=1.0)
        ctx = ObjectiveContext(w, phi_from_frat5(rng.uniform(1.5, 4.3)), 0.18, 22, rng.uniform(100, 8000))
        d = ctx.nu * np.exp(-ctx.phi_hat * s3.ratio_excess)
        info = ctx.past_offers @ (d * s3.ratio_excess**2) + 22 * samples @ (d * s3.ratio_excess**2)
        vals = 22 * samples @ (s3.fares * d) - ctx.eta / (ctx.phi_hat * np.sqrt(np.maximum(info, 1e-12)))
        worst_gap = max(worst_gap, vals.max() - maximize_unified(ctx, s3).value)
    ok &= worst_gap < 1e-4
    parts.append(f"brute force gap {worst_gap:.1e}")

    ok &= _determinism(parts)
    return report("5 oracle and property suites", ok, "; ".join(parts))


def _determinism(parts: list[str]) -> bool:
    import tempfile

    same = True
    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for k, workers in enumerate((1, 1, 2)):
            out = Path(tmp) / str(k)
            cfg = RunConfig(command="sweep-frat5", out=str(out), seed=3, workers=workers, chunk_size=3,
                            steps=20, episodes=7, frat5_points=(2.3, 3.1))
            execute(cfg)
            outputs.append((out / "frat5_grid.csv").read_bytes())
        same = outputs[0] == outputs[1] == outputs[2]
    parts.append(f"CSV byte-identical across runs and workers: {'yes' if same else 'no'}")
    return same


def check_full_scale_preset() -> bool:
    p = SCALES.get("paper", {})
    readme = Path(__file__).resolve().parents[1] / "README.md"
    text = readme.read_text() if readme.is_file() else ""
    preset_ok = (p.get("eta_samples"), p.get("eta_episodes"), p.get("grid_episodes")) == (160, 2560, 4000)
    documented = "--scale paper" in text and "long-running" in text
    return report("6 full-scale preset", preset_ok and documented,
                  f"preset {p}, documented in README: {'yes' if documented else 'no'}")


CHECKS = [check_grid_revenue, check_eta_shape, check_mse_ordering, check_histograms,
          check_oracles, check_full_scale_preset]


@pytest.mark.slow
@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i + 1}" for i in range(len(CHECKS))])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
