"""Pricing policies that trade expected revenue against Fisher information.

A policy ``pi`` is a distribution over the fare ladder; each of the ``H``
active flights draws its fare independently from it. For a policy,

    R(pi) = H * sum_i f_i pi_i d(f_i)
    I(pi) = sum_i (o_i + H pi_i) d(f_i) (f_i/f0 - 1)^2
    U(pi) = R(pi) - eta / (phi_hat * sqrt(I(pi)))

where ``o_i`` counts offers of fare ``i`` over the newest ``H - 1`` sell
dates (the oldest date drops out of the window after this sell date) and
``d`` is evaluated at the current estimate ``phi_hat``.

``U`` only sees ``pi`` through two linear maps, revenue and information, and
``-1/sqrt(.)`` is concave and increasing, so ``U`` is concave on the simplex
and some maximiser puts mass on at most two fares. :func:`solve_unified`
enumerates every vertex and every two-fare edge in closed form, which makes
it exact and cheap enough to run inside batched simulations.
:func:`maximize_unified` also offers a multi-start projected-gradient ascent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .booking_history import HistoryWindow
from .estimator import information_weights
from .fare_demand import FareStructure, greedy_index, revenue_curve

INFO_FLOOR = 1e-12


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class PricingPolicy:
    """Probability of offering each ladder fare; renormalised on construction."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-d sequence")
        if not np.isfinite(p).all() or (p < 0).any():
            raise ValueError("probabilities must be finite and non-negative")
        total = p.sum()
        if total <= 0:
            raise ValueError("probabilities must not all be zero")
        p = p / total
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, index: int, n: int) -> "PricingPolicy":
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p)

    @property
    def n(self) -> int:
        return self.probs.size

    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())

    def total_variation(self, other: "PricingPolicy") -> float:
        return 0.5 * float(np.abs(self.probs - other.probs).sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PricingPolicy):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    """Everything the unified objective needs at one sell date.

    ``past_offers`` defaults to the per-fare offers of the newest ``H - 1``
    records of ``window``; pass it directly to skip the window.
    """

    window: HistoryWindow | None
    phi_hat: float
    nu: float
    H: int
    eta: float = 0.0
    past_offers: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.H < 1:
            raise ValueError("H must be >= 1")
        if not self.phi_hat > 0:
            raise ValueError("phi_hat must be > 0")
        if self.past_offers is None:
            if self.window is None:
                raise ValueError("need a window or past_offers")
            k = min(len(self.window), self.H - 1)
            past = self.window.offer_totals(k).astype(float)
        else:
            past = np.array(self.past_offers, dtype=float)
            if (past < 0).any():
                raise ValueError("past_offers must be non-negative")
        object.__setattr__(self, "past_offers", past)


@dataclass(frozen=True)
class OptimizationResult:
    policy: PricingPolicy
    value: float
    kkt_residual: float
    converged: bool
    method: str


def policy_revenue(pi: PricingPolicy, ctx: ObjectiveContext, structure: FareStructure) -> float:
    rev = revenue_curve(ctx.phi_hat, ctx.nu, structure)
    return float(ctx.H * (pi.probs * rev).sum())


def policy_fisher_information(
    pi: PricingPolicy, ctx: ObjectiveContext, structure: FareStructure
) -> float:
    w = information_weights(ctx.phi_hat, ctx.nu, structure)
    return float(((ctx.past_offers + ctx.H * pi.probs) * w).sum())


def _terms(ctx: ObjectiveContext, structure: FareStructure):
    rev = ctx.H * revenue_curve(ctx.phi_hat, ctx.nu, structure)
    w = ctx.H * information_weights(ctx.phi_hat, ctx.nu, structure)
    base = float((ctx.past_offers * w).sum()) / ctx.H
    return rev, w, base, ctx.eta / ctx.phi_hat


def _value(p, rev, w, base, c):
    info = base + p @ w
    return p @ rev - c / math.sqrt(max(info, INFO_FLOOR))


def _gradient(p, rev, w, base, c):
    info = base + p @ w
    if info <= INFO_FLOOR:
        return rev.copy()
    return rev + 0.5 * c * info**-1.5 * w


def unified_objective(pi: PricingPolicy, ctx: ObjectiveContext, structure: FareStructure) -> float:
    rev, w, base, c = _terms(ctx, structure)
    return float(_value(pi.probs, rev, w, base, c))


def unified_gradient(pi, ctx: ObjectiveContext, structure: FareStructure) -> np.ndarray:
    """Gradient of the unified objective with respect to the raw probabilities."""
    p = pi.probs if isinstance(pi, PricingPolicy) else np.asarray(pi, dtype=float)
    rev, w, base, c = _terms(ctx, structure)
    return _gradient(p, rev, w, base, c)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def kkt_residual(p: np.ndarray, grad: np.ndarray) -> float:
    """Scale-free stationarity measure ``|p - P(p + g/|g|_inf)|_inf``; zero at a maximiser."""
    scale = np.abs(grad).max()
    if scale == 0:
        return 0.0
    return float(np.abs(p - project_simplex(p + grad / scale)).max())


def solve_unified(phi_hat, past_offers, nu: float, H: int, eta: float, structure: FareStructure):
    """Exact maximiser of the unified objective for a batch of contexts.

    ``phi_hat`` has shape ``(batch,)`` and ``past_offers`` ``(batch, n)``.
    Returns probabilities of shape ``(batch, n)``. With ``eta == 0`` the
    result is the greedy point mass.
    """
    phi_hat = np.atleast_1d(np.asarray(phi_hat, dtype=float))
    past = np.atleast_2d(np.asarray(past_offers, dtype=float))
    batch, n = past.shape
    greedy = greedy_index(phi_hat, structure)
    out = np.zeros((batch, n))
    out[np.arange(batch), greedy] = 1.0
    if eta == 0.0 or nu == 0.0:
        return out

    rev = H * revenue_curve(phi_hat, nu, structure)  # (B, n)
    w = H * information_weights(phi_hat, nu, structure)
    base = (past * w).sum(axis=-1) / H  # (B,)
    c = eta / phi_hat

    def value(r, s):
        return r - c[:, None] / np.sqrt(np.maximum(s, INFO_FLOOR))

    u_vert = value(rev, base[:, None] + w)
    best_v = np.argmax(u_vert, axis=1)
    best_u = u_vert[np.arange(batch), best_v]

    i, j = np.triu_indices(n, k=1)
    dr = rev[:, i] - rev[:, j]
    dw = w[:, i] - w[:, j]
    with np.errstate(divide="ignore", invalid="ignore"):
        # stationary point of U along t*e_i + (1-t)*e_j:
        # H dr + (c/2) dw s^{-3/2} = 0, s = base + w_j + t dw
        ratio = -c[:, None] * dw / (2.0 * dr)
        s_star = np.cbrt(ratio) ** 2
        t = (s_star - base[:, None] - w[:, j]) / dw
    valid = (ratio > 0) & np.isfinite(t)
    t = np.clip(np.where(valid, t, 0.0), 0.0, 1.0)
    u_edge = value(rev[:, j] + t * dr, base[:, None] + w[:, j] + t * dw)
    u_edge = np.where(valid, u_edge, -np.inf)
    best_e = np.argmax(u_edge, axis=1)
    edge_u = u_edge[np.arange(batch), best_e]

    margin = 1e-12 * np.maximum(1.0, np.abs(best_u))
    use_edge = edge_u > best_u + margin
    out[:] = 0.0
    out[np.arange(batch), best_v] = 1.0
    rows = np.flatnonzero(use_edge)
    if rows.size:
        te = t[rows, best_e[rows]]
        out[rows] = 0.0
        out[rows, i[best_e[rows]]] = te
        out[rows, j[best_e[rows]]] += 1.0 - te
    return out


def _projected_gradient(p0, rev, w, base, c, max_iter: int, tol: float):
    p = p0.copy()
    val = _value(p, rev, w, base, c)
    step = 1.0
    for it in range(max_iter):
        g = _gradient(p, rev, w, base, c)
        if kkt_residual(p, g) < tol:
            return p, val, True
        gscale = np.abs(g).max()
        step = min(step * 4.0, 1e6)
        while True:
            cand = project_simplex(p + (step / gscale) * g)
            cand_val = _value(cand, rev, w, base, c)
            if cand_val >= val + 1e-4 * (g @ (cand - p)):
                break
            step *= 0.5
            if step < 1e-14:
                return p, val, kkt_residual(p, g) < tol
        if np.abs(cand - p).max() < 1e-15:
            p, val = cand, cand_val
            break
        p, val = cand, cand_val
    g = _gradient(p, rev, w, base, c)
    return p, val, kkt_residual(p, g) < tol


def maximize_unified(
    ctx: ObjectiveContext,
    structure: FareStructure,
    method: str = "exact",
    max_iter: int = 500,
    tol: float = 1e-7,
) -> OptimizationResult:
    """Maximise the unified objective over the probability simplex.

    ``method="exact"`` uses the closed-form vertex/edge enumeration.
    ``method="projected_gradient"`` runs backtracking projected-gradient
    ascent from every vertex and from the uniform policy and keeps the best
    end point; if no start converges within ``max_iter`` iterations the best
    iterate is still returned, with ``converged=False`` and a
    :class:`ConvergenceWarning`.
    """
    rev, w, base, c = _terms(ctx, structure)
    n = structure.n
    if method == "exact":
        p = solve_unified(ctx.phi_hat, ctx.past_offers[None, :], ctx.nu, ctx.H, ctx.eta, structure)[0]
        converged = True
    elif method == "projected_gradient":
        starts = [np.eye(n)[k] for k in range(n)] + [np.full(n, 1.0 / n)]
        best = None
        for s in starts:
            res = _projected_gradient(s, rev, w, base, c, max_iter, tol)
            if best is None or res[1] > best[1]:
                best = res
        p, _, converged = best
        if not converged:
            warnings.warn("projected gradient did not converge", ConvergenceWarning, stacklevel=2)
    else:
        raise ValueError(f"unknown method {method!r}")
    g = _gradient(p, rev, w, base, c)
    return OptimizationResult(
        policy=PricingPolicy(p),
        value=float(_value(p, rev, w, base, c)),
        kkt_residual=kkt_residual(p, g),
        converged=converged,
        method=method,
    )


def greedy_policy(ctx: ObjectiveContext, structure: FareStructure) -> PricingPolicy:
    return PricingPolicy.point_mass(int(greedy_index(ctx.phi_hat, structure)), structure.n)


def random_policy(structure: FareStructure) -> PricingPolicy:
    return PricingPolicy(np.full(structure.n, 1.0 / structure.n))
