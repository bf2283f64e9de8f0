"""Maximum-likelihood estimation of the price sensitivity.

Bookings per offer are Poisson with mean ``d(f)``, so over a window of sell
dates the log-likelihood is

    LL(phi) = sum_f sum_tau [ b(tau, f) ln d(f) - o(tau, f) d(f) ]

and the Fisher information is ``I(phi) = sum o(tau, f) d(f) (f/f0 - 1)^2``.
The arrival rate ``nu`` is treated as known; only ``phi`` is fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .booking_history import HistoryWindow
from .fare_demand import FareStructure, demand_curve, frat5_from_phi, phi_from_frat5

DEFAULT_CLAMP = (1.5, 4.3)
GRID_POINTS = 256
PHI_TOL = 1e-8

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EstimationResult:
    phi_hat: float
    frat5_hat: float
    fisher_info: float
    sigma: float
    clamped: bool
    degenerate: bool = False


def phi_bounds(clamp: tuple[float, float]) -> tuple[float, float]:
    """Map a ``(frat5_min, frat5_max)`` guardrail to ``(phi_min, phi_max)``."""
    f5_min, f5_max = clamp
    if f5_max < f5_min:
        raise ValueError(f"clamp interval is reversed: {clamp!r}")
    return phi_from_frat5(f5_max), phi_from_frat5(f5_min)


def midpoint_phi(clamp: tuple[float, float]) -> float:
    """Fallback estimate used when the likelihood carries no information."""
    return phi_from_frat5(0.5 * (clamp[0] + clamp[1]))


def log_likelihood_from_totals(phi, offers, bookings, nu: float, structure: FareStructure):
    """Log-likelihood from per-fare window totals; broadcasts over leading axes."""
    offers = np.asarray(offers, dtype=float)
    bookings = np.asarray(bookings, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x = structure.ratio_excess
    d = demand_curve(phi, nu, structure)
    n_book = bookings.sum(axis=-1)
    if nu > 0.0:
        log_nu_term = n_book * math.log(nu)
    else:
        log_nu_term = np.where(n_book > 0, -np.inf, 0.0)
    return log_nu_term - phi * (bookings * x).sum(axis=-1) - (offers * d).sum(axis=-1)


def score_from_totals(phi, offers, bookings, nu: float, structure: FareStructure):
    """Derivative of the log-likelihood with respect to ``phi``."""
    offers = np.asarray(offers, dtype=float)
    bookings = np.asarray(bookings, dtype=float)
    x = structure.ratio_excess
    d = demand_curve(phi, nu, structure)
    return -(bookings * x).sum(axis=-1) + (offers * d * x).sum(axis=-1)


def log_likelihood(window: HistoryWindow, phi: float, nu: float, structure: FareStructure) -> float:
    if not phi > 0.0:
        raise ValueError("phi must be > 0")
    return float(
        log_likelihood_from_totals(
            phi, window.offer_totals(), window.booking_totals(), nu, structure
        )
    )


def estimate_phi_from_totals(
    offers,
    bookings,
    nu: float,
    structure: FareStructure,
    clamp: tuple[float, float] = DEFAULT_CLAMP,
):
    """Vectorised MLE of ``phi`` over a batch of windows.

    ``offers`` and ``bookings`` have shape ``(batch, n)``. Returns arrays
    ``(phi_hat, clamped, degenerate)`` of shape ``(batch,)``.

    The log-likelihood is concave in ``phi``, so a bound is the maximiser
    exactly when the score does not point back into the interval. Interior
    maxima are located on a log-spaced grid and then refined by golden
    section until the bracket is narrower than ``PHI_TOL``. Each row is
    refined independently, so results do not depend on batch composition.
    """
    offers = np.atleast_2d(np.asarray(offers, dtype=float))
    bookings = np.atleast_2d(np.asarray(bookings, dtype=float))
    batch = offers.shape[0]
    lo, hi = phi_bounds(clamp)
    x = structure.ratio_excess

    degenerate = ((offers * x).sum(axis=-1) == 0.0) | (nu == 0.0)
    phi_hat = np.full(batch, midpoint_phi(clamp))
    clamped = np.zeros(batch, dtype=bool)
    if lo == hi:
        return np.full(batch, lo), ~degenerate, degenerate

    live = ~degenerate
    at_hi = live & (score_from_totals(hi, offers, bookings, nu, structure) >= 0.0)
    at_lo = live & ~at_hi & (score_from_totals(lo, offers, bookings, nu, structure) <= 0.0)
    phi_hat[at_hi] = hi
    phi_hat[at_lo] = lo
    clamped |= at_hi | at_lo

    inner = np.flatnonzero(live & ~clamped)
    if inner.size:
        phi_hat[inner] = _refine(offers[inner], bookings[inner], nu, structure, lo, hi)
    return phi_hat, clamped, degenerate


def _refine(offers, bookings, nu, structure, lo, hi):
    grid = np.geomspace(lo, hi, GRID_POINTS)
    d_grid = demand_curve(grid, nu, structure)  # (G, n)
    x = structure.ratio_excess
    # constant log(nu) term dropped: it does not move the argmax
    ll = -grid[None, :] * (bookings * x).sum(axis=-1)[:, None] - (
        offers[:, None, :] * d_grid[None, :, :]
    ).sum(axis=-1)
    k = np.argmax(ll, axis=1)
    a = grid[np.maximum(k - 1, 0)]
    b = grid[np.minimum(k + 1, GRID_POINTS - 1)]

    def f(phi):
        d = nu * np.exp(-phi[:, None] * x)
        return -phi * (bookings * x).sum(axis=-1) - (offers * d).sum(axis=-1)

    steps = np.ceil(np.log(np.maximum((b - a) / PHI_TOL, 1.0)) / -math.log(_INV_GOLDEN))
    steps = steps.astype(int)
    c = b - _INV_GOLDEN * (b - a)
    e = a + _INV_GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    for it in range(int(steps.max(initial=0))):
        active = it < steps
        left = active & (fc >= fe)  # maximum lies in [a, e]
        right = active & ~left
        b = np.where(left, e, b)
        a = np.where(right, c, a)
        new_c = np.where(left, b - _INV_GOLDEN * (b - a), e)
        new_e = np.where(left, c, a + _INV_GOLDEN * (b - a))
        fc_keep, fe_keep = fc, fe
        c, e = np.where(active, new_c, c), np.where(active, new_e, e)
        probe = np.where(left, c, e)
        fp = f(probe)
        fc = np.where(left, fp, np.where(right, fe_keep, fc_keep))
        fe = np.where(left, fc_keep, np.where(right, fp, fe_keep))
    return 0.5 * (a + b)


def fisher_information_from_totals(phi, offers, nu: float, structure: FareStructure):
    offers = np.asarray(offers, dtype=float)
    return (offers * information_weights(phi, nu, structure)).sum(axis=-1)


def information_weights(phi, nu: float, structure: FareStructure) -> np.ndarray:
    """Information carried by one offer at each fare: ``d(f) (f/f0 - 1)^2``."""
    return demand_curve(phi, nu, structure) * structure.ratio_excess**2


def fisher_information(
    window: HistoryWindow,
    phi: float,
    nu: float,
    structure: FareStructure,
    extra_offers=None,
    last_k: int | None = None,
) -> float:
    """Fisher information of the window, optionally topped up with expected offers."""
    if not phi > 0.0:
        raise ValueError("phi must be > 0")
    offers = window.offer_totals(last_k).astype(float)
    if extra_offers is not None:
        extra = np.asarray(extra_offers, dtype=float)
        if (extra < 0).any():
            raise ValueError("extra_offers must be non-negative")
        offers = offers + extra
    return float(fisher_information_from_totals(phi, offers, nu, structure))


def sigma_bound(fisher_info: float) -> float:
    """Cramer-Rao lower bound on the standard deviation of ``phi_hat``."""
    if fisher_info < 0:
        raise ValueError("Fisher information cannot be negative")
    if fisher_info == 0:
        return math.inf
    return 1.0 / math.sqrt(fisher_info)


def estimate_phi(
    window: HistoryWindow,
    nu: float,
    structure: FareStructure,
    clamp: tuple[float, float] = DEFAULT_CLAMP,
) -> EstimationResult:
    phi, clamped, degenerate = estimate_phi_from_totals(
        window.offer_totals()[None, :],
        window.booking_totals()[None, :],
        nu,
        structure,
        clamp,
    )
    phi_hat = float(phi[0])
    info = fisher_information(window, phi_hat, nu, structure)
    return EstimationResult(
        phi_hat=phi_hat,
        frat5_hat=frat5_from_phi(phi_hat),
        fisher_info=info,
        sigma=sigma_bound(info),
        clamped=bool(clamped[0]),
        degenerate=bool(degenerate[0]),
    )
