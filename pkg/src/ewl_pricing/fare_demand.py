"""Negative exponential demand on a discrete fare ladder.

The expected number of bookings per offer at fare ``f`` is

    d(f; nu, phi) = nu * exp(-phi * (f / f0 - 1))

where ``f0`` is the base (lowest) fare. ``phi`` is usually quoted through the
frat5 ratio ``F5 = 1 + ln(2) / phi``: the fare multiple of ``f0`` at which half
of the arriving customers still buy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LN2 = math.log(2.0)


class InvalidFareError(ValueError):
    """Raised when a fare is not a point of the ladder."""


def phi_from_frat5(frat5: float) -> float:
    """Price sensitivity for a given frat5 ratio (must exceed 1)."""
    if not frat5 > 1.0:
        raise ValueError(f"frat5 must be > 1, got {frat5!r}")
    return LN2 / (frat5 - 1.0)


def frat5_from_phi(phi: float) -> float:
    if not phi > 0.0:
        raise ValueError(f"phi must be > 0, got {phi!r}")
    return 1.0 + LN2 / phi


def _to_cents(value: float) -> int:
    cents = round(float(value) * 100)
    if abs(cents - float(value) * 100) > 1e-6:
        raise ValueError(f"fare {value!r} is not a whole number of cents")
    return int(cents)


@dataclass(frozen=True)
class FareStructure:
    """Strictly increasing ladder of fares; the first one is the base fare.

    Fares are kept as integer cents so that CSV output never drifts.
    """

    cents: tuple[int, ...]

    def __post_init__(self) -> None:
        cents = tuple(int(c) for c in self.cents)
        object.__setattr__(self, "cents", cents)
        if len(cents) < 2:
            raise ValueError("a fare ladder needs at least two price points")
        if cents[0] <= 0:
            raise ValueError("the base fare must be positive")
        if any(b <= a for a, b in zip(cents, cents[1:])):
            raise ValueError("fares must be strictly increasing")

    @classmethod
    def from_fares(cls, fares: Sequence[float]) -> "FareStructure":
        return cls(tuple(_to_cents(f) for f in fares))

    @classmethod
    def default(cls) -> "FareStructure":
        """The $50, $70, ..., $230 ladder (10 price points)."""
        return cls(tuple(range(5000, 23001, 2000)))

    @property
    def n(self) -> int:
        return len(self.cents)

    @property
    def fares(self) -> np.ndarray:
        return np.asarray(self.cents, dtype=float) / 100.0

    @property
    def base_fare(self) -> float:
        return self.cents[0] / 100.0

    @property
    def ratio_excess(self) -> np.ndarray:
        """``f / f0 - 1`` for every ladder fare."""
        return np.asarray(self.cents, dtype=float) / self.cents[0] - 1.0

    def index_of(self, fare: float) -> int:
        try:
            return self.cents.index(_to_cents(fare))
        except ValueError:
            raise InvalidFareError(f"fare {fare!r} is not on the ladder") from None


@dataclass(frozen=True)
class DemandParams:
    """Arrival rate per flight and sell date plus price sensitivity."""

    nu: float
    phi: float
    frat5: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.nu >= 0.0:
            raise ValueError(f"nu must be >= 0, got {self.nu!r}")
        object.__setattr__(self, "frat5", frat5_from_phi(self.phi))

    @classmethod
    def from_frat5(cls, nu: float, frat5: float) -> "DemandParams":
        return cls(nu=nu, phi=phi_from_frat5(frat5))


def demand_curve(phi, nu: float, structure: FareStructure) -> np.ndarray:
    """Expected bookings per offer at every ladder fare.

    ``phi`` may be an array; the fare axis is appended as the last dimension.
    """
    phi = np.asarray(phi, dtype=float)
    return nu * np.exp(-phi[..., None] * structure.ratio_excess)


def expected_bookings(fare: float, params: DemandParams, structure: FareStructure) -> float:
    i = structure.index_of(fare)
    return params.nu * math.exp(-params.phi * structure.ratio_excess[i])


def expected_revenue_per_offer(
    fare: float, params: DemandParams, structure: FareStructure
) -> float:
    return structure.fares[structure.index_of(fare)] * expected_bookings(fare, params, structure)


def revenue_curve(phi, nu: float, structure: FareStructure) -> np.ndarray:
    """``f * d(f)`` for every ladder fare."""
    return structure.fares * demand_curve(phi, nu, structure)


def greedy_index(phi, structure: FareStructure) -> np.ndarray:
    """Ladder index of the revenue-maximising fare; ties go to the lower fare.

    ``nu`` scales every fare's revenue equally, so it does not enter.
    """
    return np.argmax(revenue_curve(phi, 1.0, structure), axis=-1)


def greedy_fare(params: DemandParams, structure: FareStructure) -> float:
    if params.nu == 0.0:
        # every fare earns nothing; the lowest one wins the tie
        return structure.base_fare
    return float(structure.fares[int(greedy_index(params.phi, structure))])
