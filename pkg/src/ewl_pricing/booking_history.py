"""Rolling first-in first-out booking database.

Each sell date stores, per ladder index, how many times the fare was offered
across all active flights and how many bookings those offers produced. Only
the last ``capacity`` sell dates are retained.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np


class SequencingError(ValueError):
    """Raised when a record does not follow the newest sell date."""


@dataclass(frozen=True, eq=False)
class SellDateRecord:
    sell_date: int
    offers: np.ndarray
    bookings: np.ndarray

    def __post_init__(self) -> None:
        offers = np.array(self.offers, dtype=np.int64)
        bookings = np.array(self.bookings, dtype=np.int64)
        if offers.ndim != 1 or offers.shape != bookings.shape:
            raise ValueError("offers and bookings must be 1-d and the same length")
        if (offers < 0).any() or (bookings < 0).any():
            raise ValueError("counts must be non-negative")
        if (bookings[offers == 0] != 0).any():
            raise ValueError("bookings recorded for a fare that was not offered")
        offers.flags.writeable = False
        bookings.flags.writeable = False
        object.__setattr__(self, "offers", offers)
        object.__setattr__(self, "bookings", bookings)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SellDateRecord):
            return NotImplemented
        return (
            self.sell_date == other.sell_date
            and np.array_equal(self.offers, other.offers)
            and np.array_equal(self.bookings, other.bookings)
        )


class HistoryWindow:
    """FIFO window over the newest ``capacity`` sell dates."""

    def __init__(self, capacity: int, n_fares: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if n_fares < 1:
            raise ValueError("n_fares must be >= 1")
        self.capacity = capacity
        self.n_fares = n_fares
        self._records: deque[SellDateRecord] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[SellDateRecord]:
        return iter(self._records)

    @property
    def records(self) -> tuple[SellDateRecord, ...]:
        return tuple(self._records)

    @property
    def newest_sell_date(self) -> int | None:
        return self._records[-1].sell_date if self._records else None

    def append(self, record: SellDateRecord) -> "HistoryWindow":
        if record.offers.shape != (self.n_fares,):
            raise ValueError(
                f"record has {record.offers.shape[0]} fares, window expects {self.n_fares}"
            )
        newest = self.newest_sell_date
        if newest is not None and record.sell_date != newest + 1:
            raise SequencingError(
                f"expected sell date {newest + 1}, got {record.sell_date}"
            )
        self._records.append(record)
        return self

    def _check_k(self, last_k: int | None) -> int:
        if last_k is None:
            return len(self._records)
        if last_k < 0 or last_k > len(self._records):
            raise IndexError(f"last_k={last_k} outside 0..{len(self._records)}")
        return last_k

    def offer_totals(self, last_k: int | None = None) -> np.ndarray:
        """Per-fare offers summed over the newest ``last_k`` records (all by default)."""
        k = self._check_k(last_k)
        out = np.zeros(self.n_fares, dtype=np.int64)
        for rec in list(self._records)[len(self._records) - k:]:
            out += rec.offers
        return out

    def booking_totals(self, last_k: int | None = None) -> np.ndarray:
        k = self._check_k(last_k)
        out = np.zeros(self.n_fares, dtype=np.int64)
        for rec in list(self._records)[len(self._records) - k:]:
            out += rec.bookings
        return out

    def total_offers(self, fare_index: int, last_k: int | None = None) -> int:
        return int(self.offer_totals(last_k)[fare_index])

    def total_bookings(self, fare_index: int, last_k: int | None = None) -> int:
        return int(self.booking_totals(last_k)[fare_index])

    def copy(self) -> "HistoryWindow":
        clone = HistoryWindow(self.capacity, self.n_fares)
        clone._records.extend(self._records)
        return clone

    def write_csv(self, fh: TextIO) -> None:
        """Write ``sell_date,fare_index,offers,bookings`` rows, one per fare and date."""
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["sell_date", "fare_index", "offers", "bookings"])
        for rec in self._records:
            for i in range(self.n_fares):
                writer.writerow([rec.sell_date, i, int(rec.offers[i]), int(rec.bookings[i])])
