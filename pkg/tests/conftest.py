import numpy as np
import pytest

from ewl_pricing.booking_history import HistoryWindow, SellDateRecord
from ewl_pricing.fare_demand import FareStructure


@pytest.fixture
def ladder():
    return FareStructure.default()


def random_window(rng, H=22, n=10, length=None, nu=0.18, concentration=0.5, phi=None):
    """Window of ``length`` sell dates with H offers each, spread by a Dirichlet draw.

    Bookings follow the default ladder's demand curve when ``phi`` is given,
    otherwise every offer books at rate ``nu``.
    """
    rate = np.full(n, nu)
    if phi is not None:
        rate = nu * np.exp(-phi * FareStructure.default().ratio_excess[:n])
    window = HistoryWindow(H, n)
    length = H if length is None else length
    for t in range(length):
        offers = rng.multinomial(H, rng.dirichlet(np.full(n, concentration)))
        bookings = rng.poisson(offers * rate)
        window.append(SellDateRecord(t, offers, bookings))
    return window


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
