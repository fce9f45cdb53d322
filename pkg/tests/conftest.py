import pytest

from fractions import Fraction

from mvrp import Instance


@pytest.fixture
def t1():
    """Two symmetric opposite customers; platooning never pays off."""
    return Instance(
        "T1",
        ((0, 0), (1, 0), (-1, 0)),
        (0, 1, 1),
        capacity=1,
        fleet_size=2,
        max_platoon=2,
        eta=Fraction(1, 10),
    )


@pytest.fixture
def t2():
    """Two customers on a ray; sharing the first leg saves 1.0."""
    return Instance(
        "T2",
        ((0, 0), (5, 0), (6, 0)),
        (0, 1, 1),
        capacity=1,
        fleet_size=2,
        max_platoon=2,
        eta=Fraction(1, 10),
    )


@pytest.fixture
def t2_q2():
    """T2 geometry with capacity 2: one vehicle can serve both customers."""
    return Instance(
        "T2Q2",
        ((0, 0), (5, 0), (6, 0)),
        (0, 1, 1),
        capacity=2,
        fleet_size=2,
        max_platoon=2,
        eta=Fraction(1, 10),
    )
