"""Exact fixed-point arithmetic for platoon travel costs.

All solver-facing costs are integers counted in units of 1/den where den is
the denominator of the cost-saving rate eta.  A platoon of l vehicles pays
d * l * (1 - eta*(l-1)) per arc of length d, which is an exact integer in
those units.  No float ever enters a comparison in the solver core.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import PlatoonTooLarge


def platoon_factor(l: int, eta_num: int, eta_den: int) -> int:
    """Scaled cost per unit distance for a platoon of l vehicles.

    Equals l*(1 - eta*(l-1)) expressed in 1/eta_den units.
    """
    return l * (eta_den - eta_num * (l - 1))


def marginal_factor(l: int, k: int, eta_num: int, eta_den: int) -> int:
    """Scaled extra cost per unit distance of growing a platoon from l to l+k."""
    return platoon_factor(l + k, eta_num, eta_den) - platoon_factor(l, eta_num, eta_den)


@dataclass(frozen=True)
class Cost:
    """Exact cost value: scaled/den.  Comparisons across denominators are exact."""

    scaled: int
    den: int = 10

    def __add__(self, other: "Cost") -> "Cost":
        self._require_same_den(other)
        return Cost(self.scaled + other.scaled, self.den)

    def __sub__(self, other: "Cost") -> "Cost":
        self._require_same_den(other)
        return Cost(self.scaled - other.scaled, self.den)

    def __neg__(self) -> "Cost":
        return Cost(-self.scaled, self.den)

    def _require_same_den(self, other: "Cost") -> None:
        if self.den != other.den:
            raise ValueError(f"cost denominators differ: {self.den} vs {other.den}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cost):
            return NotImplemented
        return self.scaled * other.den == other.scaled * self.den

    def __hash__(self) -> int:
        return hash(Fraction(self.scaled, self.den))

    def __lt__(self, other: "Cost") -> bool:
        return self.scaled * other.den < other.scaled * self.den

    def __le__(self, other: "Cost") -> bool:
        return self.scaled * other.den <= other.scaled * self.den

    def __gt__(self, other: "Cost") -> bool:
        return other < self

    def __ge__(self, other: "Cost") -> bool:
        return other <= self

    def as_fraction(self) -> Fraction:
        return Fraction(self.scaled, self.den)

    def __str__(self) -> str:
        return render_decimal(self.scaled, self.den)

    def __repr__(self) -> str:
        return f"Cost({self})"


def render_decimal(scaled: int, den: int) -> str:
    """Render scaled/den as an exact decimal string with at least one decimal.

    Falls back to a fraction string when den has prime factors other than 2
    and 5 (the value has no finite decimal expansion).
    """
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    rest = den
    digits = 0
    while rest % 2 == 0:
        rest //= 2
        digits += 1
    twos = digits
    rest5 = rest
    fives = 0
    while rest5 % 5 == 0:
        rest5 //= 5
        fives += 1
    if rest5 != 1:
        return f"{sign}{scaled}/{den}"
    digits = max(twos, fives, 1)
    value = scaled * (10**digits // den)
    whole, frac = divmod(value, 10**digits)
    return f"{sign}{whole}.{str(frac).zfill(digits)}"


def parse_decimal(text: str, den: int) -> Cost:
    """Parse a decimal (or a/b fraction) cost string into 1/den units, exactly."""
    value = Fraction(text)
    scaled = value * den
    if scaled.denominator != 1:
        raise ValueError(f"cost {text!r} is not representable in 1/{den} units")
    return Cost(int(scaled), den)


def arc_cost(d: int, l: int, eta_num: int, eta_den: int, max_platoon: int) -> Cost:
    """Exact cost for a platoon of l vehicles to traverse an arc of length d."""
    if d < 0:
        raise ValueError("negative arc length")
    if l < 1 or l > max_platoon:
        raise PlatoonTooLarge(f"platoon size {l} outside [1, {max_platoon}]")
    factor = platoon_factor(l, eta_num, eta_den)
    if factor <= 0:
        raise PlatoonTooLarge(f"platoon of {l} has non-positive cost factor")
    return Cost(d * factor, eta_den)


def marginal_add_cost(d: int, l: int, eta_num: int, eta_den: int, max_platoon: int) -> Cost:
    """Exact cost increase of adding one vehicle to a platoon of l on a length-d arc.

    Closed form d*(1 - 2*eta*l); equals arc_cost(d, l+1) - arc_cost(d, l).
    """
    if l < 1 or l >= max_platoon:
        raise PlatoonTooLarge(f"cannot grow a platoon of {l} under limit {max_platoon}")
    return arc_cost(d, l + 1, eta_num, eta_den, max_platoon) - arc_cost(d, l, eta_num, eta_den, max_platoon)
