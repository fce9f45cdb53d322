"""Instance data model, file parsing and derivation, distance metrics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .cost import Cost, arc_cost, marginal_add_cost, platoon_factor
from .errors import (
    BadEta,
    DemandExceedsCapacity,
    DuplicateNodeId,
    InvariantViolation,
    MissingKeyword,
    ParseError,
    UnknownCustomer,
    UnknownKeyword,
)


class Metric(enum.Enum):
    MANHATTAN = "MANHATTAN"
    EUC_2D = "EUC_2D"


def distance(a: tuple[int, int], b: tuple[int, int], metric: Metric) -> int:
    """Integer distance between two points under the given metric."""
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    if metric is Metric.MANHATTAN:
        return abs(dx) + abs(dy)
    return round(math.sqrt(dx * dx + dy * dy))


@dataclass(frozen=True)
class Instance:
    """An MVRP instance.  Node 0 is the depot; the return depot 0' shares its
    coordinates, so d(x, 0') = d(x, 0).  Customers are numbered 1..N."""

    name: str
    coords: tuple[tuple[int, int], ...]  # index 0 = depot, 1..N = customers
    demands: tuple[int, ...]  # index 0 = 0
    capacity: int
    fleet_size: int
    max_platoon: int
    eta: Fraction
    metric: Metric = Metric.MANHATTAN
    _dist: list[list[int]] = field(init=False, repr=False, compare=False, hash=False)
    _factors: tuple[int, ...] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        n = len(self.coords) - 1
        if n < 1:
            raise InvariantViolation("instance needs at least one customer")
        if len(self.demands) != len(self.coords):
            raise InvariantViolation("coords and demands length mismatch")
        if self.demands[0] != 0:
            raise InvariantViolation("depot demand must be 0")
        if self.capacity <= 0 or self.fleet_size <= 0 or self.max_platoon < 1:
            raise InvariantViolation("capacity, fleet size and platoon limit must be positive")
        if any(q < 0 for q in self.demands):
            raise InvariantViolation("negative demand")
        if any(q > self.capacity for q in self.demands[1:]):
            raise DemandExceedsCapacity(
                f"demand {max(self.demands[1:])} exceeds capacity {self.capacity}"
            )
        if sum(self.demands) > self.fleet_size * self.capacity:
            raise InvariantViolation("total demand exceeds fleet capacity")
        if self.eta < 0 or self.eta * (self.max_platoon - 1) >= 1:
            raise BadEta(f"eta={self.eta} incompatible with max platoon {self.max_platoon}")
        matrix = [
            [distance(a, b, self.metric) for b in self.coords] for a in self.coords
        ]
        object.__setattr__(self, "_dist", matrix)
        num, den = self.eta.numerator, self.eta.denominator
        table = tuple(
            platoon_factor(l, num, den)
            for l in range(0, max(self.max_platoon, self.fleet_size) + 2)
        )
        object.__setattr__(self, "_factors", table)

    # -- basic accessors -------------------------------------------------

    @property
    def n_customers(self) -> int:
        return len(self.coords) - 1

    @property
    def customers(self) -> range:
        return range(1, len(self.coords))

    @property
    def eta_num(self) -> int:
        return self.eta.numerator

    @property
    def eta_den(self) -> int:
        return self.eta.denominator

    @property
    def cost_den(self) -> int:
        return self.eta.denominator

    def dist(self, a: int, b: int) -> int:
        """Distance between node ids; ids may be -1 for the return depot 0'."""
        return self._dist[a if a >= 0 else 0][b if b >= 0 else 0]

    def zero_cost(self) -> Cost:
        return Cost(0, self.cost_den)

    def factor(self, l: int) -> int:
        if l < len(self._factors):
            return self._factors[l]
        return platoon_factor(l, self.eta.numerator, self.eta.denominator)

    def arc_cost(self, d: int, l: int) -> Cost:
        return arc_cost(d, l, self.eta_num, self.eta_den, self.max_platoon)

    def marginal_add_cost(self, d: int, l: int) -> Cost:
        return marginal_add_cost(d, l, self.eta_num, self.eta_den, self.max_platoon)


def default_fleet_size(demands, capacity: int) -> int:
    """Fleet size guess when a file omits FLEET_SIZE: enough vehicles to cover
    total demand plus slack for platooning."""
    total = sum(demands)
    return max(1, -(-total // capacity) + 2)


_REQUIRED = ("NAME", "TYPE", "DIMENSION", "METRIC", "CAPACITY", "MAX_PLATOON", "ETA")
_KEYWORDS = _REQUIRED + ("COMMENT", "FLEET_SIZE")
_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION", "EOF")


def _parse_int(text: str, what: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad {what}: {text!r}") from None
    if value != int(value):
        raise ParseError(f"{what} must be an integer, got {text!r}")
    return int(value)


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented MVRP instance format."""
    keywords: dict[str, str] = {}
    coords: dict[int, tuple[int, int]] = {}
    demands: dict[int, int] = {}
    depot_ids: list[int] = []
    section = None
    saw_eof = False

    for raw in text.splitlines():
        line = raw.strip()
        if not line or saw_eof:
            continue
        bare = line.upper()
        if bare == "EOF":
            saw_eof = True
            section = None
            continue
        if bare in _SECTIONS:
            section = bare
            continue
        if ":" in line:
            key = line.split(":", 1)[0].strip().upper()
            if key in _KEYWORDS:
                section = None
                keywords[key] = line.split(":", 1)[1].strip()
                continue
            raise UnknownKeyword(f"unknown keyword: {line!r}")
        if section == "NODE_COORD_SECTION":
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"bad coordinate line: {line!r}")
            nid = _parse_int(parts[0], "node id")
            if nid in coords:
                raise DuplicateNodeId(f"node {nid} listed twice")
            coords[nid] = (_parse_int(parts[1], "x"), _parse_int(parts[2], "y"))
            continue
        if section == "DEMAND_SECTION":
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"bad demand line: {line!r}")
            nid = _parse_int(parts[0], "node id")
            if nid in demands:
                raise DuplicateNodeId(f"demand for node {nid} listed twice")
            demands[nid] = _parse_int(parts[1], "demand")
            continue
        if section == "DEPOT_SECTION":
            depot_ids.append(_parse_int(line, "depot id"))
            continue
        raise UnknownKeyword(f"unexpected line: {line!r}")

    if not saw_eof:
        raise MissingKeyword("missing EOF")
    for key in _REQUIRED:
        if key not in keywords:
            raise MissingKeyword(f"missing keyword {key}")
    if keywords["TYPE"].upper() != "MVRP":
        raise ParseError(f"TYPE must be MVRP, got {keywords['TYPE']!r}")
    try:
        metric = Metric(keywords["METRIC"].upper())
    except ValueError:
        raise ParseError(f"unknown METRIC {keywords['METRIC']!r}") from None

    dimension = _parse_int(keywords["DIMENSION"], "DIMENSION")
    n = dimension - 1
    if set(coords) != set(range(dimension)):
        raise ParseError("node ids must be 0..DIMENSION-1 with no gaps")
    if set(demands) - set(coords):
        raise ParseError("demand for unknown node")
    if any(i not in demands for i in range(1, dimension)):
        raise MissingKeyword("missing customer demand entries")
    if demands.get(0, 0) != 0:
        raise ParseError("depot demand must be 0")
    if depot_ids != [0, -1]:
        raise ParseError("DEPOT_SECTION must list depot 0 then -1")

    capacity = _parse_int(keywords["CAPACITY"], "CAPACITY")
    max_platoon = _parse_int(keywords["MAX_PLATOON"], "MAX_PLATOON")
    try:
        eta = Fraction(keywords["ETA"])
    except (ValueError, ZeroDivisionError):
        raise BadEta(f"unparseable ETA {keywords['ETA']!r}") from None
    if eta < 0 or eta * (max_platoon - 1) >= 1:
        raise BadEta(f"eta={eta} incompatible with MAX_PLATOON {max_platoon}")

    demand_list = tuple(demands.get(i, 0) for i in range(dimension))
    if "FLEET_SIZE" in keywords:
        fleet = _parse_int(keywords["FLEET_SIZE"], "FLEET_SIZE")
    else:
        fleet = default_fleet_size(demand_list, capacity)

    return Instance(
        name=keywords["NAME"],
        coords=tuple(coords[i] for i in range(dimension)),
        demands=demand_list,
        capacity=capacity,
        fleet_size=fleet,
        max_platoon=max_platoon,
        eta=eta,
        metric=metric,
    )


def serialize_instance(inst: Instance) -> str:
    """Render an instance in the same format parse_instance reads."""
    eta = inst.eta
    num, den = eta.numerator, eta.denominator
    rest = den
    for p in (2, 5):
        while rest % p == 0:
            rest //= p
    eta_text = str(Cost(num, den)) if rest == 1 else f"{num}/{den}"
    lines = [
        f"NAME : {inst.name}",
        "TYPE : MVRP",
        f"DIMENSION : {inst.n_customers + 1}",
        f"METRIC : {inst.metric.value}",
        f"CAPACITY : {inst.capacity}",
        f"FLEET_SIZE : {inst.fleet_size}",
        f"MAX_PLATOON : {inst.max_platoon}",
        f"ETA : {eta_text}",
        "NODE_COORD_SECTION",
    ]
    lines += [f" {i} {x} {y}" for i, (x, y) in enumerate(inst.coords)]
    lines.append("DEMAND_SECTION")
    lines += [f" {i} {q}" for i, q in enumerate(inst.demands) if i > 0]
    lines += ["DEPOT_SECTION", " 0", " -1", "EOF", ""]
    return "\n".join(lines)


def derive_instance(
    base: Instance,
    keep: list[int],
    capacity: int | None = None,
    max_platoon: int | None = None,
    eta: Fraction | None = None,
    fleet_size: int | None = None,
    metric: Metric | None = None,
    name: str | None = None,
) -> Instance:
    """Sub-instance with the kept customers renumbered 1..len(keep) in their
    original relative order; the depot is unchanged."""
    seen = set()
    for c in keep:
        if c not in base.customers:
            raise UnknownCustomer(f"customer {c} not in base instance")
        if c in seen:
            raise UnknownCustomer(f"customer {c} kept twice")
        seen.add(c)
    ordered = [c for c in base.customers if c in seen]
    coords = (base.coords[0],) + tuple(base.coords[c] for c in ordered)
    demands = (0,) + tuple(base.demands[c] for c in ordered)
    capacity = base.capacity if capacity is None else capacity
    if fleet_size is None:
        fleet_size = default_fleet_size(demands, capacity)
    try:
        return Instance(
            name=name or f"{base.name}-derived-{len(ordered)}",
            coords=coords,
            demands=demands,
            capacity=capacity,
            fleet_size=fleet_size,
            max_platoon=base.max_platoon if max_platoon is None else max_platoon,
            eta=base.eta if eta is None else eta,
            metric=base.metric if metric is None else metric,
        )
    except (DemandExceedsCapacity, BadEta) as exc:
        raise InvariantViolation(str(exc)) from exc


def parse_cvrp(text: str) -> Instance:
    """Parse a TSPLIB-style CVRP file (Augerat sets) into an Instance.

    The depot becomes node 0 and customers are renumbered 1..N in file order.
    Platoon parameters get placeholder defaults (L=1, eta=0); callers derive a
    real MVRP instance from the result.
    """
    name = "cvrp"
    dimension = None
    capacity = None
    coords: dict[int, tuple[int, int]] = {}
    demands: dict[int, int] = {}
    depot = None
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        head = line.split(":")[0].strip().upper()
        if head == "NAME":
            name = line.split(":", 1)[1].strip()
            continue
        if head == "DIMENSION":
            dimension = _parse_int(line.split(":", 1)[1].strip(), "DIMENSION")
            continue
        if head == "CAPACITY":
            capacity = _parse_int(line.split(":", 1)[1].strip(), "CAPACITY")
            continue
        if head in ("TYPE", "COMMENT", "EDGE_WEIGHT_TYPE"):
            continue
        if line.upper() in ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION"):
            section = line.upper()
            continue
        if line.upper() == "EOF":
            break
        if section == "NODE_COORD_SECTION":
            parts = line.split()
            nid = _parse_int(parts[0], "node id")
            if nid in coords:
                raise DuplicateNodeId(f"node {nid} listed twice")
            coords[nid] = (_parse_int(parts[1], "x"), _parse_int(parts[2], "y"))
        elif section == "DEMAND_SECTION":
            parts = line.split()
            demands[_parse_int(parts[0], "node id")] = _parse_int(parts[1], "demand")
        elif section == "DEPOT_SECTION":
            val = _parse_int(line, "depot id")
            if val != -1 and depot is None:
                depot = val
    if dimension is None or capacity is None or not coords:
        raise MissingKeyword("CVRP file missing DIMENSION, CAPACITY or coordinates")
    if depot is None:
        depot = min(coords)
    order = [i for i in sorted(coords) if i != depot]
    coord_list = (coords[depot],) + tuple(coords[i] for i in order)
    demand_list = (0,) + tuple(demands.get(i, 0) for i in order)
    return Instance(
        name=name,
        coords=coord_list,
        demands=demand_list,
        capacity=capacity,
        fleet_size=default_fleet_size(demand_list, capacity),
        max_platoon=1,
        eta=Fraction(0),
        metric=Metric.EUC_2D,
    )
