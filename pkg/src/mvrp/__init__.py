"""Solver toolkit for the Modular Vehicle Routing Problem (MVRP).

Vehicles may dock into platoons and split again at customer nodes; a platoon
of l vehicles pays d * l * (1 - eta*(l-1)) per arc of length d.  The package
provides exact cost arithmetic, a tabu-search solver, an exhaustive oracle
for tiny instances, an LP-format model exporter and a benchmark harness.
"""

from .cost import Cost, arc_cost, marginal_add_cost
from .instance import Instance, Metric, derive_instance, parse_cvrp, parse_instance, serialize_instance
from .oracle import BoundPair, brute_force_opt, theorem1_bounds
from .solution import Solution, drop_repeats, mv_routes, solution_from_json
from .validate import ValidationReport, validate

__version__ = "0.1.0"

__all__ = [
    "BoundPair",
    "Cost",
    "Instance",
    "Metric",
    "Solution",
    "ValidationReport",
    "arc_cost",
    "brute_force_opt",
    "derive_instance",
    "drop_repeats",
    "marginal_add_cost",
    "mv_routes",
    "parse_cvrp",
    "parse_instance",
    "serialize_instance",
    "solution_from_json",
    "theorem1_bounds",
    "validate",
]
