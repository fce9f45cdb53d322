"""Shared test utilities: instance generators and independent mini-oracles."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import permutations

from mvrp import Instance
from mvrp.instance import Metric


def random_tiny(seed: int, n_max: int = 6, l_choices=(2, 3)) -> Instance:
    """Random desk-scale instance with fleet slack: demands fit K-1 vehicles,
    leaving one idle for relocation escapes, mirroring the default fleet
    sizing rule."""
    rng = random.Random(seed)
    n = rng.randint(3, n_max)
    max_platoon = rng.choice(l_choices)
    coords = [(0, 0)] + [(rng.randint(-15, 15), rng.randint(-15, 15)) for _ in range(n)]
    demands = [0] + [rng.randint(1, 9) for _ in range(n)]
    fleet = 3
    capacity = max(max(demands[1:]) * 2, -(-sum(demands) // (fleet - 1)))
    return Instance(
        f"tiny-{seed}",
        tuple(coords),
        tuple(demands),
        capacity=capacity,
        fleet_size=fleet,
        max_platoon=max_platoon,
        eta=Fraction(1, 10),
    )


def augerat_like_cvrp(seed: int, n_customers: int, capacity: int = 100) -> str:
    """Synthetic CVRP file in the Augerat style: uniform integer coordinates
    on a 100x100 grid and demands in 1..30."""
    rng = random.Random(seed)
    n = n_customers + 1
    lines = [
        f"NAME : X-n{n}-s{seed}",
        "COMMENT : synthetic benchmark base",
        "TYPE : CVRP",
        f"DIMENSION : {n}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {capacity}",
        "NODE_COORD_SECTION",
    ]
    for i in range(1, n + 1):
        lines.append(f" {i} {rng.randint(0, 100)} {rng.randint(0, 100)}")
    lines.append("DEMAND_SECTION")
    lines.append(" 1 0")
    for i in range(2, n + 1):
        lines.append(f" {i} {rng.randint(1, 30)}")
    lines += ["DEPOT_SECTION", " 1", " -1", "EOF", ""]
    return "\n".join(lines)


def augerat_like_instance(seed: int, n_customers: int, capacity: int = 100, max_platoon: int = 3) -> Instance:
    rng = random.Random(seed)
    coords = [(rng.randint(0, 100), rng.randint(0, 100)) for _ in range(n_customers + 1)]
    demands = [0] + [rng.randint(1, 30) for _ in range(n_customers)]
    fleet = -(-sum(demands) // capacity) + 2
    return Instance(
        f"A-{n_customers + 1}-{seed}",
        tuple(coords),
        tuple(demands),
        capacity=capacity,
        fleet_size=fleet,
        max_platoon=max_platoon,
        eta=Fraction(1, 10),
        metric=Metric.MANHATTAN,
    )


def micro_oracle(inst: Instance) -> int:
    """Straight-line exhaustive optimum, independent of the package solver.

    Enumerates a global visit order, each customer's visitor set and server,
    and costs consecutive-arc groups directly.  Exponential; use only for
    three or four customers.
    """
    customers = list(inst.customers)
    k = inst.fleet_size
    limit = min(inst.max_platoon, k)
    best = None

    def visitor_sets():
        from itertools import combinations

        for size in range(1, limit + 1):
            yield from combinations(range(k), size)

    vs_options = list(visitor_sets())

    def assign(order, idx, visitors, servers):
        nonlocal best
        if idx == len(order):
            loads = [0] * k
            ok = True
            for c in order:
                loads[servers[c]] += inst.demands[c]
                if loads[servers[c]] > inst.capacity:
                    ok = False
                    break
            if not ok:
                return
            last = [0] * k
            total = 0
            for c in order:
                arrivals = {}
                for m in visitors[c]:
                    arrivals.setdefault(last[m], 0)
                    arrivals[last[m]] += 1
                for u, cnt in arrivals.items():
                    total += inst.dist(u, c) * inst.factor(cnt)
                for m in visitors[c]:
                    last[m] = c
            returns = {}
            for m in range(k):
                if last[m] != 0:
                    returns.setdefault(last[m], 0)
                    returns[last[m]] += 1
            for u, cnt in returns.items():
                total += inst.dist(u, 0) * inst.factor(cnt)
            if best is None or total < best:
                best = total
            return
        c = order[idx]
        for vs in vs_options:
            visitors[c] = vs
            for server in vs:
                servers[c] = server
                assign(order, idx + 1, visitors, servers)

    for order in permutations(customers):
        assign(order, 0, {}, {})
    return best
