"""Exhaustive ground truth for desk-scale instances, plus the VRP-based bounds.

The optimizer enumerates the full representable solution space via a dynamic
program over visit orders.  Key facts making this complete:

* Co-located vehicles are docked, so every customer node has one platoon,
  the set of vehicles whose route passes it (at most the platoon limit).
* Every segment precedence graph is acyclic, so some global customer order
  exists of which each vehicle's route is a subsequence.

The DP therefore visits customers one at a time in all possible orders,
choosing for each its visitor set and serving vehicle.  States collapse on
(visited set, per-vehicle last node), with Pareto pruning over loads/cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .cost import Cost
from .errors import BadEta, InfeasibleInstance, InstanceTooLarge
from .instance import Instance
from .solution import Segment, Solution

MAX_ORACLE_CUSTOMERS = 8
MAX_ORACLE_FLEET = 3


@dataclass(frozen=True)
class BoundPair:
    """Cost window for the platooned optimum given the plain-VRP optimum."""

    lower: Cost  # exclusive
    upper: Cost  # inclusive
    c_min: Fraction
    c_max: Fraction

    def contains(self, cost: Cost) -> bool:
        return self.lower < cost <= self.upper


def theorem1_bounds(vrp_cost: Cost, eta: Fraction, max_platoon: int) -> BoundPair:
    """Window (c_min/c_max * vrp, vrp] that must contain the platooned optimum."""
    if eta < 0 or eta * (max_platoon - 1) >= 1:
        raise BadEta(f"eta={eta} incompatible with max platoon {max_platoon}")
    c_max = Fraction(1)
    c_min = 1 - eta * (max_platoon - 1)
    ratio = c_min / c_max
    lower = Cost(vrp_cost.scaled * ratio.numerator, vrp_cost.den * ratio.denominator)
    return BoundPair(lower=lower, upper=vrp_cost, c_min=c_min, c_max=c_max)


def _greedy_upper_bound(inst: Instance) -> int:
    """Scaled cost of a feasible platoon-free solution: savings merges over
    single-customer routes, then nearest-neighbor ordering.  Used only to
    prune the exact search; any feasible cost is a sound bound."""
    f1 = inst.factor(1)
    routes: dict[int, list[int]] = {c: [c] for c in inst.customers}
    loads = {c: inst.demands[c] for c in inst.customers}
    owner = {c: c for c in inst.customers}

    def route_cost(route: list[int]) -> int:
        total = inst.dist(0, route[0])
        for a, b in zip(route, route[1:]):
            total += inst.dist(a, b)
        return total + inst.dist(route[-1], 0)

    savings = []
    for a in inst.customers:
        for b in inst.customers:
            if a != b:
                s = inst.dist(0, a) + inst.dist(0, b) - inst.dist(a, b)
                savings.append((-s, a, b))
    savings.sort()
    for _neg, a, b in savings:
        ra, rb = owner[a], owner[b]
        if ra == rb or loads[ra] + loads[rb] > inst.capacity:
            continue
        if routes[ra][-1] != a or routes[rb][0] != b:
            continue
        routes[ra].extend(routes[rb])
        loads[ra] += loads[rb]
        for c in routes[rb]:
            owner[c] = ra
        del routes[rb], loads[rb]
    if len(routes) > inst.fleet_size:
        # fold smallest routes together regardless of savings where possible
        while len(routes) > inst.fleet_size:
            ids = sorted(routes, key=lambda r: loads[r])
            merged = False
            for i in range(len(ids)):
                for j in range(len(ids)):
                    if i != j and loads[ids[i]] + loads[ids[j]] <= inst.capacity:
                        routes[ids[i]].extend(routes[ids[j]])
                        loads[ids[i]] += loads[ids[j]]
                        del routes[ids[j]], loads[ids[j]]
                        merged = True
                        break
                if merged:
                    break
            if not merged:
                return 1 << 60
    return sum(route_cost(r) for r in routes.values()) * f1


def brute_force_opt(inst: Instance, max_platoon: int | None = None) -> tuple[Solution, Cost]:
    """Provably minimum-cost solution for a tiny instance.

    max_platoon overrides the instance's limit (useful for sweeping L).
    """
    n = inst.n_customers
    k = inst.fleet_size
    if n > MAX_ORACLE_CUSTOMERS or k > MAX_ORACLE_FLEET:
        raise InstanceTooLarge(
            f"oracle guard: N={n} (max {MAX_ORACLE_CUSTOMERS}), K={k} (max {MAX_ORACLE_FLEET})"
        )
    limit = inst.max_platoon if max_platoon is None else max_platoon
    if limit < 1 or inst.eta * (limit - 1) >= 1:
        raise BadEta(f"eta={inst.eta} incompatible with platoon limit {limit}")
    factors = [0] + [inst.factor(l) for l in range(1, min(limit, k) + 1)]
    demands = inst.demands
    dist = inst._dist
    capacity = inst.capacity
    customers = list(inst.customers)
    full = (1 << n) - 1

    # visitor sets by size, as tuples of vehicle indices
    visitor_sets = [
        tuple(sorted(vs))
        for size in range(1, min(limit, k) + 1)
        for vs in combinations(range(k), size)
    ]

    ub = _greedy_upper_bound(inst)
    min_factor = min(factors[1:])
    # admissible per-customer arrival bound: some group must reach it
    arrival_lb = {
        c: min(dist[u][c] for u in range(n + 1) if u != c) * min_factor
        for c in customers
    }
    lb_cache: dict[int, int] = {full: 0}

    def lb_remaining(mask: int) -> int:
        cached = lb_cache.get(mask)
        if cached is None:
            cached = sum(
                arrival_lb[c] for i, c in enumerate(customers) if not mask & (1 << i)
            )
            lb_cache[mask] = cached
        return cached

    def rest_demand(mask: int) -> int:
        return sum(demands[c] for i, c in enumerate(customers) if not mask & (1 << i))

    def solve(threshold: int):
        """Layered DP; states whose optimistic completion exceeds the
        threshold are pruned, so a result within it is provably optimal."""
        start_lasts = (0,) * k
        start_loads = (0,) * k
        layers: list[dict] = [dict() for _ in range(n + 1)]
        layers[0][(0, start_lasts)] = [(start_loads, 0, None)]
        for depth in range(n):
            layer = layers[depth]
            nxt_layer = layers[depth + 1]
            for (mask, lasts), front in sorted(layer.items()):
                base_lb = lb_remaining(mask)
                need = rest_demand(mask)
                first_inactive = None
                for i in range(k):
                    if lasts[i] == 0:
                        first_inactive = i
                        break
                for loads, cost, _parent in front:
                    if cost + base_lb > threshold:
                        continue
                    if need > k * capacity - sum(loads):
                        continue
                    for i, c in enumerate(customers):
                        bit = 1 << i
                        if mask & bit:
                            continue
                        q = demands[c]
                        drow = dist[c]
                        tail_lb = base_lb - arrival_lb[c]
                        for vs in visitor_sets:
                            # identical idle vehicles: activate in id order only
                            ok = True
                            expect = first_inactive
                            move = 0
                            last_u = -1
                            cnt = 0
                            for m in vs:
                                u = lasts[m]
                                if u == 0:
                                    if m != expect:
                                        ok = False
                                        break
                                    expect += 1
                                if u != last_u:
                                    if cnt:
                                        move += drow[last_u] * factors[cnt]
                                    last_u = u
                                    cnt = 1
                                else:
                                    cnt += 1
                            if not ok:
                                continue
                            if cnt:
                                move += drow[last_u] * factors[cnt]
                            new_cost = cost + move
                            if new_cost + tail_lb > threshold:
                                continue
                            new_lasts = list(lasts)
                            for m in vs:
                                new_lasts[m] = c
                            new_lasts = tuple(new_lasts)
                            new_mask = mask | bit
                            key = (new_mask, new_lasts)
                            for server in vs:
                                if loads[server] + q > capacity:
                                    continue
                                new_loads = list(loads)
                                new_loads[server] += q
                                entry = (
                                    tuple(new_loads),
                                    new_cost,
                                    (mask, lasts, loads, (c, vs, server)),
                                )
                                _push(nxt_layer, key, entry)
        found = None
        for (mask, lasts), front in sorted(layers[n].items()):
            counts: dict[int, int] = {}
            for u in lasts:
                if u != 0:
                    counts[u] = counts.get(u, 0) + 1
            closing = sum(dist[u][0] * factors[cnt] for u, cnt in counts.items())
            for loads, cost, parent in front:
                total = cost + closing
                if found is None or total < found[0]:
                    found = (total, (mask, lasts), loads)
        return layers, found

    best = None
    layers = None
    for shrink_num, shrink_den in ((17, 20), (19, 20), (1, 1)):
        threshold = ub * shrink_num // shrink_den
        layers, best = solve(threshold)
        if best is not None and best[0] <= threshold:
            break
        best = None
    if best is None:
        raise InfeasibleInstance("no capacity-feasible assignment exists")

    steps = _reconstruct(layers, n, best[1], best[2])
    sol = _build_solution(inst, steps, k)
    sol.recompute_cost(inst)
    if sol.cost_scaled != best[0]:
        raise AssertionError(
            f"oracle reconstruction cost {sol.cost_scaled} != DP cost {best[0]}"
        )
    return sol, Cost(best[0], inst.cost_den)


def _push(layer: dict, key, entry) -> None:
    """Insert with Pareto dominance over (cost, loads)."""
    loads, cost, _ = entry
    front = layer.get(key)
    if front is None:
        layer[key] = [entry]
        return
    for o_loads, o_cost, _o in front:
        if o_cost <= cost and all(a <= b for a, b in zip(o_loads, loads)):
            return
    front[:] = [
        (l, c, p)
        for (l, c, p) in front
        if not (cost <= c and all(a <= b for a, b in zip(loads, l)))
    ]
    front.append(entry)


def _reconstruct(layers, n, final_key, final_loads):
    steps = []
    key, loads = final_key, final_loads
    for depth in range(n, 0, -1):
        front = layers[depth][key]
        entry = next(e for e in front if e[0] == loads)
        _loads, _cost, parent = entry
        prev_mask, prev_lasts, prev_loads, move = parent
        steps.append((move, prev_lasts))
        key, loads = (prev_mask, prev_lasts), prev_loads
    steps.reverse()
    return steps


def _build_solution(inst: Instance, steps, k: int) -> Solution:
    """Turn the DP step sequence into segments, rows and serving assignments."""
    visitors: dict[int, tuple[int, ...]] = {}
    server_of: dict[int, int] = {}
    arrivals: dict[int, dict[int, int]] = {}  # customer -> last-node -> group size
    routes: dict[int, list[int]] = {m: [] for m in range(k)}
    for (c, vs, server), prev_lasts in steps:
        visitors[c] = vs
        server_of[c] = server
        counts: dict[int, int] = {}
        for m in vs:
            u = prev_lasts[m]
            counts[u] = counts.get(u, 0) + 1
        arrivals[c] = counts
        for m in vs:
            routes[m].append(c)

    step_index = {c: i for i, ((c, _vs, _srv), _pl) in enumerate(steps)}
    # a customer continues its predecessor's segment when the whole platoon
    # moved together and stayed identical
    seg_key: dict[int, int] = {}
    for (c, vs, _server), prev_lasts in steps:
        u = prev_lasts[vs[0]]
        same = (
            u != 0
            and visitors.get(u) == vs
            and arrivals[c].get(u, 0) == len(vs)
        )
        seg_key[c] = seg_key[u] if same else step_index[c]

    segments: dict[int, Segment] = {}
    order: list[int] = []
    for (c, vs, server), _pl in steps:
        key = seg_key[c]
        if key not in segments:
            segments[key] = Segment(key, [], [], frozenset(vs))
            order.append(key)
        segments[key].nodes.append(c)
        segments[key].servers.append(server_of[c])

    renum = {key: i + 1 for i, key in enumerate(order)}
    final_segments = {
        renum[key]: Segment(renum[key], seg.nodes, seg.servers, seg.mvs)
        for key, seg in segments.items()
    }
    paths: dict[int, list[int]] = {}
    for m in range(k):
        if not routes[m]:
            continue
        path: list[int] = []
        for c in routes[m]:
            sid = renum[seg_key[c]]
            if not path or path[-1] != sid:
                path.append(sid)
        paths[m] = path
    return Solution(final_segments, paths, 0, len(order) + 1)
