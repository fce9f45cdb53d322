"""Sparse multi-start initialization, savings-based improvement, the tabu
search main loop, and shaking."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .cost import Cost, render_decimal
from .errors import InfeasibleSparse, NoAdmissibleMove, NothingToShake
from .instance import Instance
from .neighborhoods import (
    PARALLEL_MERGE,
    RELOCATE_INTER_MV,
    RELOCATE_INTRA_MV,
    RELOCATE_INTRA_SEGMENT,
    SERIAL_MERGE,
    TabuState,
    apply_move,
    enumerate_neighborhood,
)
from .solution import Segment, Solution, single_route_solution
from .validate import validate

_MERGE_KINDS = (SERIAL_MERGE, PARALLEL_MERGE)
_RELOCATE_KINDS = (RELOCATE_INTRA_SEGMENT, RELOCATE_INTRA_MV, RELOCATE_INTER_MV)


@dataclass
class SearchParams:
    starts: int = 10
    max_iterations: int = 1000
    no_improve_shake_trigger: int = 50
    tenure: int = 10
    sparse_fill_ratio: float = 0.5
    shake_count_max: int | None = None  # default: ceil(fleet/3)
    rng_seed: int = 0
    use_merges: bool = True
    use_relocates: bool = True
    use_shaking: bool = True

    def __post_init__(self) -> None:
        if self.starts < 1 or self.max_iterations < 0 or self.tenure < 1:
            raise ValueError("starts, iterations and tenure must be positive")
        if not 0 < self.sparse_fill_ratio <= 1:
            raise ValueError("sparse fill ratio must be in (0, 1]")

    def move_kinds(self) -> tuple[str, ...]:
        kinds: tuple[str, ...] = ()
        if self.use_merges:
            kinds += _MERGE_KINDS
        if self.use_relocates:
            kinds += _RELOCATE_KINDS
        return kinds

    def shake_limit(self, fleet_size: int) -> int:
        if self.shake_count_max is not None:
            return max(1, self.shake_count_max)
        return max(1, -(-fleet_size // 3))


@dataclass
class SearchTrace:
    """Per-iteration history of one start: (iteration, current cost, best
    cost, move kind, shake flag)."""

    start_index: int
    den: int
    rows: list[tuple[int, int, int, str, int]] = field(default_factory=list)

    @property
    def best_scaled(self) -> int:
        return self.rows[-1][2]

    def iterations_to_best(self) -> int:
        final = self.best_scaled
        for it, _cur, best, _kind, _shake in self.rows:
            if best == final:
                return it
        return 0

    def to_csv(self) -> str:
        lines = ["iteration,current_cost,best_cost,move_kind,shake"]
        for it, cur, best, kind, shake in self.rows:
            lines.append(
                f"{it},{render_decimal(cur, self.den)},{render_decimal(best, self.den)},{kind},{shake}"
            )
        return "\n".join(lines) + "\n"


def _mix(base: int, *parts: int) -> int:
    """Splittable counter: deterministic per-start and per-phase seeds."""
    h = (base * 0x9E3779B97F4A7C15 + 0x2545F4914F6CDD1D) % (1 << 64)
    for p in parts:
        h = (h ^ (p + 0x9E3779B97F4A7C15 + (h << 6) + (h >> 2))) % (1 << 64)
    return h


def sample_sparse_solution(inst: Instance, seed: int, ratio: float) -> Solution:
    """Random platoon-free solution whose route loads stay below ratio * Q.

    Customers are shuffled and placed first-fit.  A customer too large for
    the requested ratio fails outright; needing more than the fleet retries
    once at ratio 1 before failing.
    """
    limit = ratio * inst.capacity
    if max(inst.demands[c] for c in inst.customers) > limit:
        raise InfeasibleSparse(f"a demand exceeds ratio*capacity = {limit}")
    order = list(inst.customers)
    random.Random(seed).shuffle(order)
    for cap in (limit, float(inst.capacity)):
        routes: list[list[int]] = []
        loads: list[float] = []
        ok = True
        for c in order:
            q = inst.demands[c]
            placed = False
            for i in range(len(routes)):
                if loads[i] + q <= cap:
                    routes[i].append(c)
                    loads[i] += q
                    placed = True
                    break
            if not placed:
                if len(routes) >= inst.fleet_size:
                    ok = False
                    break
                routes.append([c])
                loads.append(q)
        if ok:
            return single_route_solution(inst, {i: r for i, r in enumerate(routes)})
    raise InfeasibleSparse(f"customers do not fit {inst.fleet_size} routes")


def cw_improve(sol: Solution, inst: Instance) -> Solution:
    """Savings loop: apply the merge with the largest saving until none helps."""
    current = sol
    while True:
        try:
            move = enumerate_neighborhood(current, inst, kinds=_MERGE_KINDS)
        except NoAdmissibleMove:
            break
        if move.delta.scaled >= 0:
            break
        current = apply_move(current, move, inst)
    return current


def shake(sol: Solution, count: int, seed: int, inst: Instance) -> Solution:
    """Extract `count` random platooned vehicles into standalone routes."""
    candidates = sorted(
        {mv for seg in sol.segments.values() if len(seg.mvs) >= 2 for mv in seg.mvs}
    )
    if not candidates:
        raise NothingToShake("no vehicle rides in any platoon")
    count = min(count, len(candidates))
    chosen = sorted(random.Random(seed).sample(candidates, count))
    work = sol.clone()
    for mv in chosen:
        _extract(work, mv)
        work.canonicalize()
    work.recompute_cost(inst)
    return work


def _extract(work: Solution, mv: int) -> None:
    path = work.paths.get(mv)
    if path is None:
        return
    route: list[int] = []
    for sid in path:
        seg = work.segments[sid]
        kept_nodes: list[int] = []
        kept_servers: list[int] = []
        for node, server in zip(seg.nodes, seg.servers):
            if server == mv:
                route.append(node)
            else:
                kept_nodes.append(node)
                kept_servers.append(server)
        seg.nodes = kept_nodes
        seg.servers = kept_servers
        seg.mvs = seg.mvs - {mv}
    if route:
        sid = work.alloc_id()
        work.segments[sid] = Segment(sid, route, [mv] * len(route), frozenset([mv]))
        work.paths[mv] = [sid]
    else:
        del work.paths[mv]


def tabu_search(
    inst: Instance, initial: Solution, params: SearchParams, seed: int
) -> tuple[Solution, SearchTrace]:
    """Best-improvement tabu search with aspiration, arc tabu lists cleared on
    every shake.  Deterministic in (initial, params, seed)."""
    rng = random.Random(seed)
    kinds = params.move_kinds()
    tabu = TabuState(params.tenure)
    current = initial
    best = initial.clone()
    best_scaled = best.cost_scaled
    trace = SearchTrace(start_index=0, den=inst.cost_den)
    trace.rows.append((0, current.cost_scaled, best_scaled, "init", 0))
    no_improve = 0
    it = 0

    def do_shake() -> bool:
        # tabu entries survive the shake on purpose: clearing them makes the
        # deterministic move selection replay the exact same cycle whenever a
        # shake lands back on a previously seen state
        nonlocal current, no_improve
        limit = params.shake_limit(inst.fleet_size)
        count = rng.randint(1, limit)
        try:
            shaken = shake(current, count, rng.getrandbits(32), inst)
        except NothingToShake:
            return False
        current = shaken
        no_improve = 0
        trace.rows.append((it, current.cost_scaled, best_scaled, "shake", 1))
        return True

    while it < params.max_iterations:
        it += 1
        tabu.current_iteration = it
        if params.use_shaking and no_improve >= params.no_improve_shake_trigger:
            if do_shake():
                continue
            no_improve = 0
        if not kinds:
            break
        try:
            move = enumerate_neighborhood(
                current, inst, tabu, Cost(best_scaled, inst.cost_den), kinds
            )
        except NoAdmissibleMove:
            if params.use_shaking and do_shake():
                continue
            break
        current = apply_move(current, move, inst)
        tabu.record(move)
        if current.cost_scaled < best_scaled:
            best = current.clone()
            best_scaled = best.cost_scaled
            report = validate(best, inst)
            if not report.ok:
                raise AssertionError(f"search produced an invalid incumbent: {report}")
            no_improve = 0
        else:
            no_improve += 1
        trace.rows.append((it, current.cost_scaled, best_scaled, move.kind, 0))
    return best, trace


def multi_start(inst: Instance, params: SearchParams) -> tuple[Solution, list[SearchTrace]]:
    """Independent sparse-sample -> savings -> tabu chains; best of all starts."""
    best: Solution | None = None
    best_key: tuple[int, int] | None = None
    traces: list[SearchTrace] = []
    failures: list[Exception] = []
    for i in range(params.starts):
        try:
            sampled = sample_sparse_solution(
                inst, _mix(params.rng_seed, i, 0), params.sparse_fill_ratio
            )
        except InfeasibleSparse as exc:
            failures.append(exc)
            continue
        improved = cw_improve(sampled, inst)
        found, trace = tabu_search(inst, improved, params, _mix(params.rng_seed, i, 1))
        trace.start_index = i
        traces.append(trace)
        key = (found.cost_scaled, i)
        if best_key is None or key < best_key:
            best, best_key = found, key
    if best is None:
        raise InfeasibleSparse(f"all {params.starts} starts failed: {failures[:1]}")
    return best, traces
