"""Candidate move generators, optimal vehicle pairing, and tabu bookkeeping.

Merging moves (serial and parallel) are evaluated by building the candidate
solution outright and recomputing its exact cost; they are few per
iteration.  Relocation moves are evaluated with O(1) incremental deltas and
fall back to full construction whenever the touched neighborhoods of the
donor and receiver segments interact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cost import Cost
from .errors import Infeasible, NoAdmissibleMove, NoFeasiblePath, TabuRejected
from .instance import Instance
from .solution import DEPOT, DEPOT_RETURN, SINK, SOURCE, Segment, Solution, is_standalone_route

SERIAL_MERGE = "SerialMerge"
PARALLEL_MERGE = "ParallelMerge"
RELOCATE_INTRA_SEGMENT = "RelocateIntraSegment"
RELOCATE_INTRA_MV = "RelocateIntraMv"
RELOCATE_INTER_MV = "RelocateInterMv"

_KIND_RANK = {
    SERIAL_MERGE: 0,
    PARALLEL_MERGE: 1,
    RELOCATE_INTRA_SEGMENT: 2,
    RELOCATE_INTRA_MV: 3,
    RELOCATE_INTER_MV: 4,
}

_MERGE_KINDS = (SERIAL_MERGE, PARALLEL_MERGE)

# relocate target id meaning "open a fresh standalone route for an idle vehicle"
NEW_ROUTE = -2


@dataclass
class Move:
    kind: str
    params: tuple
    delta: Cost
    touched_arcs: tuple[tuple[int, int], ...]
    _prebuilt: Solution | None = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return _KIND_RANK[self.kind]


@dataclass
class PairSet:
    """Greedy head-pairing result: pairs are (index into kr, index into ks)."""

    pairs: list[tuple[int, int]]
    unpaired_kr: list[int]
    unpaired_ks: list[int]


def pair_mvs(kr: list[int], ks: list[int], capacity: int) -> PairSet:
    """Pair route vehicles with segment vehicles so both loads share one unit.

    kr is scanned in non-ascending load order against the non-descending head
    of ks; the result has maximum cardinality over all feasible pairings.
    """
    order_r = sorted(range(len(kr)), key=lambda i: (-kr[i], i))
    order_s = sorted(range(len(ks)), key=lambda j: (ks[j], j))
    pairs: list[tuple[int, int]] = []
    unpaired_r: list[int] = []
    pos = 0
    for i in order_r:
        if pos < len(order_s) and kr[i] + ks[order_s[pos]] <= capacity:
            pairs.append((i, order_s[pos]))
            pos += 1
        else:
            unpaired_r.append(i)
    unpaired_s = [j for j in order_s[pos:]]
    return PairSet(pairs=pairs, unpaired_kr=sorted(unpaired_r), unpaired_ks=sorted(unpaired_s))


class TabuState:
    """Two arc-indexed expiry maps: one shared by the merging operators, one
    shared by the relocation operators."""

    def __init__(self, tenure: int = 10):
        self.tenure = tenure
        self.current_iteration = 0
        self.merge_expiry: dict[tuple[int, int], int] = {}
        self.relocate_expiry: dict[tuple[int, int], int] = {}

    def expiry_map(self, kind: str) -> dict[tuple[int, int], int]:
        return self.merge_expiry if kind in _MERGE_KINDS else self.relocate_expiry

    def is_tabu(self, kind: str, arcs) -> bool:
        table = self.expiry_map(kind)
        if not table:
            return False
        now = self.current_iteration
        return any(table.get(arc, 0) > now for arc in arcs)

    def record(self, move: Move) -> None:
        table = self.expiry_map(move.kind)
        expiry = self.current_iteration + self.tenure
        for arc in move.touched_arcs:
            table[arc] = expiry

    def advance(self) -> None:
        self.current_iteration += 1

    def clear(self) -> None:
        self.merge_expiry.clear()
        self.relocate_expiry.clear()


# ---------------------------------------------------------------------------
# attach-path search


class _AttachCtx:
    """Shared DAG view for attach-path searches within one candidate build.

    Arc group sizes are mutable so sequential rider attachments see each
    other; topology and internal distances stay fixed during a build.
    """

    __slots__ = ("sol", "inst", "counts", "preds", "succs", "order", "internals")

    def __init__(self, sol: Solution, inst: Instance):
        self.sol = sol
        self.inst = inst
        self.counts: dict[tuple[int, int], int] = {}
        self.preds: dict[int, list[int]] = {SOURCE: [], SINK: []}
        self.succs: dict[int, list[int]] = {SOURCE: [], SINK: []}
        for mv in sorted(sol.paths):
            prev = SOURCE
            for sid in sol.paths[mv] + [SINK]:
                arc = (prev, sid)
                if arc in self.counts:
                    self.counts[arc] += 1
                else:
                    self.counts[arc] = 1
                    self.succs.setdefault(prev, []).append(sid)
                    self.preds.setdefault(sid, []).append(prev)
                prev = sid
        dist = inst._dist
        self.internals = {
            sid: sum(dist[a][b] for a, b in zip(seg.nodes, seg.nodes[1:]))
            for sid, seg in sol.segments.items()
        }
        # Kahn order over the derived DAG
        indeg = {n: len(self.preds.get(n, ())) for n in self.succs}
        for n in self.preds:
            indeg.setdefault(n, len(self.preds[n]))
        ready = sorted(n for n, d in indeg.items() if d == 0)
        order: list[int] = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            inserted = False
            for b in self.succs.get(n, ()):
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
                    inserted = True
            if inserted:
                ready.sort()
        if len(order) != len(indeg):
            raise AssertionError("cycle in solution DAG")
        self.order = order

    def join(self, path: list[int], k: int) -> None:
        """Record k vehicles now traversing the source-to-sink row `path`."""
        prev = SOURCE
        for sid in path + [SINK]:
            self.counts[(prev, sid)] = self.counts.get((prev, sid), 0) + k
            prev = sid


def _attach_search(
    sol: Solution,
    inst: Instance,
    target: int,
    direction: str,
    k: int,
    ctx: _AttachCtx | None = None,
) -> tuple[list[int], int]:
    """Cheapest way for k extra docked vehicles to reach (or leave) a segment
    along the existing DAG.  Returns (segment path including target, scaled
    marginal cost).  From the source the cost covers the target's internal
    arcs; toward the sink it covers everything after the target's exit.
    """
    if ctx is None:
        ctx = _AttachCtx(sol, inst)
    limit = inst.max_platoon
    factor = inst.factor
    counts = ctx.counts
    segments = sol.segments
    dist = inst._dist

    def exit_node(sid: int) -> int:
        return 0 if sid == SOURCE else segments[sid].exit

    def entry_node(sid: int) -> int:
        return 0 if sid == SINK else segments[sid].entry

    def node_cost(sid: int) -> int:
        l = len(segments[sid].mvs)
        return ctx.internals[sid] * (factor(l + k) - factor(l))

    def room(sid: int) -> bool:
        return len(segments[sid].mvs) + k <= limit

    best: dict[int, tuple[int, int, tuple[int, ...]]] = {}
    if direction == "from_source":
        best[SOURCE] = (0, 0, ())
        for b in ctx.order:
            if b == SOURCE or b == SINK:
                continue
            if not room(b):
                continue
            extra = node_cost(b)
            entry = segments[b].entry
            for a in ctx.preds.get(b, ()):
                prior = best.get(a)
                if prior is None:
                    continue
                g = counts[(a, b)]
                d = dist[exit_node(a)][entry]
                cand = (
                    prior[0] + d * (factor(g + k) - factor(g)) + extra,
                    prior[1] + 1,
                    prior[2] + (b,),
                )
                if b not in best or cand < best[b]:
                    best[b] = cand
        if target not in best:
            raise NoFeasiblePath(f"no room on any path from source to segment {target}")
        cost, _hops, path = best[target]
        return list(path), cost
    # toward the sink; walk the order backwards
    best[SINK] = (0, 0, ())
    for a in reversed(ctx.order):
        if a == SINK:
            continue
        if a != target and a != SOURCE and not room(a):
            continue
        exit_a = exit_node(a)
        acc = None
        for b in ctx.succs.get(a, ()):
            after = best.get(b)
            if after is None:
                continue
            g = counts[(a, b)]
            extra = node_cost(b) if b != SINK else 0
            d = dist[exit_a][entry_node(b)]
            cand = (
                d * (factor(g + k) - factor(g)) + extra + after[0],
                after[1] + 1,
                (b,) + after[2],
            )
            if acc is None or cand < acc:
                acc = cand
        if acc is not None and (a not in best or acc < best[a]):
            best[a] = acc
    if target not in best:
        raise NoFeasiblePath(f"no room on any path from segment {target} to sink")
    cost, _hops, path = best[target]
    return [target] + [sid for sid in path if sid != SINK], cost


def cheapest_attach_path(
    sol: Solution, target: int, direction: str, inst: Instance, group_size: int = 1
) -> tuple[list[int], Cost]:
    """Public attach-path search; direction is 'from_source' or 'to_sink'."""
    if direction not in ("from_source", "to_sink"):
        raise ValueError(f"bad direction {direction!r}")
    if target not in sol.segments:
        raise ValueError(f"unknown segment {target}")
    path, scaled = _attach_search(sol, inst, target, direction, group_size)
    return path, Cost(scaled, inst.cost_den)


# ---------------------------------------------------------------------------
# merge constructions


def _build_serial_merge(sol: Solution, inst: Instance, r_id: int, s_id: int, n: int) -> Solution:
    """Splice a standalone route's customers into a segment at position n and
    combine the vehicles, pairing loads where both fit one unit."""
    r = sol.segments[r_id]
    s = sol.segments[s_id]
    loads = sol.served_loads(inst)
    kr_ids = sorted(r.mvs)
    ks_ids = sorted(s.mvs)
    ps = pair_mvs([loads[m] for m in kr_ids], [loads[m] for m in ks_ids], inst.capacity)
    partner = {kr_ids[i]: ks_ids[j] for i, j in ps.pairs}
    riders = [kr_ids[i] for i in ps.unpaired_kr]
    if len(s.mvs) + len(riders) > inst.max_platoon:
        raise Infeasible("merged platoon would exceed the size limit")

    work = sol.clone()
    del work.segments[r_id]
    for mv in kr_ids:
        work.paths.pop(mv, None)
    target = work.segments[s_id]
    target.nodes[n:n] = r.nodes
    target.servers[n:n] = [partner.get(srv, srv) for srv in r.servers]

    ctx = _AttachCtx(work, inst) if riders else None
    for mv in riders:
        leg_in, _ = _attach_search(work, inst, s_id, "from_source", 1, ctx)
        leg_out, _ = _attach_search(work, inst, s_id, "to_sink", 1, ctx)
        full = leg_in + leg_out[1:]
        for sid in full:
            seg = work.segments[sid]
            seg.mvs = seg.mvs | {mv}
        work.paths[mv] = full
        ctx.join(full, 1)
    work.canonicalize()
    work.recompute_cost(inst)
    return work


def _build_parallel_merge(
    sol: Solution, inst: Instance, r_id: int, s_id: int, n: int, m: int
) -> Solution:
    """Fold a standalone route alongside segment s: its vehicles share the
    ride through s's first n customers, split, serve their own customers in
    parallel, and dock back for customers m..S.  n == 0 skips the shared
    prefix; m == S+1 skips the shared suffix."""
    r = sol.segments[r_id]
    s = sol.segments[s_id]
    size = len(s.nodes)
    if not (0 <= n < m <= size + 1) or (n == 0 and m == size + 1):
        raise Infeasible("empty sharing window")
    if len(r.mvs) + len(s.mvs) > inst.max_platoon:
        raise Infeasible("shared platoon would exceed the size limit")

    work = sol.clone()
    del work.segments[r_id]
    for mv in sorted(r.mvs):
        work.paths.pop(mv, None)

    pre = (s.nodes[:n], s.servers[:n])
    mid = (s.nodes[n : m - 1], s.servers[n : m - 1])
    suf = (s.nodes[m - 1 :], s.servers[m - 1 :])
    del work.segments[s_id]
    ks_replacement: list[int] = []
    pre_id = mid_id = suf_id = None
    if pre[0]:
        pre_id = work.alloc_id()
        work.segments[pre_id] = Segment(pre_id, list(pre[0]), list(pre[1]), s.mvs)
        ks_replacement.append(pre_id)
    if mid[0]:
        mid_id = work.alloc_id()
        work.segments[mid_id] = Segment(mid_id, list(mid[0]), list(mid[1]), s.mvs)
        ks_replacement.append(mid_id)
    if suf[0]:
        suf_id = work.alloc_id()
        work.segments[suf_id] = Segment(suf_id, list(suf[0]), list(suf[1]), s.mvs)
        ks_replacement.append(suf_id)
    for mv in s.mvs:
        path = work.paths[mv]
        at = path.index(s_id)
        path[at : at + 1] = ks_replacement

    route_id = work.alloc_id()
    work.segments[route_id] = Segment(route_id, list(r.nodes), list(r.servers), r.mvs)

    k = len(r.mvs)
    ctx = _AttachCtx(work, inst) if (pre_id or suf_id) else None
    leg_in = _attach_search(work, inst, pre_id, "from_source", k, ctx)[0] if pre_id else []
    leg_out = _attach_search(work, inst, suf_id, "to_sink", k, ctx)[0][1:] if suf_id else []
    full = leg_in + [route_id] + ([suf_id] + leg_out if suf_id else [])
    for sid in full:
        if sid != route_id:
            seg = work.segments[sid]
            seg.mvs = seg.mvs | r.mvs
    for mv in sorted(r.mvs):
        work.paths[mv] = list(full)
    work.canonicalize()
    work.recompute_cost(inst)
    return work


def _pmo_windows(sol: Solution, s: Segment, standalone: bool) -> list[tuple[int, int]]:
    size = len(s.nodes)
    if standalone:
        return [
            (n, m)
            for n in range(0, size + 1)
            for m in range(n + 1, size + 2)
            if not (n == 0 and m == size + 1)
        ]
    windows = [(size, size + 1), (0, 1)]
    if size >= 2:
        windows.insert(0, (1, size))
    return windows


# ---------------------------------------------------------------------------
# relocate deltas


class _Scan:
    """Per-iteration caches shared by the relocate generators."""

    def __init__(self, sol: Solution, inst: Instance):
        self.sol = sol
        self.inst = inst
        self.groups = sol.transition_groups()
        self.loads = sol.served_loads(inst)
        self.factor = inst.factor
        self.dist = inst._dist
        # per segment: incoming/outgoing (other endpoint node, group factor)
        self.inc: dict[int, list[tuple[int, int]]] = {sid: [] for sid in sol.segments}
        self.out: dict[int, list[tuple[int, int]]] = {sid: [] for sid in sol.segments}
        self.adjacent: set[tuple[int, int]] = set()
        for (a, b), group in self.groups.items():
            fg = self.factor(len(group))
            if b in sol.segments:
                self.inc[b].append((DEPOT if a == SOURCE else sol.segments[a].exit, fg))
            if a in sol.segments:
                # keep the return depot distinct in arc keys so tabu entries
                # from different generators agree
                v = DEPOT_RETURN if b == SINK else sol.segments[b].entry
                self.out[a].append((v, fg))
            self.adjacent.add((a, b))
        self.node_loc: dict[int, tuple[int, int]] = {}
        for sid in sorted(sol.segments):
            for idx, node in enumerate(sol.segments[sid].nodes):
                self.node_loc[node] = (sid, idx)

    def d(self, a: int, b: int) -> int:
        return self.dist[a if a >= 0 else 0][b if b >= 0 else 0]

    def removal(self, sid: int, idx: int) -> tuple[int, list[tuple[int, int]]]:
        """Scaled delta and destroyed node arcs of taking one customer out."""
        seg = self.sol.segments[sid]
        nodes = seg.nodes
        c = nodes[idx]
        f = self.factor(len(seg.mvs))
        destroyed: list[tuple[int, int]] = []
        if len(nodes) == 1:
            return self._structural_removal(sid, c)
        if idx == 0:
            new_entry = nodes[1]
            delta = -f * self.d(c, new_entry)
            for p, fg in self.inc[sid]:
                delta += fg * (self.d(p, new_entry) - self.d(p, c))
                destroyed.append((p, c))
            destroyed.append((c, new_entry))
        elif idx == len(nodes) - 1:
            new_exit = nodes[-2]
            delta = -f * self.d(new_exit, c)
            for v, fg in self.out[sid]:
                delta += fg * (self.d(new_exit, v) - self.d(c, v))
                destroyed.append((c, v))
            destroyed.append((new_exit, c))
        else:
            a, b = nodes[idx - 1], nodes[idx + 1]
            delta = f * (self.d(a, b) - self.d(a, c) - self.d(c, b))
            destroyed = [(a, c), (c, b)]
        return delta, destroyed

    def _structural_removal(self, sid: int, c: int) -> tuple[int, list[tuple[int, int]]]:
        """The segment disappears; every vehicle bridges straight from its
        previous segment to its next one, joining existing groups."""
        sol = self.sol
        delta = 0
        destroyed: list[tuple[int, int]] = []
        for p, fg in self.inc[sid]:
            delta -= fg * self.d(p, c)
            destroyed.append((p, c))
        for v, fg in self.out[sid]:
            delta -= fg * self.d(c, v)
            destroyed.append((c, v))
        bridges: dict[tuple[int, int], int] = {}
        for mv in sorted(sol.segments[sid].mvs):
            path = sol.paths[mv]
            at = path.index(sid)
            prev = path[at - 1] if at > 0 else SOURCE
            nxt = path[at + 1] if at + 1 < len(path) else SINK
            bridges[(prev, nxt)] = bridges.get((prev, nxt), 0) + 1
        for (a, b), added in sorted(bridges.items()):
            dist = self.d(sol._endpoint(a, 1), sol._endpoint(b, 0))
            old = len(self.groups.get((a, b), ()))
            delta += dist * (self.factor(old + added) - self.factor(old))
        return delta, destroyed

    def insertion(self, sid: int, pos: int, c: int) -> tuple[int, list[tuple[int, int]]]:
        seg = self.sol.segments[sid]
        nodes = seg.nodes
        f = self.factor(len(seg.mvs))
        destroyed: list[tuple[int, int]] = []
        if pos == 0:
            entry = nodes[0]
            delta = f * self.d(c, entry)
            for p, fg in self.inc[sid]:
                delta += fg * (self.d(p, c) - self.d(p, entry))
                destroyed.append((p, entry))
        elif pos == len(nodes):
            exit_ = nodes[-1]
            delta = f * self.d(exit_, c)
            for v, fg in self.out[sid]:
                delta += fg * (self.d(c, v) - self.d(exit_, v))
                destroyed.append((exit_, v))
        else:
            u, v = nodes[pos - 1], nodes[pos]
            delta = f * (self.d(u, c) + self.d(c, v) - self.d(u, v))
            destroyed = [(u, v)]
        return delta, destroyed

    def same_segment(self, sid: int, idx: int, pos: int) -> tuple[int, list[tuple[int, int]]]:
        """Move the idx-th customer to position pos of the list without it."""
        seg = self.sol.segments[sid]
        nodes = seg.nodes
        c = nodes[idx]
        rest = nodes[:idx] + nodes[idx + 1 :]
        new_nodes = rest[:pos] + [c] + rest[pos:]
        f = self.factor(len(seg.mvs))
        old_int = sum(self.d(a, b) for a, b in zip(nodes, nodes[1:]))
        new_int = sum(self.d(a, b) for a, b in zip(new_nodes, new_nodes[1:]))
        delta = f * (new_int - old_int)
        for p, fg in self.inc[sid]:
            delta += fg * (self.d(p, new_nodes[0]) - self.d(p, nodes[0]))
        for v, fg in self.out[sid]:
            delta += fg * (self.d(new_nodes[-1], v) - self.d(nodes[-1], v))
        old_arcs = set(zip(nodes, nodes[1:]))
        new_arcs = set(zip(new_nodes, new_nodes[1:]))
        destroyed = sorted(old_arcs - new_arcs)
        if nodes[0] != new_nodes[0]:
            destroyed += [(p, nodes[0]) for p, _ in self.inc[sid]]
        if nodes[-1] != new_nodes[-1]:
            destroyed += [(nodes[-1], v) for v, _ in self.out[sid]]
        return delta, destroyed

    def interacts(self, src: int, dst: int, idx: int, pos: int) -> bool:
        """True when the removal and insertion touch a shared transition arc,
        so the additive fast path would miss a cross term."""
        src_seg = self.sol.segments[src]
        dst_len = len(self.sol.segments[dst].nodes)
        single = len(src_seg.nodes) == 1
        if single:
            return (
                (src, dst) in self.adjacent or (dst, src) in self.adjacent
            ) and (pos == 0 or pos == dst_len)
        if (src, dst) in self.adjacent and idx == len(src_seg.nodes) - 1 and pos == 0:
            return True
        if (dst, src) in self.adjacent and idx == 0 and pos == dst_len:
            return True
        return False


def _apply_relocate(sol: Solution, inst: Instance, params: tuple) -> Solution:
    c, src_id, dst_id, pos, server = params
    work = sol.clone()
    src = work.segments[src_id]
    idx = src.nodes.index(c)
    src.nodes.pop(idx)
    src.servers.pop(idx)
    if src_id == dst_id:
        src.nodes.insert(pos, c)
        src.servers.insert(pos, server)
    else:
        if not src.nodes:
            del work.segments[src_id]
            for path in work.paths.values():
                if src_id in path:
                    path.remove(src_id)
        if dst_id == NEW_ROUTE:
            sid = work.alloc_id()
            work.segments[sid] = Segment(sid, [c], [server], frozenset([server]))
            work.paths[server] = [sid]
        else:
            dst = work.segments[dst_id]
            dst.nodes.insert(pos, c)
            dst.servers.insert(pos, server)
    work.canonicalize()
    work.recompute_cost(inst)
    return work


# ---------------------------------------------------------------------------
# neighborhood enumeration


class _Best:
    __slots__ = ("key", "move")

    def __init__(self):
        self.key = None
        self.move = None

    def offer(self, delta: int, kind: str, params: tuple, destroyed, prebuilt=None) -> None:
        key = (delta, _KIND_RANK[kind], params)
        if self.key is None or key < self.key:
            self.key = key
            self.move = (delta, kind, params, tuple(destroyed), prebuilt)


def _admissible(
    tabu: TabuState | None,
    kind: str,
    destroyed,
    new_scaled: int,
    best_known: int | None,
) -> bool:
    if tabu is None or not tabu.is_tabu(kind, destroyed):
        return True
    return best_known is not None and new_scaled < best_known


def _standalone_pmo_deltas(
    sol: Solution, inst: Instance, r_id: int, s_id: int
) -> list[tuple[int, int, int, list[tuple[int, int]]]]:
    """O(1)-per-window deltas for folding route r alongside standalone route s.

    All structure is local (shared prefix/suffix fragments, parallel branch),
    so no attach-path search is involved.  Returns (delta, n, m, destroyed).
    """
    r = sol.segments[r_id]
    s = sol.segments[s_id]
    dist = inst._dist
    factor = inst.factor
    f_s = factor(len(s.mvs))
    f_r = factor(len(r.mvs))
    f_c = factor(len(s.mvs) + len(r.mvs))
    nodes = s.nodes
    size = len(nodes)
    prefix = [0] * size
    for t in range(1, size):
        prefix[t] = prefix[t - 1] + dist[nodes[t - 1]][nodes[t]]
    d_r = 0
    for a, b in zip(r.nodes, r.nodes[1:]):
        d_r += dist[a][b]
    j1, jr = r.nodes[0], r.nodes[-1]
    i1, il = nodes[0], nodes[-1]
    old = (dist[0][i1] + prefix[-1] + dist[il][0]) * f_s
    old += (dist[0][j1] + d_r + dist[jr][0]) * f_r
    out: list[tuple[int, int, int, list[tuple[int, int]]]] = []
    for n in range(0, size + 1):
        for m in range(n + 1, size + 2):
            if n == 0 and m == size + 1:
                continue
            has_pre = n >= 1
            has_suf = m <= size
            has_mid = m > n + 1
            cost = dist[0][i1] * (f_c if has_pre else f_s)
            if has_pre:
                cost += prefix[n - 1] * f_c
            if has_mid:
                cost += (prefix[m - 2] - prefix[n]) * f_s
            if has_suf:
                cost += (prefix[-1] - prefix[m - 1]) * f_c
            if has_pre and (has_mid or has_suf):
                cost += dist[nodes[n - 1]][nodes[n]] * f_s
            if has_suf and has_mid:
                cost += dist[nodes[m - 2]][nodes[m - 1]] * f_s
            cost += dist[il][0] * (f_c if has_suf else f_s)
            cost += (dist[nodes[n - 1]][j1] if has_pre else dist[0][j1]) * f_r
            cost += d_r * f_r
            cost += (dist[jr][nodes[m - 1]] if has_suf else dist[jr][0]) * f_r
            destroyed = []
            if has_pre:
                destroyed.append((DEPOT, j1))
            if has_suf:
                destroyed.append((jr, DEPOT_RETURN))
            out.append((cost - old, n, m, destroyed))
    return out


def _smo_fast_deltas(
    sol: Solution,
    inst: Instance,
    r_id: int,
    s_id: int,
    out_arcs: list[tuple[int, int]],
) -> list[tuple[int, int, list[tuple[int, int]]]]:
    """Per-position deltas for a serial merge whose route vehicles all pair
    away (no riders): a pure splice plus route removal.  Returns
    (delta, n, destroyed)."""
    r = sol.segments[r_id]
    s = sol.segments[s_id]
    dist = inst._dist
    f_r = inst.factor(len(r.mvs))
    f_s = inst.factor(len(s.mvs))
    d_r = 0
    for a, b in zip(r.nodes, r.nodes[1:]):
        d_r += dist[a][b]
    j1, jr = r.nodes[0], r.nodes[-1]
    old_r = (dist[0][j1] + d_r + dist[jr][0]) * f_r
    nodes = s.nodes
    size = len(nodes)
    out: list[tuple[int, int, list[tuple[int, int]]]] = []
    base = [(DEPOT, j1), (jr, DEPOT_RETURN)]
    for n in range(1, size):
        a, b = nodes[n - 1], nodes[n]
        delta = f_s * (dist[a][j1] + d_r + dist[jr][b] - dist[a][b]) - old_r
        out.append((delta, n, base + [(a, b)]))
    # appending at the tail moves the segment exit to the route's last node
    exit_old = nodes[-1]
    delta = f_s * (dist[exit_old][j1] + d_r)
    destroyed = list(base)
    for v, fg in out_arcs:
        delta += fg * (dist[jr][0 if v == DEPOT_RETURN else v] - dist[exit_old][0 if v == DEPOT_RETURN else v])
        destroyed.append((exit_old, v))
    out.append((delta - old_r, size, destroyed))
    return out


def _scan_merges(
    sol: Solution,
    inst: Instance,
    tabu: TabuState | None,
    best_known: int | None,
    best: _Best,
    kinds: tuple[str, ...],
) -> None:
    standalone = {sid for sid in sorted(sol.segments) if is_standalone_route(sol, sid)}
    old_arcs = sol.traversed_arcs()
    limit = inst.max_platoon
    cost_scaled = sol.cost_scaled
    loads = sol.served_loads(inst)
    # outgoing transition arcs per segment: (head entry node, group factor)
    out_arcs: dict[int, list[tuple[int, int]]] = {sid: [] for sid in sol.segments}
    counts: dict[tuple[int, int], int] = {}
    for mv in sorted(sol.paths):
        prev = SOURCE
        for sid in sol.paths[mv] + [SINK]:
            counts[(prev, sid)] = counts.get((prev, sid), 0) + 1
            prev = sid
    for (a, b), cnt in counts.items():
        if a in sol.segments:
            head = DEPOT_RETURN if b == SINK else sol.segments[b].entry
            out_arcs[a].append((head, inst.factor(cnt)))
    for r_id in sorted(standalone):
        r_seg = sol.segments[r_id]
        r_size = len(r_seg.mvs)
        kr_ids = sorted(r_seg.mvs)
        for s_id in sorted(sol.segments):
            if s_id == r_id:
                continue
            s = sol.segments[s_id]
            if SERIAL_MERGE in kinds:
                ks_ids = sorted(s.mvs)
                ps = pair_mvs(
                    [loads[m] for m in kr_ids], [loads[m] for m in ks_ids], inst.capacity
                )
                if not ps.unpaired_kr:
                    for delta, n, destroyed in _smo_fast_deltas(
                        sol, inst, r_id, s_id, out_arcs[s_id]
                    ):
                        if _admissible(
                            tabu, SERIAL_MERGE, destroyed, cost_scaled + delta, best_known
                        ):
                            best.offer(delta, SERIAL_MERGE, (r_id, s_id, n), destroyed)
                else:
                    for n in range(1, len(s.nodes) + 1):
                        try:
                            cand = _build_serial_merge(sol, inst, r_id, s_id, n)
                        except (Infeasible, NoFeasiblePath):
                            continue
                        delta = cand.cost_scaled - cost_scaled
                        destroyed = sorted(old_arcs - cand.traversed_arcs())
                        if _admissible(
                            tabu, SERIAL_MERGE, destroyed, cand.cost_scaled, best_known
                        ):
                            best.offer(delta, SERIAL_MERGE, (r_id, s_id, n), destroyed, cand)
            if PARALLEL_MERGE not in kinds:
                continue
            if s_id in standalone:
                if r_size + len(s.mvs) > limit:
                    continue
                for delta, n, m, destroyed in _standalone_pmo_deltas(sol, inst, r_id, s_id):
                    if _admissible(
                        tabu, PARALLEL_MERGE, destroyed, cost_scaled + delta, best_known
                    ):
                        best.offer(delta, PARALLEL_MERGE, (r_id, s_id, n, m), destroyed)
            else:
                for n, m in _pmo_windows(sol, s, False):
                    try:
                        cand = _build_parallel_merge(sol, inst, r_id, s_id, n, m)
                    except (Infeasible, NoFeasiblePath):
                        continue
                    delta = cand.cost_scaled - cost_scaled
                    destroyed = sorted(old_arcs - cand.traversed_arcs())
                    if _admissible(tabu, PARALLEL_MERGE, destroyed, cand.cost_scaled, best_known):
                        best.offer(delta, PARALLEL_MERGE, (r_id, s_id, n, m), destroyed, cand)


def _scan_relocates(
    sol: Solution,
    inst: Instance,
    tabu: TabuState | None,
    best_known: int | None,
    best: _Best,
    kinds: tuple[str, ...],
) -> None:
    scan = _Scan(sol, inst)
    capacity = inst.capacity
    cost_scaled = sol.cost_scaled
    old_arcs = None
    idle = next((mv for mv in range(inst.fleet_size) if mv not in sol.paths), None)
    f1 = inst.factor(1)
    for c in sorted(scan.node_loc):
        src_id, idx = scan.node_loc[c]
        src = sol.segments[src_id]
        server = src.servers[idx]
        q = inst.demands[c]
        removal_cached = None
        if (
            idle is not None
            and RELOCATE_INTER_MV in kinds
            and not (len(src.nodes) == 1 and len(src.mvs) == 1)
        ):
            # open a fresh route with the lowest idle vehicle; skipping
            # singleton standalone routes avoids pure relabelings
            removal_cached = scan.removal(src_id, idx)
            d_rm, destroyed = removal_cached
            delta = d_rm + 2 * scan.d(0, c) * f1
            if _admissible(tabu, RELOCATE_INTER_MV, destroyed, cost_scaled + delta, best_known):
                best.offer(delta, RELOCATE_INTER_MV, (c, src_id, NEW_ROUTE, 0, idle), destroyed)
        for dst_id in sorted(sol.segments):
            dst = sol.segments[dst_id]
            if dst_id == src_id:
                limit = len(dst.nodes) - 1
                for pos in range(0, limit + 1):
                    if pos == idx:
                        # no movement: identity moves and pure serving swaps
                        # destroy no arc, so they would dominate uphill moves
                        # forever at a local optimum
                        continue
                    delta, destroyed = scan.same_segment(src_id, idx, pos)
                    for mv in sorted(dst.mvs):
                        if mv == server:
                            kind = RELOCATE_INTRA_SEGMENT
                        else:
                            if scan.loads[mv] + q > capacity:
                                continue
                            kind = RELOCATE_INTER_MV
                        if kind not in kinds:
                            continue
                        if _admissible(tabu, kind, destroyed, cost_scaled + delta, best_known):
                            best.offer(delta, kind, (c, src_id, dst_id, pos, mv), destroyed)
                continue
            for pos in range(0, len(dst.nodes) + 1):
                if scan.interacts(src_id, dst_id, idx, pos):
                    cand = _apply_relocate(sol, inst, (c, src_id, dst_id, pos, server))
                    delta = cand.cost_scaled - cost_scaled
                    if old_arcs is None:
                        old_arcs = sol.traversed_arcs()
                    destroyed = sorted(old_arcs - cand.traversed_arcs())
                else:
                    if removal_cached is None:
                        removal_cached = scan.removal(src_id, idx)
                    d_rm, destroyed_rm = removal_cached
                    d_ins, destroyed_ins = scan.insertion(dst_id, pos, c)
                    delta = d_rm + d_ins
                    destroyed = destroyed_rm + destroyed_ins
                for mv in sorted(dst.mvs):
                    if mv == server:
                        kind = RELOCATE_INTRA_MV
                    else:
                        if scan.loads[mv] + q > capacity:
                            continue
                        kind = RELOCATE_INTER_MV
                    if kind not in kinds:
                        continue
                    if _admissible(tabu, kind, destroyed, cost_scaled + delta, best_known):
                        best.offer(delta, kind, (c, src_id, dst_id, pos, mv), destroyed)


def enumerate_neighborhood(
    sol: Solution,
    inst: Instance,
    tabu: TabuState | None = None,
    best_known: Cost | None = None,
    kinds: tuple[str, ...] = (
        SERIAL_MERGE,
        PARALLEL_MERGE,
        RELOCATE_INTRA_SEGMENT,
        RELOCATE_INTRA_MV,
        RELOCATE_INTER_MV,
    ),
) -> Move:
    """Best admissible move over the full neighborhood; ties prefer merges
    and then lexicographically smaller parameters."""
    best = _Best()
    known = best_known.scaled if best_known is not None else None
    if any(k in _MERGE_KINDS for k in kinds):
        _scan_merges(sol, inst, tabu, known, best, kinds)
    if any(k not in _MERGE_KINDS for k in kinds):
        _scan_relocates(sol, inst, tabu, known, best, kinds)
    if best.move is None:
        raise NoAdmissibleMove("neighborhood empty or fully tabu")
    delta, kind, params, destroyed, prebuilt = best.move
    return Move(kind, params, Cost(delta, inst.cost_den), destroyed, prebuilt)


def apply_move(sol: Solution, move: Move, inst: Instance) -> Solution:
    """Apply a move, returning a new solution whose recomputed cost must
    equal the old cost plus the move's delta."""
    if move._prebuilt is not None:
        result = move._prebuilt
    elif move.kind == SERIAL_MERGE:
        result = _build_serial_merge(sol, inst, *move.params)
    elif move.kind == PARALLEL_MERGE:
        result = _build_parallel_merge(sol, inst, *move.params)
    else:
        result = _apply_relocate(sol, inst, move.params)
    expected = sol.cost_scaled + move.delta.scaled
    if result.cost_scaled != expected:
        raise AssertionError(
            f"move {move.kind}{move.params} delta mismatch: "
            f"{result.cost_scaled} != {expected}"
        )
    return result


# ---------------------------------------------------------------------------
# public single-move entry points


def serial_merge(
    sol: Solution,
    r_id: int,
    s_id: int,
    n: int,
    inst: Instance,
    tabu: TabuState | None = None,
    best_known: Cost | None = None,
) -> Move:
    if not is_standalone_route(sol, r_id):
        raise Infeasible(f"segment {r_id} is not a standalone route")
    if not 1 <= n <= len(sol.segments[s_id].nodes):
        raise Infeasible(f"bad insertion position {n}")
    cand = _build_serial_merge(sol, inst, r_id, s_id, n)
    delta = cand.cost_scaled - sol.cost_scaled
    destroyed = tuple(sorted(sol.traversed_arcs() - cand.traversed_arcs()))
    if not _admissible(
        tabu, SERIAL_MERGE, destroyed, cand.cost_scaled, best_known.scaled if best_known else None
    ):
        raise TabuRejected("a destroyed arc is tabu")
    return Move(SERIAL_MERGE, (r_id, s_id, n), Cost(delta, inst.cost_den), destroyed, cand)


def parallel_merge(
    sol: Solution,
    r_id: int,
    s_id: int,
    split: int | None,
    dock: int | None,
    inst: Instance,
    tabu: TabuState | None = None,
    best_known: Cost | None = None,
) -> Move:
    """split and dock are customer nodes of s (or None for the depot ends):
    the route's vehicles ride with s's platoon through split, serve their own
    customers in parallel, and dock back at dock."""
    if not is_standalone_route(sol, r_id):
        raise Infeasible(f"segment {r_id} is not a standalone route")
    s = sol.segments[s_id]
    n = 0 if split is None else s.nodes.index(split) + 1
    m = len(s.nodes) + 1 if dock is None else s.nodes.index(dock) + 1
    cand = _build_parallel_merge(sol, inst, r_id, s_id, n, m)
    delta = cand.cost_scaled - sol.cost_scaled
    destroyed = tuple(sorted(sol.traversed_arcs() - cand.traversed_arcs()))
    if not _admissible(
        tabu, PARALLEL_MERGE, destroyed, cand.cost_scaled, best_known.scaled if best_known else None
    ):
        raise TabuRejected("a destroyed arc is tabu")
    return Move(PARALLEL_MERGE, (r_id, s_id, n, m), Cost(delta, inst.cost_den), destroyed, cand)


def relocate(
    sol: Solution,
    customer: int,
    dst_id: int,
    pos: int,
    serving_mv: int,
    inst: Instance,
    tabu: TabuState | None = None,
    best_known: Cost | None = None,
) -> Move:
    loc = None
    for sid in sorted(sol.segments):
        if customer in sol.segments[sid].nodes:
            loc = (sid, sol.segments[sid].nodes.index(customer))
            break
    if loc is None:
        raise Infeasible(f"customer {customer} not in solution")
    src_id, idx = loc
    src = sol.segments[src_id]
    server = src.servers[idx]
    if dst_id == NEW_ROUTE:
        if serving_mv in sol.paths:
            raise Infeasible(f"mv {serving_mv} is not idle")
        if pos != 0:
            raise Infeasible("a fresh route has a single position")
    else:
        dst = sol.segments[dst_id]
        if serving_mv not in dst.mvs:
            raise Infeasible(f"mv {serving_mv} not in target platoon")
        limit = len(dst.nodes) - (1 if dst_id == src_id else 0)
        if not 0 <= pos <= limit:
            raise Infeasible(f"bad position {pos}")
    if serving_mv != server:
        loads = sol.served_loads(inst)
        if loads[serving_mv] + inst.demands[customer] > inst.capacity:
            raise Infeasible("receiving vehicle lacks capacity")
        kind = RELOCATE_INTER_MV
    elif dst_id == src_id:
        kind = RELOCATE_INTRA_SEGMENT
    else:
        kind = RELOCATE_INTRA_MV
    cand = _apply_relocate(sol, inst, (customer, src_id, dst_id, pos, serving_mv))
    delta = cand.cost_scaled - sol.cost_scaled
    destroyed = tuple(sorted(sol.traversed_arcs() - cand.traversed_arcs()))
    if not _admissible(
        tabu, kind, destroyed, cand.cost_scaled, best_known.scaled if best_known else None
    ):
        raise TabuRejected("a destroyed arc is tabu")
    return Move(kind, (customer, src_id, dst_id, pos, serving_mv), Cost(delta, inst.cost_den), destroyed, cand)
