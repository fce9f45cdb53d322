"""ST-DAG + Gantt solution representation and exact cost evaluation.

A solution is stored as its Gantt rows: one ordered list of segment ids per
vehicle, running implicitly from the depot source to the depot sink.  The
two-terminal DAG over segments is derived from the rows (an arc s->t exists
exactly when some vehicle traverses s immediately followed by t), so the two
views can never drift apart inside the solver.  Serialized files carry the
arcs explicitly and the validator cross-checks them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .cost import Cost, parse_decimal
from .errors import ParseError
from .instance import Instance

SOURCE = 0  # dummy segment id for depot 0
SINK = -1  # dummy segment id for depot 0'
DEPOT = 0  # node id of depot 0
DEPOT_RETURN = -1  # node id of depot 0' (co-located with 0)


@dataclass
class Segment:
    """A platoon's customer sequence between two consecutive dock/split events."""

    id: int
    nodes: list[int]
    servers: list[int]
    mvs: frozenset[int]

    @property
    def entry(self) -> int:
        return self.nodes[0]

    @property
    def exit(self) -> int:
        return self.nodes[-1]

    @property
    def customers(self) -> list[tuple[int, int]]:
        return list(zip(self.nodes, self.servers))

    def clone(self) -> "Segment":
        return Segment(self.id, list(self.nodes), list(self.servers), self.mvs)


class Solution:
    """Segments plus per-vehicle segment paths, with a cached exact cost."""

    __slots__ = ("segments", "paths", "cost_scaled", "next_id")

    def __init__(
        self,
        segments: dict[int, Segment],
        paths: dict[int, list[int]],
        cost_scaled: int = 0,
        next_id: int | None = None,
    ):
        self.segments = segments
        self.paths = paths
        self.cost_scaled = cost_scaled
        self.next_id = next_id if next_id is not None else (max(segments, default=0) + 1)

    # -- construction helpers -------------------------------------------

    def clone(self) -> "Solution":
        return Solution(
            {sid: seg.clone() for sid, seg in self.segments.items()},
            {mv: list(path) for mv, path in self.paths.items()},
            self.cost_scaled,
            self.next_id,
        )

    def alloc_id(self) -> int:
        sid = self.next_id
        self.next_id += 1
        return sid

    def cost(self, inst: Instance) -> Cost:
        return Cost(self.cost_scaled, inst.cost_den)

    # -- derived views ---------------------------------------------------

    def transition_groups(self) -> dict[tuple[int, int], list[int]]:
        """DAG arcs (by segment id, including SOURCE/SINK) -> vehicles crossing them."""
        groups: dict[tuple[int, int], list[int]] = {}
        for mv in sorted(self.paths):
            path = self.paths[mv]
            prev = SOURCE
            for sid in path:
                groups.setdefault((prev, sid), []).append(mv)
                prev = sid
            groups.setdefault((prev, SINK), []).append(mv)
        return groups

    def dag_arcs(self) -> list[tuple[int, int]]:
        return sorted(self.transition_groups().keys())

    def used_mvs(self) -> list[int]:
        return sorted(self.paths)

    def serving_mv(self) -> dict[int, int]:
        """Customer node -> serving vehicle (first listing wins on malformed input)."""
        out: dict[int, int] = {}
        for sid in sorted(self.segments):
            seg = self.segments[sid]
            for node, server in zip(seg.nodes, seg.servers):
                out.setdefault(node, server)
        return out

    def served_loads(self, inst: Instance) -> dict[int, int]:
        loads = {mv: 0 for mv in self.paths}
        for seg in self.segments.values():
            for node, server in zip(seg.nodes, seg.servers):
                if server in loads:
                    loads[server] += inst.demands[node]
        return loads

    def segment_of(self) -> dict[int, int]:
        """Customer node -> id of the segment listing it."""
        out: dict[int, int] = {}
        for sid in sorted(self.segments):
            for node in self.segments[sid].nodes:
                out.setdefault(node, sid)
        return out

    def _endpoint(self, sid: int, end: int) -> int:
        if sid == SOURCE:
            return DEPOT
        if sid == SINK:
            return DEPOT
        seg = self.segments[sid]
        return seg.entry if end == 0 else seg.exit

    def recompute_cost(self, inst: Instance) -> int:
        """Exact total: internal platoon arcs plus transition arcs between segments."""
        dist = inst._dist
        factor = inst.factor
        segments = self.segments
        total = 0
        for seg in segments.values():
            nodes = seg.nodes
            if len(nodes) > 1:
                acc = 0
                prev = nodes[0]
                for b in nodes[1:]:
                    acc += dist[prev][b]
                    prev = b
                total += acc * factor(len(seg.mvs))
        counts: dict[tuple[int, int], int] = {}
        for path in self.paths.values():
            prev = SOURCE
            for sid in path:
                arc = (prev, sid)
                counts[arc] = counts.get(arc, 0) + 1
                prev = sid
            arc = (prev, SINK)
            counts[arc] = counts.get(arc, 0) + 1
        for (a, b), cnt in counts.items():
            u = 0 if a == SOURCE else segments[a].exit
            v = 0 if b == SINK else segments[b].entry
            total += dist[u][v] * factor(cnt)
        self.cost_scaled = total
        return total

    def traversed_arcs(self) -> set[tuple[int, int]]:
        """All physical node arcs used by any vehicle (DEPOT_RETURN marks 0')."""
        arcs: set[tuple[int, int]] = set()
        for seg in self.segments.values():
            arcs.update(zip(seg.nodes, seg.nodes[1:]))
        for (a, b) in self.transition_groups():
            u = DEPOT if a == SOURCE else self.segments[a].exit
            v = DEPOT_RETURN if b == SINK else self.segments[b].entry
            arcs.add((u, v))
        return arcs

    # -- canonical form ---------------------------------------------------

    def canonicalize(self) -> None:
        """Drop empty segments and rows, merge adjacent segments with identical
        platoons.  Cost is not recomputed here."""
        changed = True
        while changed:
            changed = False
            for sid in sorted(self.segments):
                if not self.segments[sid].nodes:
                    del self.segments[sid]
                    for path in self.paths.values():
                        if sid in path:
                            path.remove(sid)
                    changed = True
            for mv in sorted(self.paths):
                if not self.paths[mv]:
                    del self.paths[mv]
                    changed = True
            # merge s -> t when every vehicle of s continues into t and the
            # platoons are identical
            nexts: dict[int, set[int | None]] = {}
            for path in self.paths.values():
                for i, sid in enumerate(path):
                    nxt = path[i + 1] if i + 1 < len(path) else None
                    nexts.setdefault(sid, set()).add(nxt)
            for sid in sorted(self.segments):
                if sid not in self.segments:
                    continue
                succ = nexts.get(sid)
                if not succ or len(succ) != 1:
                    continue
                t = next(iter(succ))
                if t is None or t == sid or t not in self.segments:
                    continue
                s_seg, t_seg = self.segments[sid], self.segments[t]
                if s_seg.mvs != t_seg.mvs:
                    continue
                s_seg.nodes.extend(t_seg.nodes)
                s_seg.servers.extend(t_seg.servers)
                del self.segments[t]
                for path in self.paths.values():
                    if t in path:
                        path.remove(t)
                changed = True
                break

    # -- serialization ----------------------------------------------------

    def renumbered(self) -> "Solution":
        """Copy with segment ids 1..n assigned in topological path order."""
        order: list[int] = []
        seen: set[int] = set()
        remaining = {mv: list(p) for mv, p in sorted(self.paths.items())}
        # repeatedly emit the first unblocked segment (all of its predecessors
        # already emitted) across rows, preserving determinism
        while any(remaining.values()):
            progress = False
            for mv in sorted(remaining):
                path = remaining[mv]
                while path and path[0] in seen:
                    path.pop(0)
                if path:
                    sid = path[0]
                    # emit only if no other row still has sid later than front
                    blocked = any(
                        sid in other[1:] for other in remaining.values()
                    )
                    if not blocked:
                        order.append(sid)
                        seen.add(sid)
                        path.pop(0)
                        progress = True
            if not progress:  # cycle in a malformed solution; keep id order
                for sid in sorted(self.segments):
                    if sid not in seen:
                        order.append(sid)
                        seen.add(sid)
        for sid in sorted(self.segments):
            if sid not in seen:
                order.append(sid)
        mapping = {old: i + 1 for i, old in enumerate(order)}
        segments = {
            mapping[sid]: Segment(
                mapping[sid], list(seg.nodes), list(seg.servers), seg.mvs
            )
            for sid, seg in self.segments.items()
        }
        paths = {mv: [mapping[sid] for sid in path] for mv, path in self.paths.items()}
        return Solution(segments, paths, self.cost_scaled, len(order) + 1)

    def to_json(self, inst: Instance) -> str:
        sol = self.renumbered()
        doc = {
            "instance_name": inst.name,
            "cost": str(sol.cost(inst)),
            "segments": [
                {
                    "id": sid,
                    "mvs": sorted(sol.segments[sid].mvs),
                    "customers": [
                        {"node": n, "serving_mv": s}
                        for n, s in zip(sol.segments[sid].nodes, sol.segments[sid].servers)
                    ],
                }
                for sid in sorted(sol.segments)
            ],
            "dag_arcs": [list(arc) for arc in sol.dag_arcs()],
            "mv_paths": {
                str(mv): [SOURCE] + sol.paths[mv] + [SINK] for mv in sorted(sol.paths)
            },
        }
        return json.dumps(doc, indent=1) + "\n"


def solution_from_json(text: str, inst: Instance) -> tuple[Solution, list[tuple[int, int]], Cost, str]:
    """Load a solution file.  Returns (solution, declared arcs, declared cost,
    declared instance name); structural checking is the validator's job."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad solution JSON: {exc}") from exc
    try:
        segments: dict[int, Segment] = {}
        for item in doc["segments"]:
            sid = int(item["id"])
            if sid in segments or sid in (SOURCE, SINK):
                raise ParseError(f"bad segment id {sid}")
            nodes = [int(c["node"]) for c in item["customers"]]
            servers = [int(c["serving_mv"]) for c in item["customers"]]
            segments[sid] = Segment(sid, nodes, servers, frozenset(int(m) for m in item["mvs"]))
        paths: dict[int, list[int]] = {}
        for mv_text, path in doc["mv_paths"].items():
            path = [int(s) for s in path]
            if len(path) < 2 or path[0] != SOURCE or path[-1] != SINK:
                raise ParseError(f"path for mv {mv_text} must run source to sink")
            paths[int(mv_text)] = path[1:-1]
        declared_arcs = [(int(a), int(b)) for a, b in doc["dag_arcs"]]
        declared_cost = parse_decimal(str(doc["cost"]), inst.cost_den)
        name = str(doc.get("instance_name", ""))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad solution document: {exc}") from exc
    sol = Solution(segments, paths, declared_cost.scaled)
    return sol, declared_arcs, declared_cost, name


def empty_solution(inst: Instance) -> Solution:
    return Solution({}, {}, 0)


def single_route_solution(inst: Instance, routes: dict[int, list[int]]) -> Solution:
    """Build a platoon-free solution: one segment per vehicle, serving its route."""
    segments: dict[int, Segment] = {}
    paths: dict[int, list[int]] = {}
    sid = 1
    for mv in sorted(routes):
        route = routes[mv]
        if not route:
            continue
        segments[sid] = Segment(sid, list(route), [mv] * len(route), frozenset([mv]))
        paths[mv] = [sid]
        sid += 1
    sol = Solution(segments, paths)
    sol.recompute_cost(inst)
    return sol


def mv_routes(sol: Solution) -> dict[int, list[int]]:
    """Each vehicle's full visit sequence, pass-through customers included.

    Routes start at depot 0 and end at the co-located return depot, rendered
    as node 0 as well.
    """
    out: dict[int, list[int]] = {}
    for mv in sorted(sol.paths):
        nodes = [DEPOT]
        for sid in sol.paths[mv]:
            nodes.extend(sol.segments[sid].nodes)
        nodes.append(DEPOT)
        out[mv] = nodes
    return out


def drop_repeats(routes: dict[int, list[int]], serving: dict[int, int]) -> dict[int, list[int]]:
    """Strip customers a vehicle merely passes, keeping the ones it serves.

    The result is a plain VRP route set; under the triangle inequality its
    total single-vehicle distance never exceeds the input's.
    """
    out: dict[int, list[int]] = {}
    for mv, route in routes.items():
        kept = [n for n in route[1:-1] if serving.get(n) == mv]
        out[mv] = [DEPOT] + kept + [DEPOT]
    return out


def is_standalone_route(sol: Solution, sid: int) -> bool:
    """True when the segment's platoon runs source -> segment -> sink with no
    docking or splitting anywhere on its way."""
    seg = sol.segments[sid]
    return all(sol.paths.get(mv) == [sid] for mv in seg.mvs)
