"""Feasibility validation of solutions against an instance."""

from __future__ import annotations

from dataclasses import dataclass, field

from .cost import Cost
from .instance import Instance
from .solution import SINK, SOURCE, Solution

UNSERVED = "UnservedCustomer"
MULTI_SERVED = "MultiServedCustomer"
CAPACITY = "CapacityBreach"
PLATOON = "PlatoonOverflow"
DAG_CYCLE = "DagCycle"
GANTT = "GanttMismatch"
CONSERVATION = "MvConservation"
COST = "CostMismatch"


@dataclass
class ValidationReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, detail: str) -> None:
        self.violations.append((code, detail))

    def codes(self) -> set[str]:
        return {code for code, _ in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"{code} {detail}" for code, detail in self.violations)


def _structural(sol: Solution, inst: Instance, report: ValidationReport) -> bool:
    """Row/column and membership consistency between Gantt rows and segments."""
    ok = True
    fleet = set(range(inst.fleet_size))
    for mv in sol.paths:
        if mv not in fleet:
            report.add(GANTT, f"unknown mv={mv}")
            ok = False
    for mv, path in sol.paths.items():
        if not path:
            report.add(GANTT, f"empty path for mv={mv}")
            ok = False
        if len(set(path)) != len(path):
            report.add(GANTT, f"mv={mv} path repeats a segment")
            ok = False
        for sid in path:
            if sid not in sol.segments:
                report.add(GANTT, f"mv={mv} path references missing segment {sid}")
                ok = False
    if not ok:
        return False
    for sid, seg in sorted(sol.segments.items()):
        if not seg.nodes:
            report.add(GANTT, f"segment={sid} has no customers")
            ok = False
        if not seg.mvs:
            report.add(GANTT, f"segment={sid} has no vehicles")
            ok = False
        for server in seg.servers:
            if server not in seg.mvs:
                report.add(GANTT, f"segment={sid} serving mv {server} not in platoon")
                ok = False
        rows = {mv for mv, path in sol.paths.items() if sid in path}
        if rows != set(seg.mvs):
            report.add(
                GANTT,
                f"segment={sid} platoon {sorted(seg.mvs)} != rows {sorted(rows)}",
            )
            ok = False
        for node in seg.nodes:
            if node not in inst.customers:
                report.add(GANTT, f"segment={sid} lists unknown customer {node}")
                ok = False
    return ok


def _dag_checks(
    sol: Solution,
    report: ValidationReport,
    declared_arcs: list[tuple[int, int]] | None,
) -> bool:
    derived = sol.transition_groups()
    # cycle detection over real segments via Kahn elimination
    succs: dict[int, set[int]] = {sid: set() for sid in sol.segments}
    indeg = {sid: 0 for sid in sol.segments}
    for (a, b) in derived:
        if a in sol.segments and b in sol.segments:
            if b not in succs[a]:
                succs[a].add(b)
                indeg[b] += 1
    queue = sorted(sid for sid, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        sid = queue.pop(0)
        seen += 1
        for t in sorted(succs[sid]):
            indeg[t] -= 1
            if indeg[t] == 0:
                queue.append(t)
    acyclic = seen == len(sol.segments)
    if not acyclic:
        report.add(DAG_CYCLE, "segment precedence contains a cycle")
    if declared_arcs is not None:
        declared = set(declared_arcs)
        actual = set(derived.keys())
        for arc in sorted(declared - actual):
            report.add(CONSERVATION, f"arc {arc} carries no vehicle")
        for arc in sorted(actual - declared):
            report.add(CONSERVATION, f"vehicle transition {arc} missing from dag arcs")
        # conservation proper: incoming transition groups must partition the platoon
        for sid, seg in sorted(sol.segments.items()):
            incoming: list[int] = []
            for (a, b), group in derived.items():
                if b == sid:
                    incoming.extend(group)
            if sorted(incoming) != sorted(seg.mvs):
                report.add(
                    CONSERVATION,
                    f"segment={sid} incoming groups {sorted(incoming)} != platoon",
                )
    return acyclic


def validate(
    sol: Solution,
    inst: Instance,
    declared_arcs: list[tuple[int, int]] | None = None,
    declared_cost: Cost | None = None,
) -> ValidationReport:
    """Check a solution against the instance.

    Violations are reported rather than raised.  Checks that depend on a
    sound structure (cost, conservation) are skipped when the structure
    itself is broken, so each defect surfaces under its own code.
    """
    report = ValidationReport()
    structural_ok = _structural(sol, inst, report)

    # serving multiplicity and capacity are meaningful even with minor
    # structural damage, but need known segments/rows
    if structural_ok:
        counts: dict[int, int] = {c: 0 for c in inst.customers}
        for seg in sol.segments.values():
            for node in seg.nodes:
                counts[node] += 1
        for c in inst.customers:
            if counts[c] == 0:
                report.add(UNSERVED, f"customer={c}")
            elif counts[c] > 1:
                report.add(MULTI_SERVED, f"customer={c} listed {counts[c]} times")

        for mv, load in sorted(sol.served_loads(inst).items()):
            if load > inst.capacity:
                report.add(CAPACITY, f"mv={mv} serves {load} > {inst.capacity}")

        for sid, seg in sorted(sol.segments.items()):
            if len(seg.mvs) > inst.max_platoon:
                report.add(
                    PLATOON,
                    f"segment={sid} platoon {len(seg.mvs)} > {inst.max_platoon}",
                )

        acyclic = _dag_checks(sol, report, declared_arcs)
        if acyclic:
            expected = declared_cost.scaled if declared_cost is not None else sol.cost_scaled
            actual = sol.clone().recompute_cost(inst)
            if actual != expected:
                den = inst.cost_den
                report.add(
                    COST,
                    f"declared {Cost(expected, den)} != recomputed {Cost(actual, den)}",
                )
    return report
