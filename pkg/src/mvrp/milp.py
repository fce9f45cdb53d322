"""Arc-flow MILP model exporter (LP file format).

The model uses three-index arc variables per vehicle plus platoon-size arc
variables, an MTZ-style ordering variable for subtour elimination, and
big-M linking of served loads.  The toolkit writes the model for external
solvers instead of embedding one.

Variable naming: x_k_i_j, y_l_i_j, u_i, w_k_i, d_k_i, with the return depot
written as node index N+1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cost import render_decimal
from .instance import Instance


def arc_set(n: int) -> list[tuple[int, int]]:
    """Arcs: depot to customers, customer pairs, customers to return depot,
    and the direct depot-to-return arc for unused vehicles.  The return
    depot is node n+1."""
    arcs: list[tuple[int, int]] = [(0, j) for j in range(1, n + 1)]
    arcs += [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    arcs += [(i, n + 1) for i in range(1, n + 1)]
    arcs.append((0, n + 1))
    return arcs


def variable_counts(n: int, k: int, l: int) -> dict[str, int]:
    a = len(arc_set(n))
    return {
        "x": k * a,
        "y": l * a,
        "u": n + 2,
        "w": k * n,
        "d": k * (n + 2),
    }


def constraint_counts(n: int, k: int, l: int) -> dict[str, int]:
    a = len(arc_set(n))
    serving_arcs = n * n  # arcs whose head is a customer
    return {
        "visit": n,
        "flow": k * n,
        "depot": 2 * k,
        "order": k * a,
        "load_inc": k * serving_arcs,
        "load_mono": k * a,
        "serve_once": n,
        "assign": k * n,
        "platoon_cap": a,
        "platoon_min": a,
        "platoon_def": l * a,
    }


@dataclass(frozen=True)
class MilpModel:
    text: str
    variables: dict[str, int]
    constraints: dict[str, int]

    @property
    def n_variables(self) -> int:
        return sum(self.variables.values())

    @property
    def n_constraints(self) -> int:
        return sum(self.constraints.values())


def build_milp(inst: Instance) -> MilpModel:
    n = inst.n_customers
    k = inst.fleet_size
    l_max = inst.max_platoon
    q = inst.demands
    cap = inst.capacity
    arcs = arc_set(n)
    sink = n + 1

    def dist(i: int, j: int) -> int:
        return inst.dist(0 if i == sink else i, 0 if j == sink else j)

    def x(kk: int, i: int, j: int) -> str:
        return f"x_{kk}_{i}_{j}"

    def y(l: int, i: int, j: int) -> str:
        return f"y_{l}_{i}_{j}"

    lines = [f"\\ MVRP model for instance {inst.name}", "Minimize", " obj:"]
    terms = []
    for l in range(1, l_max + 1):
        for (i, j) in arcs:
            coeff = dist(i, j) * inst.factor(l)
            if coeff:
                terms.append(f"{render_decimal(coeff, inst.cost_den)} {y(l, i, j)}")
    for pos in range(0, len(terms), 6):
        lines.append("  " + " + ".join(terms[pos : pos + 6]) + (" +" if pos + 6 < len(terms) else ""))

    lines.append("Subject To")
    rows = 0

    def row(name: str, body: str) -> None:
        nonlocal rows
        rows += 1
        lines.append(f" {name}: {body}")

    # each customer is visited at least once
    for j in range(1, n + 1):
        lhs = " + ".join(x(kk, i, j) for kk in range(k) for (i, jj) in arcs if jj == j)
        row(f"visit_{j}", f"{lhs} >= 1")
    # per-vehicle flow conservation at customers
    for kk in range(k):
        for j in range(1, n + 1):
            inc = " + ".join(x(kk, i, j) for (i, jj) in arcs if jj == j)
            out = " - ".join(x(kk, j, i) for (jj, i) in arcs if jj == j)
            row(f"flow_{kk}_{j}", f"{inc} - {out} = 0")
    # each vehicle leaves the depot and enters the return depot exactly once
    for kk in range(k):
        out = " + ".join(x(kk, 0, j) for (i, j) in arcs if i == 0)
        row(f"depout_{kk}", f"{out} = 1")
        inc = " + ".join(x(kk, i, sink) for (i, j) in arcs if j == sink)
        row(f"depin_{kk}", f"{inc} = 1")
    # subtour elimination via a shared visit order (big-M = N)
    for kk in range(k):
        for (i, j) in arcs:
            row(
                f"order_{kk}_{i}_{j}",
                f"u_{i} - u_{j} + {n} {x(kk, i, j)} <= {n - 1}",
            )
    # served load grows by q_j when the serving vehicle drives i -> j
    for kk in range(k):
        for (i, j) in arcs:
            if not 1 <= j <= n:
                continue
            big = cap + q[j]
            row(
                f"load_inc_{kk}_{i}_{j}",
                f"d_{kk}_{i} - d_{kk}_{j} + {big} {x(kk, i, j)} + {big} w_{kk}_{j}"
                f" <= {2 * big - q[j]}",
            )
    # served load never shrinks along a traversal (big-M = Q)
    for kk in range(k):
        for (i, j) in arcs:
            row(
                f"load_mono_{kk}_{i}_{j}",
                f"d_{kk}_{i} - d_{kk}_{j} + {cap} {x(kk, i, j)} <= {cap}",
            )
    # exactly one serving vehicle per customer
    for j in range(1, n + 1):
        row(f"serve_once_{j}", " + ".join(f"w_{kk}_{j}" for kk in range(k)) + " = 1")
    # a vehicle serves only customers it visits
    for kk in range(k):
        for j in range(1, n + 1):
            inc = " + ".join(x(kk, i, j) for (i, jj) in arcs if jj == j)
            row(f"assign_{kk}_{j}", f"{inc} - w_{kk}_{j} >= 0")
    # platoon size limit per arc
    for (i, j) in arcs:
        lhs = " + ".join(x(kk, i, j) for kk in range(k))
        row(f"platoon_cap_{i}_{j}", f"{lhs} <= {l_max}")
    # some platoon variable switches on when the arc is used (big-M = L)
    for (i, j) in arcs:
        ys = " + ".join(f"{l_max} {y(l, i, j)}" for l in range(1, l_max + 1))
        xs = " - ".join(x(kk, i, j) for kk in range(k))
        row(f"platoon_min_{i}_{j}", f"{ys} - {xs} >= 0")
    # y_l turns off unless exactly l vehicles share the arc
    for l in range(1, l_max + 1):
        for (i, j) in arcs:
            xs = " + ".join(x(kk, i, j) for kk in range(k))
            row(
                f"platoon_def_{l}_{i}_{j}",
                f"{l_max} {y(l, i, j)} + {xs} <= {l_max + l}",
            )

    lines.append("Bounds")
    lines.append(" u_0 = 0")
    for i in range(1, n + 1):
        lines.append(f" 1 <= u_{i} <= {n}")
    lines.append(f" 0 <= u_{sink} <= {n + 1}")
    for kk in range(k):
        for i in range(0, n + 2):
            lines.append(f" 0 <= d_{kk}_{i} <= {cap}")

    lines.append("Binaries")
    names = [x(kk, i, j) for kk in range(k) for (i, j) in arcs]
    names += [y(l, i, j) for l in range(1, l_max + 1) for (i, j) in arcs]
    names += [f"w_{kk}_{j}" for kk in range(k) for j in range(1, n + 1)]
    for pos in range(0, len(names), 8):
        lines.append(" " + " ".join(names[pos : pos + 8]))
    lines.append("End")

    model = MilpModel(
        text="\n".join(lines) + "\n",
        variables=variable_counts(n, k, l_max),
        constraints=constraint_counts(n, k, l_max),
    )
    if rows != model.n_constraints:
        raise AssertionError(f"constraint count drift: {rows} != {model.n_constraints}")
    return model


def export_milp(inst: Instance) -> str:
    return build_milp(inst).text
