"""Batch benchmark harness: instance sweeps over platoon limits and
component ablations, with CSV emission."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .cost import render_decimal
from .errors import MvrpError
from .instance import Instance, derive_instance, parse_instance
from .search import SearchParams, multi_start

ABLATIONS = ("relocate", "merge", "shaking", "multi-start")

CSV_HEADER = "instance,customers,fleet,max_platoon,config,objective,time_sec,iters_to_best,best_start,status"


@dataclass
class BenchRow:
    instance: str
    customers: int
    fleet: int
    max_platoon: int
    config: str
    objective: str  # decimal string, empty on failure
    time_sec: float
    iters_to_best: int
    best_start: int
    status: str = "ok"

    def to_csv(self) -> str:
        return (
            f"{self.instance},{self.customers},{self.fleet},{self.max_platoon},"
            f"{self.config},{self.objective},{self.time_sec:.3f},"
            f"{self.iters_to_best},{self.best_start},{self.status}"
        )


def ablated_params(base: SearchParams, config: str) -> SearchParams:
    kwargs = dict(
        starts=base.starts,
        max_iterations=base.max_iterations,
        no_improve_shake_trigger=base.no_improve_shake_trigger,
        tenure=base.tenure,
        sparse_fill_ratio=base.sparse_fill_ratio,
        shake_count_max=base.shake_count_max,
        rng_seed=base.rng_seed,
        use_merges=base.use_merges,
        use_relocates=base.use_relocates,
        use_shaking=base.use_shaking,
    )
    if config == "no_relocate":
        kwargs["use_relocates"] = False
    elif config == "no_merge":
        kwargs["use_merges"] = False
    elif config == "no_shaking":
        kwargs["use_shaking"] = False
    elif config == "no_multi-start":
        kwargs["starts"] = 1
    elif config != "full":
        raise ValueError(f"unknown config {config!r}")
    return SearchParams(**kwargs)


def run_one(inst: Instance, l_value: int, config: str, base: SearchParams) -> BenchRow:
    params = ablated_params(base, config)
    sized = (
        inst
        if l_value == inst.max_platoon
        else derive_instance(
            inst,
            list(inst.customers),
            max_platoon=l_value,
            fleet_size=inst.fleet_size,
            name=inst.name,
        )
    )
    started = time.monotonic()
    try:
        best, traces = multi_start(sized, params)
    except MvrpError as exc:
        return BenchRow(
            inst.name,
            inst.n_customers,
            inst.fleet_size,
            l_value,
            config,
            "",
            time.monotonic() - started,
            0,
            -1,
            status=f"error:{type(exc).__name__}",
        )
    elapsed = time.monotonic() - started
    best_scaled = best.cost_scaled
    best_trace = min(
        (t for t in traces if t.best_scaled == best_scaled),
        key=lambda t: t.start_index,
    )
    return BenchRow(
        inst.name,
        inst.n_customers,
        inst.fleet_size,
        l_value,
        config,
        render_decimal(best_scaled, sized.cost_den),
        elapsed,
        best_trace.iterations_to_best(),
        best_trace.start_index,
    )


def _job(args):
    path, l_value, config, base = args
    inst = parse_instance(Path(path).read_text())
    return run_one(inst, l_value, config, base)


def run_bench(
    paths: list[Path],
    params: SearchParams,
    l_sweep: list[int] | None = None,
    ablate: list[str] | None = None,
) -> list[BenchRow]:
    """One row per instance, platoon limit and configuration.  Rows come back
    ordered by (instance name, L, config) regardless of worker scheduling."""
    jobs = []
    for path in sorted(paths):
        inst = parse_instance(Path(path).read_text())
        l_values = l_sweep or [inst.max_platoon]
        configs = ["full"] + [f"no_{a}" for a in (ablate or [])]
        for l_value in l_values:
            for config in configs:
                jobs.append((str(path), l_value, config, params))
    workers = int(os.environ.get("MVRP_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_job, jobs))
    else:
        rows = [_job(job) for job in jobs]
    rows.sort(key=lambda r: (r.instance, r.max_platoon, r.config))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    return "\n".join([CSV_HEADER] + [r.to_csv() for r in rows]) + "\n"


def ratio_summary(rows: list[BenchRow]) -> str:
    """Objective ratios Obj_L / Obj_1 per instance for the full config, plus
    a mean row; needs an L sweep that includes 1."""
    by_inst: dict[str, dict[int, float]] = {}
    for r in rows:
        if r.config != "full" or r.status != "ok":
            continue
        by_inst.setdefault(r.instance, {})[r.max_platoon] = float(r.objective)
    l_values = sorted({l for entry in by_inst.values() for l in entry})
    lines = ["instance," + ",".join(f"ratio_l{l}" for l in l_values)]
    sums = {l: 0.0 for l in l_values}
    count = 0
    for name in sorted(by_inst):
        entry = by_inst[name]
        if 1 not in entry:
            continue
        base = entry[1]
        count += 1
        ratios = []
        for l in l_values:
            value = entry.get(l)
            ratios.append("" if value is None else f"{value / base:.4f}")
            if value is not None:
                sums[l] += value / base
        lines.append(f"{name}," + ",".join(ratios))
    if count:
        lines.append("mean," + ",".join(f"{sums[l] / count:.4f}" for l in l_values))
    return "\n".join(lines) + "\n"
