"""Command line front end for the whole pipeline.

Every subcommand reads versioned JSON artifacts and writes versioned
JSON (plus CSV tables for plotting) into the --out directory. Given
the same config file and seed, re-running any command reproduces its
output files byte for byte. Exit codes: 0 on success, 2 when the only
failure is an infeasible request or exhausted capacity, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .core import (
    CapacityExhaustedError,
    InfeasibleError,
    InterferenceProfile,
    NodeConstants,
    ResourceSpec,
    SystemIndexVector,
    write_json,
)
from .estimator import (
    EstimatorConfig,
    build_profile,
    stress_reference_tracks,
    tracks_from_json,
    tracks_to_json,
)
from .experiment import (
    ExperimentConfig,
    build_workload_set,
    evaluate_validation,
    run_colocation,
    run_hyperparam_sweep,
    run_loocv,
    run_scenario1,
    run_scenario2,
    train_bundle,
)
from .planner import ModelBundle, PlanningRequest, plan_capacity
from .scheduler import NodeState, ScheduleConfig, place
from .simulator import simulate_colocated
from .workload_synth import WorkloadSet, probe_for


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _config_from_args(args) -> ExperimentConfig:
    config = (ExperimentConfig.from_file(args.config) if args.config
              else ExperimentConfig())
    if args.seed is not None:
        config = replace(config, rng_seed=args.seed)
    return config


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, rows, columns=None) -> None:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_csv_cell(row.get(c)) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _check_set_matches(config: ExperimentConfig, wset: WorkloadSet) -> None:
    if wset.region != config.region:
        raise ValueError("workload set region does not match the config")
    if wset.base_spec != config.base_spec:
        raise ValueError("workload set base spec does not match the config")
    if len(wset.workloads) != config.workload_count:
        raise ValueError("workload set size does not match the config")


def _load_or_generate(args, config: ExperimentConfig) -> WorkloadSet:
    if getattr(args, "workloads", None):
        wset = WorkloadSet.load(args.workloads)
        _check_set_matches(config, wset)
        return wset
    return build_workload_set(config)


def cmd_gen(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    wset = build_workload_set(config)
    wset.save(out / "workloads.json")
    print(f"wrote {out / 'workloads.json'}: {len(wset.archetypes)} archetypes, "
          f"{len(wset.workloads)} workloads")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    wset = _load_or_generate(args, config)
    bundle = train_bundle(config, wset)
    bundle.save(out / "bundle.json")
    report = evaluate_validation(config, wset, bundle)
    write_json(out / "validation.json", report.to_json())
    print(f"wrote {out / 'bundle.json'} "
          f"(k={bundle.clustering.k}, features={list(bundle.selection.selected)})")
    print(f"validation error: mean={report.mean_error:.4f} "
          f"max={report.max_error:.4f}")
    return 0


def cmd_calibrate(args) -> int:
    out = _out_dir(args)
    tracks = stress_reference_tracks(NodeConstants())
    write_json(out / "reference_tracks.json", tracks_to_json(tracks))
    print(f"wrote {out / 'reference_tracks.json'}: {len(tracks)} stress levels")
    return 0


def cmd_plan(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    bundle = ModelBundle.load(args.bundle)
    raw = _load_json(args.indexes)
    indexes = SystemIndexVector.from_json(raw.get("indexes", raw))
    base = ResourceSpec.parse(args.base) if args.base else config.base_spec
    current = ResourceSpec.parse(args.current)
    tolerance = config.epsilon if args.tolerance is None else args.tolerance
    request = PlanningRequest(policy=args.policy, current_spec=current,
                              target_speedup=args.target,
                              performance_tolerance=tolerance,
                              cost_weights=config.cost_weights)
    surface = bundle.predict(base, indexes)
    record = {
        "schema": "plan/v1",
        "policy": args.policy,
        "base": base.key,
        "current": current.key,
        "target_speedup": args.target,
        "performance_tolerance": tolerance,
    }
    try:
        rec = plan_capacity(request, surface)
    except InfeasibleError as exc:
        record.update({"infeasible": True, "recommended": None,
                       "best_speedup": exc.best_speedup})
        write_json(out / "plan.json", record)
        print(f"infeasible: best achievable {exc.best_speedup:.3f}x",
              file=sys.stderr)
        return 2
    record.update({
        "infeasible": False,
        "recommended": rec.to_json(),
        "predicted_ratio": surface.speedup_at(rec) / surface.speedup_at(current),
    })
    write_json(out / "plan.json", record)
    print(f"recommended: {rec.key}")
    return 0


def cmd_estimate(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    wset = WorkloadSet.load(args.workloads)
    if args.tracks:
        tracks = tracks_from_json(_load_json(args.tracks))
    else:
        tracks = stress_reference_tracks(wset.constants)
    est = EstimatorConfig(levels=wset.constants.levels,
                          iops_scaler=wset.constants.iops_per_level,
                          reference_tracks=tracks)
    records = []
    for w in wset.workloads:
        spec = ResourceSpec.parse(args.spec) if args.spec else w.origin_spec
        probe = probe_for(w, spec, wset.constants,
                          noise_sigma=config.probe_noise, seed=w.noise_seed)
        profile = build_profile(probe, est)
        records.append({"workload_id": w.workload_id, "spec": spec.to_json(),
                        "profile": profile.to_json()})
    write_json(out / "profiles.json",
               {"schema": "profiles/v1", "profiles": records})
    print(f"wrote {out / 'profiles.json'}: {len(records)} profiles")
    return 0


def _load_requests(path) -> list[tuple[str, ResourceSpec, InterferenceProfile]]:
    raw = _load_json(path)
    rows = raw.get("requests", raw.get("profiles")) if isinstance(raw, dict) else raw
    if rows is None:
        raise ValueError("requests file needs a 'requests' or 'profiles' list")
    out = []
    for row in rows:
        out.append((row["workload_id"], ResourceSpec.from_json(row["spec"]),
                    InterferenceProfile.from_json(row["profile"])))
    return out


def _load_nodes(args, config: ExperimentConfig) -> list[NodeState]:
    if getattr(args, "nodes", None):
        raw = _load_json(args.nodes)
        if "nodes" in raw:
            return [NodeState.from_json(n) for n in raw["nodes"]]
        cap = ResourceSpec(int(raw.get("cores", config.node_cores)),
                           int(raw.get("memory_gb", config.node_memory_gb)))
        return [NodeState(node_id=i, capacity=cap)
                for i in range(int(raw["count"]))]
    cap = ResourceSpec(config.node_cores, config.node_memory_gb)
    return [NodeState(node_id=i, capacity=cap)
            for i in range(config.cluster_nodes)]


def cmd_schedule(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    requests = _load_requests(args.requests)
    nodes = _load_nodes(args, config)
    schedule_config = ScheduleConfig(policy=args.policy, scaler=args.scaler
                                     if args.scaler is not None else config.scaler)
    try:
        placements = place(requests, nodes, schedule_config)
    except CapacityExhaustedError as exc:
        print(f"capacity exhausted: {exc}", file=sys.stderr)
        return 2
    lines = [json.dumps(p.to_json(), sort_keys=True) for p in placements]
    (out / "placements.jsonl").write_text("\n".join(lines) + "\n",
                                          encoding="utf-8")
    print(f"wrote {out / 'placements.jsonl'}: {len(placements)} placements "
          f"({schedule_config.policy})")
    return 0


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    requests = {wid: (spec, profile)
                for wid, spec, profile in _load_requests(args.requests)}
    tenants = []
    with open(args.placements, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            wid = row["workload_id"]
            if wid not in requests:
                raise ValueError(f"placement for unknown workload {wid!r}")
            spec, profile = requests[wid]
            tenants.append((wid, int(row["node_id"]), spec, profile))
    cluster = config.cluster_spec
    if args.nodes_count is not None:
        cluster = replace(cluster, nodes=args.nodes_count)
    report = simulate_colocated(tenants, cluster)
    write_json(out / "simulation.json",
               {"schema": "simulation-report/v1", **report.to_json()})
    (out / "simulation.csv").write_text(report.to_csv(), encoding="utf-8")
    print(f"p_sys={report.p_sys:.4f} unfairness={report.unfairness:.4f} "
          f"({len(tenants)} tenants)")
    return 0


def _emit_report(out: Path, name: str, report, csv_columns=None) -> None:
    write_json(out / f"{name}.json", report.to_json())
    rows = [dict(r) for r in report.rows]
    for row in rows:
        row.pop("errors", None)
    _write_csv(out / f"{name}.csv", rows, columns=csv_columns)


def cmd_scenario1(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    report = run_scenario1(config, _load_or_generate(args, config))
    _emit_report(out, "scenario1", report)
    s = report.summary
    print(f"scenario1: {s['optimal']}/{s['feasible']} optimal, "
          f"{s['satisfied']}/{s['feasible']} satisfied, "
          f"{s['infeasible']} infeasible")
    return 0


def cmd_scenario2(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    report = run_scenario2(config, _load_or_generate(args, config))
    _emit_report(out, "scenario2", report)
    s = report.summary
    print(f"scenario2: {s['preserved']}/{s['workloads']} preserved, "
          f"core reduction {s['core_reduction_pct']:.1f}%, "
          f"memory reduction {s['memory_reduction_pct']:.1f}%")
    return 0


def cmd_colocate(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    report = run_colocation(config, _load_or_generate(args, config))
    _emit_report(out, "colocation", report)
    s = report.summary
    print(f"colocate: {s['unfairness_wins']}/{s['trials'] - s['aborted']} "
          f"unfairness wins, aborted {s['aborted']}")
    if s["mean_unfairness_reduction_pct"] is not None:
        print(f"mean unfairness reduction "
              f"{s['mean_unfairness_reduction_pct']:.1f}%, "
              f"min p_sys ratio {s['min_p_sys_ratio']:.4f}")
    return 2 if s["aborted"] == s["trials"] else 0


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    ks = _parse_int_list(args.ks) if args.ks else None
    bases = ([ResourceSpec.parse(b) for b in args.bases.split(",")]
             if args.bases else None)
    report = run_hyperparam_sweep(config, _load_or_generate(args, config),
                                  ks=ks, bases=bases)
    _emit_report(out, "sweep", report,
                 csv_columns=["k", "base", "mean_error", "max_error"])
    s = report.summary
    print(f"sweep: {s['points']} points, best k={s['best_k']} "
          f"base={s['best_base']} mean_error={s['best_mean_error']:.4f}")
    return 0


def cmd_loocv(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args)
    report = run_loocv(config, _load_or_generate(args, config))
    _emit_report(out, "loocv", report)
    s = report.summary
    print(f"loocv: {s['rounds']} rounds, mean={s['mean_error']:.4f} "
          f"max={s['max_error']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON file")
    common.add_argument("--seed", type=int, help="override the config rng_seed")
    common.add_argument("--out", default=".", help="output directory")

    parser = argparse.ArgumentParser(
        prog="capsched",
        description="scaling-surface capacity planning and contention-aware "
                    "scheduling, end to end")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common],
                       help="generate a workload set")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common],
                       help="fit selection, clustering and classifier")
    p.add_argument("--workloads", help="workload set JSON (default: generate)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", parents=[common],
                       help="write the stress reference tracks sidecar")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("plan", parents=[common],
                       help="recommend a spec from a trained bundle")
    p.add_argument("--bundle", required=True, help="bundle JSON from train")
    p.add_argument("--indexes", required=True, help="index vector JSON")
    p.add_argument("--policy", choices=["scale-up", "scale-down"],
                   default="scale-up")
    p.add_argument("--current", required=True,
                   help="current spec, e.g. 2c4g or 2,4")
    p.add_argument("--target", type=float, default=1.0,
                   help="target speedup over current (scale-up)")
    p.add_argument("--tolerance", type=float,
                   help="performance tolerance (scale-down)")
    p.add_argument("--base", help="base spec whose classifier to use")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("estimate", parents=[common],
                       help="quantify interference profiles with probe sweeps")
    p.add_argument("--workloads", required=True, help="workload set JSON")
    p.add_argument("--tracks", help="reference tracks JSON from calibrate")
    p.add_argument("--spec", help="probe every workload at this spec "
                                  "instead of its origin")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("schedule", parents=[common],
                       help="place workloads onto nodes")
    p.add_argument("--requests", required=True,
                   help="JSON with per-workload spec and profile")
    p.add_argument("--nodes", help="node inventory JSON (default: config)")
    p.add_argument("--policy", choices=["ursa", "lrp"], default="ursa")
    p.add_argument("--scaler", type=float, help="risk amplification base")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", parents=[common],
                       help="run a placement through the degradation model")
    p.add_argument("--placements", required=True, help="placements JSONL")
    p.add_argument("--requests", required=True,
                   help="JSON with per-workload spec and profile")
    p.add_argument("--nodes-count", type=int,
                   help="override the cluster node count")
    p.set_defaults(func=cmd_simulate)

    for name, func, extra in [
        ("scenario1", cmd_scenario1, "scale-up planning study"),
        ("scenario2", cmd_scenario2, "scale-down planning study"),
        ("colocate", cmd_colocate, "co-location placement trials"),
        ("loocv", cmd_loocv, "leave-one-out validation of the pipeline"),
    ]:
        p = sub.add_parser(name, parents=[common], help=extra)
        p.add_argument("--workloads", help="workload set JSON (default: generate)")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", parents=[common],
                       help="validation error across k and base configs")
    p.add_argument("--workloads", help="workload set JSON (default: generate)")
    p.add_argument("--ks", help="comma list or lo:hi ranges, e.g. 2:30")
    p.add_argument("--bases", help="comma list of base specs, e.g. 1c2g,6c8g")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleError, CapacityExhaustedError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
