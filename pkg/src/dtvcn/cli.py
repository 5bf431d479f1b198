"""Experiment orchestration and command-line interface.

Subcommands: generate, metrics, traffic, route, theory, compare, and the
full pipeline `run` (generate -> metrics -> traffic -> routing/rates).  A
JSON config file fully determines a run; command-line flags override file
values.  All stochastic stages are seeded, so repeated runs of the same
config produce byte-identical outputs.

Exit codes: 0 success, 2 invalid config, 3 runtime error.  The environment
variable DTVCN_THREADS caps worker parallelism for `compare` (0 = auto).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import correlation, flowcontrol, generator, graph, metrics, traffic
from .exceptions import ConfigError, DtvcnError, TooFewModelsError

log = logging.getLogger(__name__)


# -- configuration -------------------------------------------------------

@dataclass(frozen=True)
class RateControlParams:
    c: float = 1.0
    capacity: float = 1.0
    omega: float = 2.0
    theta: float = 1.0
    dt: float = 0.01
    tol: float = 1e-6
    max_iters: int = 1_000_000
    x0: float = 0.1
    a_low: float = 1.0
    a_high: float = 10.0
    b: float = 1.0
    path_cap: int = 64

    def price_model(self) -> flowcontrol.LinkPriceModel:
        return flowcontrol.LinkPriceModel(self.c, self.capacity, self.omega)


@dataclass(frozen=True)
class TrafficParams:
    warmup: int = 400
    window: int = 1600
    sweep_points: int = 7
    eps: float = 0.05
    rounds: int = 8
    n_seeds: int = 3
    seed: int = 777
    estimate: bool = True


@dataclass(frozen=True)
class UserParams:
    count: int = 100
    seed: int = 12345


ALL_OUTPUTS = ("graph", "edges", "trace", "metrics", "fits", "traffic",
               "routing", "rates", "andn", "scores")


@dataclass(frozen=True)
class ExperimentConfig:
    growth: generator.GrowthParams
    capacity: traffic.CapacityModel
    rate: RateControlParams
    traffic: TrafficParams
    users: UserParams
    outputs: tuple = ALL_OUTPUTS


def _section(doc: dict, name: str, cls, defaults):
    src = doc.get(name, {})
    if not isinstance(src, dict):
        raise ConfigError(name, "must be an object")
    known = set(defaults.__dataclass_fields__)
    values = {}
    for key, val in src.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
        values[key] = val
    try:
        return replace(defaults, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    known = {"growth", "capacity", "rate_control", "traffic", "users", "outputs"}
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown section")
    growth = _section(doc, "growth", generator.GrowthParams, generator.GrowthParams())
    try:
        growth.validate()
    except DtvcnError as exc:
        field = str(exc).split()[0]
        raise ConfigError(f"growth.{field}", str(exc)) from exc
    capacity = _section(doc, "capacity", traffic.CapacityModel, traffic.CapacityModel())
    try:
        capacity.validate()
    except DtvcnError as exc:
        field = str(exc).split()[0] if "cap_beta" in str(exc) else "kind"
        raise ConfigError(f"capacity.{field}", str(exc)) from exc
    rate = _section(doc, "rate_control", RateControlParams, RateControlParams())
    traf = _section(doc, "traffic", TrafficParams, TrafficParams())
    users = _section(doc, "users", UserParams, UserParams())
    if users.count < 0:
        raise ConfigError("users.count", "must be >= 0")
    outputs = doc.get("outputs", list(ALL_OUTPUTS))
    if not isinstance(outputs, (list, tuple)):
        raise ConfigError("outputs", "must be a list of artifact names")
    for name in outputs:
        if name not in ALL_OUTPUTS:
            raise ConfigError(f"outputs.{name}", f"unknown artifact (choose from {ALL_OUTPUTS})")
    return ExperimentConfig(growth, capacity, rate, traf, users, tuple(outputs))


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    doc = {}
    if path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
    growth = dict(doc.get("growth", {}))
    users = dict(doc.get("users", {}))
    if overrides.get("model") is not None:
        growth["model"] = overrides["model"]
    if overrides.get("seed") is not None:
        growth["rng_seed"] = overrides["seed"]
    for key in ("beta", "gamma"):
        if overrides.get(key) is not None:
            growth[key] = overrides[key]
    if overrides.get("m") is not None:
        growth["m"] = overrides["m"]
    if overrides.get("nodes") is not None:
        n0 = growth.get("n0", generator.GrowthParams().n0)
        steps = overrides["nodes"] - n0
        if steps < 0:
            raise ConfigError("growth.steps", f"--nodes {overrides['nodes']} is below n0={n0}")
        growth["steps"] = steps
    if overrides.get("users") is not None:
        users["count"] = overrides["users"]
    doc = dict(doc)
    doc["growth"] = growth
    if users:
        doc["users"] = users
    return config_from_dict(doc)


# -- CSV plumbing --------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# -- pipeline stages -----------------------------------------------------

def stage_generate(cfg: ExperimentConfig, outdir: str) -> graph.EventLog:
    trace = []
    event_log = generator.grow(cfg.growth, trace=trace)
    if "graph" in cfg.outputs:
        graph.save_event_log(event_log, os.path.join(outdir, "graph.json"))
    if "trace" in cfg.outputs:
        _write_csv(os.path.join(outdir, "trace.csv"),
                   ["t", "nodes", "edges", "f_add", "f_rewire", "f_delete",
                    "skipped_deletes"], trace)
    return event_log


def stage_metrics(cfg: ExperimentConfig, snap: graph.GraphSnapshot, bc,
                  outdir: str) -> metrics.MetricsReport:
    report = metrics.build_report(snap, k_min=cfg.growth.f_add, bc=bc)
    lam_c = traffic.lambda_c_theoretical(snap, cfg.capacity, bc=bc)
    if "metrics" in cfg.outputs:
        _write_csv(os.path.join(outdir, "metrics.csv"),
                   ["N", "model", "clustering", "diameter", "apl", "alpha",
                    "lambda_c", "rc"],
                   [[report.node_count, cfg.growth.model, report.clustering,
                     report.diameter, report.apl, report.alpha_fit,
                     lam_c if math.isfinite(lam_c) else None, report.rc]])
    if "fits" in cfg.outputs:
        deg = snap.degree_array()
        _write_csv(os.path.join(outdir, "fits.csv"),
                   ["alpha_fit", "alpha_stderr", "bc_slope", "delta_fit",
                    "r_deg", "r_g", "k_min", "k_star"],
                   [[report.alpha_fit, report.alpha_stderr, report.bc_slope,
                     report.delta_fit, correlation.pearson_r(deg, snap),
                     correlation.pearson_r(bc, snap), cfg.growth.f_add,
                     report.k_star]])
    if "andn" in cfg.outputs:
        correlation.write_andn_csv(os.path.join(outdir, "andn.csv"),
                                   correlation.andn(snap))
    if "scores" in cfg.outputs:
        scores = correlation.node_scores(snap, betweenness=bc,
                                         capacity=traffic.capacities(snap, cfg.capacity, bc=bc))
        correlation.write_node_scores_csv(os.path.join(outdir, "node_scores.csv"), scores)
    if "edges" in cfg.outputs:
        graph.write_edge_list(snap, os.path.join(outdir, "edges.txt"))
    return report


def stage_traffic(cfg: ExperimentConfig, snap: graph.GraphSnapshot, outdir: str):
    """Lambda sweep plus bisection estimate, on the largest component if needed."""
    sim_snap = snap
    comps = graph.connected_components(snap)
    if len(comps) > 1:
        sim_snap, _ = graph.largest_component(snap)
        log.warning("graph disconnected; traffic runs on largest component (%d of %d nodes)",
                    sim_snap.node_count, snap.node_count)
    tp = cfg.traffic
    bc = metrics.betweenness(sim_snap)
    caps = traffic.capacities(sim_snap, cfg.capacity, bc=bc)
    theo = traffic.lambda_c_theoretical(sim_snap, cfg.capacity, bc=bc)
    tables = traffic.routing_tables(sim_snap)
    if math.isfinite(theo):
        lams = [theo * f for f in np.linspace(0.25, 2.0, tp.sweep_points)]
    else:
        lams = list(np.linspace(0.1, 1.0, tp.sweep_points))
    rows = []
    for lam in lams:
        run = traffic.simulate(sim_snap, cfg.capacity, float(lam), tp.seed,
                               steps=(tp.warmup, tp.window), tables=tables, caps=caps)
        rows.append([float(lam), traffic.order_parameter(run),
                     traffic.window_slope(run), run.delivered, run.generated])
    if "traffic" in cfg.outputs:
        _write_csv(os.path.join(outdir, "lambda_sweep.csv"),
                   ["lambda", "zeta", "slope", "delivered", "generated"], rows)
        est = None
        if tp.estimate:
            est = traffic.estimate_lambda_c(sim_snap, cfg.capacity, tp.seed,
                                            eps=tp.eps, rounds=tp.rounds,
                                            n_seeds=tp.n_seeds,
                                            steps=(tp.warmup, tp.window))
        _write_csv(os.path.join(outdir, "lambda_c.csv"),
                   ["lambda_c_theoretical", "lambda_c_estimated"],
                   [[theo if math.isfinite(theo) else None,
                     est.value if est is not None else None]])
    return theo


def sample_user_pairs(snap: graph.GraphSnapshot, count: int, seed: int):
    """Uniform distinct ordered (s, d) pairs within connected components."""
    n = snap.node_count
    label = np.zeros(n, dtype=np.int64)
    for ci, comp in enumerate(graph.connected_components(snap)):
        for v in comp:
            label[v] = ci
    rng = np.random.default_rng(seed)
    pairs = []
    seen = set()
    budget = 1000 * max(count, 1)
    while len(pairs) < count and budget > 0:
        budget -= 1
        s = int(rng.integers(n))
        d = int(rng.integers(n))
        if s == d or label[s] != label[d] or (s, d) in seen:
            continue
        seen.add((s, d))
        pairs.append((s, d, float(rng.uniform(1.0, 10.0))))
    return pairs


def stage_route(cfg: ExperimentConfig, snap: graph.GraphSnapshot, bc, outdir: str):
    scores = correlation.node_scores(snap, betweenness=bc)
    pairs = sample_user_pairs(snap, cfg.users.count, cfg.users.seed)
    rp = cfg.rate
    sessions = [flowcontrol.make_session(snap, s, d, scores.r_g_local,
                                         cap=rp.path_cap, a=a, b=rp.b)
                for s, d, a in pairs]
    if not sessions:
        if "routing" in cfg.outputs:
            _write_csv(os.path.join(outdir, "routing.csv"),
                       ["user", "s", "d", "chi", "wg_min", "wg_max",
                        "xstar_min_path", "xstar_max_path", "converged"], [])
        return []
    pm = rp.price_model()
    kwargs = dict(theta=rp.theta, dt=rp.dt, tol=rp.tol,
                  max_iters=rp.max_iters, x0=rp.x0)
    flowcontrol.assign_routes(sessions, "min")
    sol_min = flowcontrol.evolve_rates(sessions, pm, **kwargs)
    flowcontrol.assign_routes(sessions, "max")
    sol_max = flowcontrol.evolve_rates(sessions, pm, **kwargs)
    conv = sol_min.converged and sol_max.converged
    rows = []
    for i, sess in enumerate(sessions):
        rows.append([i, sess.source, sess.destination, sess.chi,
                     min(sess.wg_scores), max(sess.wg_scores),
                     float(sol_min.x_star[i]), float(sol_max.x_star[i]), conv])
    if "routing" in cfg.outputs:
        _write_csv(os.path.join(outdir, "routing.csv"),
                   ["user", "s", "d", "chi", "wg_min", "wg_max",
                    "xstar_min_path", "xstar_max_path", "converged"], rows)
    if "rates" in cfg.outputs:
        trace_rows = [[it, u, float(xs[u])]
                      for it, xs in sol_min.trace for u in range(len(sessions))]
        _write_csv(os.path.join(outdir, "rate_trace.csv"),
                   ["iter", "user", "x"], trace_rows)
    return rows


def run(cfg: ExperimentConfig, outdir: str) -> dict:
    """Full pipeline; returns {artifact name: path} for everything written."""
    os.makedirs(outdir, exist_ok=True)
    event_log = stage_generate(cfg, outdir)
    snap = graph.replay(event_log)
    bc = metrics.betweenness(snap)
    stage_metrics(cfg, snap, bc, outdir)
    stage_traffic(cfg, snap, outdir)
    stage_route(cfg, snap, bc, outdir)
    names = {"graph": "graph.json", "edges": "edges.txt", "trace": "trace.csv",
             "metrics": "metrics.csv", "fits": "fits.csv",
             "traffic": "lambda_sweep.csv", "routing": "routing.csv",
             "rates": "rate_trace.csv", "andn": "andn.csv",
             "scores": "node_scores.csv"}
    return {k: os.path.join(outdir, v) for k, v in names.items() if k in cfg.outputs}


# -- model comparison ----------------------------------------------------

def _compare_cell(args):
    cfg, n, model = args
    growth = replace(cfg.growth, model=model, steps=n - cfg.growth.n0)
    event_log = generator.grow(growth)
    snap = graph.replay(event_log)
    bc = metrics.betweenness(snap)
    report = metrics.build_report(snap, k_min=growth.f_add, bc=bc)
    lam_c = traffic.lambda_c_theoretical(snap, cfg.capacity, bc=bc)
    return [n, model, report.clustering, report.diameter, report.apl,
            report.alpha_fit, lam_c if math.isfinite(lam_c) else None, report.rc]


def _worker_count() -> int:
    raw = os.environ.get("DTVCN_THREADS", "")
    if not raw:
        return 1
    value = int(raw)
    return os.cpu_count() or 1 if value == 0 else max(1, value)


def compare_models(cfg: ExperimentConfig, models, n_values) -> list:
    """One metrics row per (N, model) cell with matched m/beta/gamma/seed."""
    if len(models) < 2:
        raise TooFewModelsError(f"need at least 2 models, got {list(models)}")
    for m in models:
        if m not in generator.MODELS:
            raise ConfigError("models", f"unknown model {m!r}")
    cells = [(cfg, n, model) for n in n_values for model in models]
    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_compare_cell, cells))
    else:
        rows = [_compare_cell(c) for c in cells]
    return rows


# -- argument parsing ----------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--nodes", type=int, help="target network size |N|")
    p.add_argument("--model", choices=generator.MODELS)
    p.add_argument("--seed", type=int, help="growth RNG seed")
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--m", type=int, help="links-per-step budget M")
    p.add_argument("--users", type=int, help="number of (s,d) users")
    p.add_argument("-v", "--verbose", action="store_true")


def _overrides(args) -> dict:
    return {k: getattr(args, k, None)
            for k in ("nodes", "model", "seed", "beta", "gamma", "m", "users")}


def _load(args) -> ExperimentConfig:
    return load_config(args.config, _overrides(args))


def _load_snapshot(path: str) -> graph.GraphSnapshot:
    return graph.replay(graph.load_event_log(path))


def cmd_generate(args):
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    event_log = stage_generate(cfg, args.out)
    snap = graph.replay(event_log)
    if "edges" in cfg.outputs:
        graph.write_edge_list(snap, os.path.join(args.out, "edges.txt"))
    print(f"generated {snap.node_count} nodes / {snap.edge_count} edges -> {args.out}")
    return 0


def cmd_metrics(args):
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    snap = _load_snapshot(args.graph)
    bc = metrics.betweenness(snap)
    report = stage_metrics(cfg, snap, bc, args.out)
    print(f"metrics for N={report.node_count}: clustering={report.clustering:.4f} "
          f"diameter={report.diameter} apl={report.apl:.4f}")
    return 0


def cmd_traffic(args):
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    snap = _load_snapshot(args.graph)
    theo = stage_traffic(cfg, snap, args.out)
    print(f"lambda_c_theoretical={theo}")
    return 0


def cmd_route(args):
    cfg = _load(args)
    os.makedirs(args.out, exist_ok=True)
    snap = _load_snapshot(args.graph)
    bc = metrics.betweenness(snap)
    rows = stage_route(cfg, snap, bc, args.out)
    print(f"routed {len(rows)} users -> {args.out}")
    return 0


def cmd_theory(args):
    tc = generator.theory_constants(args.beta, args.gamma, args.zeta, args.m)
    row = [args.beta, args.gamma, args.zeta, args.m, tc.c, tc.k1, tc.k2,
           tc.alpha, tc.k1_in_range]
    header = ["beta", "gamma", "zeta", "m", "c", "k1", "k2", "alpha", "k1_in_range"]
    if args.out_file:
        _write_csv(args.out_file, header, [row])
    else:
        print(",".join(header))
        print(",".join(_fmt(v) for v in row))
    return 0


def cmd_compare(args):
    cfg = _load(args)
    models = args.models.split(",")
    n_values = [int(x) for x in args.n_list.split(",")]
    rows = compare_models(cfg, models, n_values)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "compare.csv")
    _write_csv(path, ["N", "model", "clustering", "diameter", "apl", "alpha",
                      "lambda_c", "rc"], rows)
    print(f"wrote {len(rows)} rows -> {path}")
    return 0


def cmd_run(args):
    cfg = _load(args)
    paths = run(cfg, args.out)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtvcn",
        description="Grow, measure and route time-varying disassortative "
                    "communication networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="grow a network and store its event log")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("metrics", help="structural metrics of a stored network")
    _add_common(p)
    p.add_argument("--graph", required=True, help="event-log JSON")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("traffic", help="congestion sweep and critical-rate estimate")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_traffic)

    p = sub.add_parser("route", help="user route selection and optimal rates")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("theory", help="closed-form growth constants and exponent")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--out-file", help="write CSV here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("compare", help="metrics table across growth models")
    _add_common(p)
    p.add_argument("--models", default="dtvcn,tvcn,ba",
                   help="comma-separated model list")
    p.add_argument("--n-list", default="2000", help="comma-separated sizes")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("run", help="full pipeline into one output directory")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DtvcnError, OSError, ValueError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
