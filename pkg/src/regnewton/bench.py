"""Benchmark harness: run solver/problem grids and write traces + a manifest.

A grid is described by a JSON config (see :func:`check_config`).  Each
(problem, solver) cell produces one trace CSV at
``<out>/<experiment>/<problem-id>/<solver-id>.csv``; a manifest JSON next to
them lists every run with its parameters, seed, and exit status.  Cells are
independent, so reruns with the same config and seed reproduce every trace
byte for byte except the time column, regardless of the parallelism degree.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

from . import baselines, newton, problems
from .errors import ConfigError, TraceSchemaError
from .trace import validate_trace_file

SCHEMA_VERSION = 1

_EXPERIMENTS = ("polytope", "softmax", "worst", "custom")
_METHODS = ("super_universal", "fixed", "cubic_newton", "gradient", "fast_gradient")
_GENERATORS = ("polytope", "softmax", "worst", "l1_quadratic", "box_quadratic")


@dataclass
class ExperimentConfig:
    experiment: str
    problems: list
    solvers: list
    budgets: dict = field(default_factory=dict)
    out_dir: str = "bench_out"
    seed: int = 0
    jobs: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
        cfg = cls(
            experiment=raw.get("experiment", "custom"),
            problems=raw.get("problems", []),
            solvers=raw.get("solvers", []),
            budgets=raw.get("budgets", {}),
            out_dir=raw.get("out_dir", "bench_out"),
            seed=int(raw.get("seed", 0)),
            jobs=int(raw.get("jobs", 1)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in _EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.problems:
            raise ConfigError("problem grid is empty")
        if not self.solvers:
            raise ConfigError("solver list is empty")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        ids = set()
        for spec in self.solvers:
            method = spec.get("method")
            if method not in _METHODS:
                raise ConfigError(f"unknown solver method {method!r}")
            solver_id = spec.get("id") or method
            if solver_id in ids:
                raise ConfigError(f"duplicate solver id {solver_id!r}")
            ids.add(solver_id)
            if method == "fixed" and ("q" not in spec or "mq" not in spec):
                raise ConfigError("fixed solver requires q and mq")
        for spec in self.problems:
            generator = spec.get("generator")
            if generator not in _GENERATORS:
                raise ConfigError(f"unknown problem generator {generator!r}")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def run_seed(global_seed, problem_id) -> int:
    """Stable per-run seed, independent of grid ordering."""
    digest = hashlib.sha256(f"{global_seed}|{problem_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def build_problem(spec: dict, global_seed: int) -> problems.ProblemInstance:
    generator = spec["generator"]
    params = {k: v for k, v in spec.items() if k != "generator"}
    pid = problem_id(spec)
    seed = run_seed(global_seed, pid)
    if generator == "polytope":
        return problems.make_polytope(int(params["n"]), int(params["m"]), float(params["p"]), seed)
    if generator == "softmax":
        return problems.make_softmax(int(params["n"]), int(params["m"]), float(params["mu"]), seed)
    if generator == "worst":
        return problems.make_worst(int(params["n"]), float(params["q"]))
    if generator == "l1_quadratic":
        return problems.make_l1_quadratic(int(params["n"]), seed, float(params.get("weight", 0.5)))
    if generator == "box_quadratic":
        return problems.make_box_quadratic(int(params["n"]), seed)
    raise ConfigError(f"unknown problem generator {generator!r}")


def problem_id(spec: dict) -> str:
    generator = spec["generator"]
    parts = [generator]
    for key in sorted(k for k in spec if k != "generator"):
        parts.append(f"{key}{problems._fmt(spec[key])}")
    return "_".join(parts)


def parse_problem_id(pid: str) -> dict:
    """Inverse of :func:`problem_id` for CLI use, e.g. 'polytope_n20_m60_p3'."""
    generator = next(
        (g for g in sorted(_GENERATORS, key=len, reverse=True)
         if pid == g or pid.startswith(g + "_")),
        None,
    )
    if generator is None:
        raise ConfigError(f"cannot parse problem id {pid!r}")
    spec = {"generator": generator}
    rest = pid[len(generator):].strip("_")
    for token in rest.split("_") if rest else []:
        head = "".join(c for c in token if c.isalpha())
        tail = token[len(head):]
        try:
            spec[head] = float(tail) if "." in tail else int(tail)
        except ValueError as exc:
            raise ConfigError(f"cannot parse problem id {pid!r}: bad token {token!r}") from exc
    return spec


def _budget_kwargs(budgets: dict, overrides: dict) -> dict:
    merged = dict(budgets)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    out = {}
    for key in ("max_iterations", "max_oracle_calls", "max_seconds", "tol_grad"):
        if merged.get(key) is not None:
            out[key] = merged[key]
    return out


def make_runner(spec: dict, budgets: dict):
    """Bind a solver spec to a callable ``problem -> Trace``."""
    method = spec["method"]
    kwargs = _budget_kwargs(budgets, {k: spec.get(k) for k in
                                      ("max_iterations", "max_oracle_calls", "max_seconds", "tol_grad")})
    if method == "super_universal":
        cfg = newton.SolverConfig(alpha=float(spec.get("alpha", 1.0)),
                                  h0=spec.get("h0"), **kwargs)
        return lambda prob: newton.run_super_universal(prob, cfg=cfg)
    if method == "fixed":
        cfg = newton.SolverConfig(**kwargs)
        q, mq = float(spec["q"]), float(spec["mq"])
        return lambda prob: newton.run_fixed(prob, q, mq, cfg=cfg)
    variant = {"cubic_newton": "cubic-newton", "gradient": "gradient",
               "fast_gradient": "fast-gradient"}[method]
    cfg = baselines.BaselineConfig(variant=variant,
                                   initial_constant=float(spec.get("initial_constant", 1.0)),
                                   **kwargs)
    if method == "cubic_newton":
        return lambda prob: baselines.run_cubic_newton(prob, cfg=cfg)
    return lambda prob: baselines.run_first_order(prob, cfg=cfg)


def _run_cell(problem_spec, solver_spec, cfg: ExperimentConfig):
    pid = problem_id(problem_spec)
    solver_id = solver_spec.get("id") or solver_spec["method"]
    entry = {
        "problem_id": pid,
        "solver_id": solver_id,
        "seed": run_seed(cfg.seed, pid),
        "trace": None,
        "status": "error",
        "error": None,
    }
    try:
        problem = build_problem(problem_spec, cfg.seed)
        entry["problem"] = problem.metadata()
        runner = make_runner(solver_spec, cfg.budgets)
        trace = runner(problem)
    except Exception as exc:  # record, never abort the grid
        entry["error"] = f"{type(exc).__name__}: {exc}"
        trace = getattr(exc, "trace", None)
    else:
        entry["status"] = trace.status
    if trace is not None and len(trace.records) > 0:
        rel = os.path.join(cfg.experiment, pid, f"{solver_id}.csv")
        dest = os.path.join(cfg.out_dir, rel)
        os.makedirs(os.path.dirname(dest), exist_ok=True)
        trace.to_csv(dest)
        validate_trace_file(dest)
        entry["trace"] = rel
        final = trace.final
        entry.update(
            iterations=trace.iterations,
            oracle_calls=final.oracle_calls,
            final_grad_norm=final.grad_norm,
            final_objective=final.objective,
            wall_time_s=final.time_s,
        )
    return entry


def _check_writable(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = tempfile.NamedTemporaryFile(dir=out_dir, prefix=".write_probe", delete=True)
        probe.close()
    except OSError as exc:
        raise ConfigError(f"output directory {out_dir!r} is not writable: {exc}") from exc


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the full grid and return the manifest (also written to disk)."""
    _check_writable(cfg.out_dir)
    cells = [(p, s) for p in cfg.problems for s in cfg.solvers]
    started = time.perf_counter()
    if cfg.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            entries = list(pool.map(lambda cell: _run_cell(cell[0], cell[1], cfg), cells))
    else:
        entries = [_run_cell(p, s, cfg) for p, s in cells]
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config": {
            "problems": cfg.problems,
            "solvers": cfg.solvers,
            "budgets": cfg.budgets,
        },
        "runs": entries,
        "totals": {
            "runs": len(entries),
            "converged": sum(1 for e in entries if e["status"] == "converged"),
            "errors": sum(1 for e in entries if e["error"] is not None),
            "wall_time_s": time.perf_counter() - started,
        },
    }
    path = os.path.join(cfg.out_dir, cfg.experiment, "manifest.json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    manifest["manifest_path"] = path
    return manifest


DEMO_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "experiment": "polytope",
    "seed": 90210,
    "problems": [
        {"generator": "polytope", "n": 25, "m": 75, "p": 2},
        {"generator": "polytope", "n": 25, "m": 75, "p": 3},
    ],
    "solvers": [
        {"id": "sun_a23", "method": "super_universal", "alpha": 2.0 / 3.0},
        {"id": "sun_a1", "method": "super_universal", "alpha": 1.0},
        {"id": "cnm", "method": "cubic_newton"},
        {"id": "gm", "method": "gradient"},
        {"id": "fgm", "method": "fast_gradient"},
    ],
    "budgets": {"max_iterations": 300, "max_oracle_calls": 500, "tol_grad": 1e-9},
}


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="regnewton",
        description="Run regularized-Newton benchmark grids and write traces + manifests.",
    )
    sub = parser.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="run a grid described by a JSON config")
    run_p.add_argument("config")
    check_p = sub.add_parser("check", help="validate a config without running")
    check_p.add_argument("config")
    fd_p = sub.add_parser("fdtest", help="finite-difference check for one problem id")
    fd_p.add_argument("problem_id")
    fd_p.add_argument("--points", type=int, default=20)
    sub.add_parser("demo", help="run a small built-in grid")

    for p in (run_p, sub.choices["demo"], fd_p):
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--jobs", type=int, default=None, help="parallel grid cells")
        p.add_argument("--seed", type=int, default=None, help="global seed override")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses exit code 2 for usage errors
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "check":
            load_config(args.config)
            print("config ok")
            return 0
        if args.command in ("run", "demo"):
            if args.command == "run":
                cfg = load_config(args.config)
            else:
                cfg = ExperimentConfig.from_dict(DEMO_CONFIG)
                cfg.out_dir = "regnewton_demo"
            if args.out is not None:
                cfg.out_dir = args.out
            if args.jobs is not None:
                cfg.jobs = args.jobs
            if args.seed is not None:
                cfg.seed = args.seed
            manifest = run_experiment(cfg)
            totals = manifest["totals"]
            print(
                f"{totals['runs']} runs, {totals['converged']} converged, "
                f"{totals['errors']} errors -> {manifest['manifest_path']}"
            )
            return 2 if totals["errors"] else 0
        if args.command == "fdtest":
            spec = parse_problem_id(args.problem_id)
            seed = args.seed if args.seed is not None else 0
            problem = build_problem(spec, seed)
            report = problems.fd_check(problem, points=args.points, seed=seed)
            print(
                f"{problem.name}: max grad error {report.max_grad_error:.3e}, "
                f"max hess error {report.max_hess_error:.3e}, "
                f"{report.resampled} resampled"
            )
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TraceSchemaError as exc:
        print(f"trace schema error: {exc}", file=sys.stderr)
        return 1
    return 1


def main() -> None:
    sys.exit(cli_main())
