"""Command-line harness: design, compare, surrogate, validate, run, catalog."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import operators as ops
from ._seeding import derive_seed
from .baselines import BaselineSpec, baseline, run_baseline
from .config import ConfigError, ExperimentConfig, ProblemGroup, load_config
from .design import DesignTask, design, heldout_mean
from .embedding import VGAEConfig
from .executor import RunConfig, run
from .graph import GraphError, ParseError, deserialize, serialize, validate
from .problems import ProblemError, problem_from_config
from .surrogate import EMBED, RAW, SurrogateConfig, reports_to_csv, samples_to_csv, surrogate_study

log = logging.getLogger("opgraph")


class OutputDir:
    """Collects files in a scratch directory and moves them into place only on success."""

    def __init__(self, out: str | Path):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=self.out))
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        (self.tmp / name).write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for name in sorted(self.files):
                os.replace(self.tmp / name, self.out / name)
        shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def _manifest(cfg: ExperimentConfig, command: str, files: dict[str, str]) -> str:
    return json.dumps({"command": command, "config_hash": cfg.config_hash(), "seed": cfg.seed,
                       "files": dict(sorted(files.items()))}, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _design_task(group: ProblemGroup, cfg: ExperimentConfig, jobs: int) -> tuple[DesignTask, list]:
    insts = group.build(cfg.seed)
    d_idx, t_idx = group.split(cfg.seed)
    d = cfg.design
    task = DesignTask([insts[i] for i in d_idx], runs_per_instance=d.runs_per_instance,
                      candidate_budget=d.candidate_budget, candidates_per_iteration=d.candidates_per_iteration,
                      run_config=RunConfig(d.population_size, d.budget_fe), seed=cfg.seed,
                      stagnation_limit=d.stagnation_limit, perturb_strength=d.perturb_strength,
                      n_initial=d.n_initial, validation_top=d.validation_top, jobs=jobs)
    return task, [insts[i] for i in t_idx]


def cmd_design(cfg: ExperimentConfig, jobs: int = 1) -> dict[str, str]:
    """Design one algorithm per problem group; returns the written file names and their hashes."""
    with OutputDir(cfg.output) as out:
        for group in cfg.problems:
            task, test = _design_task(group, cfg, jobs)
            log.info("designing for %s on %d instances", group.label, len(task.instances))
            best, state = design(task)
            best = best.with_metadata(problem=group.label, config_hash=cfg.config_hash())
            out.write(f"best_graph_{group.label}.txt", serialize(best))
            out.write(f"design_trace_{group.label}.csv", state.trace_csv())
            _, vals = heldout_mean(best, test, cfg.design.heldout_runs, task.run_config, cfg.seed)
            runs = cfg.design.heldout_runs
            rows = [(test[k // runs].name, k % runs, repr(v)) for k, v in enumerate(vals)]
            out.write(f"heldout_{group.label}.csv", _csv(["instance", "run", "best_fitness"], rows))
        out.write("manifest_design.json", _manifest(cfg, "design", out.files))
        return dict(out.files)


def _algorithms(group: ProblemGroup, cfg: ExperimentConfig, kind: str, dimension: int) -> list[BaselineSpec]:
    algs = []
    designed = Path(cfg.output) / f"best_graph_{group.label}.txt"
    paths = dict(cfg.compare.graphs)
    if designed.exists() and "designed" not in paths:
        paths = {"designed": str(designed), **paths}
    for name, path in paths.items():
        g = deserialize(Path(path).read_text())
        if g.kind == kind:
            algs.append(BaselineSpec(name, kind, graph=g))
    for name in cfg.compare.baselines:
        try:
            algs.append(baseline(name, kind, dimension))
        except ops.KindMismatch:
            log.info("skipping %s on %s: wrong problem kind", name, group.label)
    return algs


def cmd_compare(cfg: ExperimentConfig, jobs: int = 1) -> dict[str, str]:
    c = cfg.compare
    summary, per_run = [], []
    for group in cfg.problems:
        insts = group.build(cfg.seed)
        _, t_idx = group.split(cfg.seed)
        kind = insts[0].kind
        budget = c.budget_fe if kind == "continuous" else c.budget_fe_discrete
        for spec in _algorithms(group, cfg, kind, insts[0].dimension):
            for i in t_idx:
                vals = []
                for r in range(c.runs):
                    seed = derive_seed("compare", cfg.seed, group.label, i, r)
                    vals.append(run_baseline(spec, insts[i], RunConfig(c.population_size, budget, seed)).best_fitness)
                    per_run.append((insts[i].name, spec.name, r, repr(vals[-1])))
                summary.append((insts[i].name, spec.name, repr(float(np.mean(vals))),
                                repr(float(np.std(vals))), c.runs))
    with OutputDir(cfg.output) as out:
        out.write("compare.csv", _csv(["problem", "algorithm", "mean", "std", "runs"], summary))
        if c.dump_runs:
            out.write("compare_runs.csv", _csv(["problem", "algorithm", "run", "best_fitness"], per_run))
        out.write("manifest_compare.json", _manifest(cfg, "compare", out.files))
        return dict(out.files)


def cmd_surrogate(cfg: ExperimentConfig, jobs: int = 1) -> dict[str, str]:
    s = cfg.surrogate
    modes = (EMBED, RAW) if s.mode == "both" else (s.mode,)
    reports = []
    with OutputDir(cfg.output) as out:
        for group in cfg.problems:
            insts = group.build(cfg.seed)
            d_idx, _ = group.split(cfg.seed)
            task = DesignTask([insts[i] for i in d_idx], runs_per_instance=s.runs_per_instance,
                              run_config=RunConfig(s.population_size, s.budget_fe), seed=cfg.seed, jobs=jobs)
            study = surrogate_study(task, s.train_size, s.holdout_size, cfg.seed, group.label, modes,
                                    VGAEConfig(s.latent_dim, s.hidden_dim, s.epochs, s.lr, seed=cfg.seed),
                                    SurrogateConfig(n_trees=s.n_trees, max_depth=s.max_depth, seed=cfg.seed))
            reports += study.reports
            out.write(f"surrogate_train_{group.label}.csv", samples_to_csv(study.train))
            out.write(f"surrogate_holdout_{group.label}.csv", samples_to_csv(study.holdout))
            if study.embedder is not None:
                out.write(f"vgae_{group.label}.json", study.embedder.to_json())
            for mode, model in study.models.items():
                out.write(f"surrogate_{group.label}_{mode}.json", model.to_json())
        out.write("surrogate_report.csv", reports_to_csv(reports))
        out.write("manifest_surrogate.json", _manifest(cfg, "surrogate", out.files))
        return dict(out.files)


def _read_graph(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc.strerror}")
    return deserialize(text)


def _problem_args(args) -> dict:
    if args.problem == "beamform":
        return {"id": "beamform", "K": args.K, "M": args.M, "N": args.N, "b": args.b, "seed": args.instance_seed}
    return {"id": args.problem, "dimension": args.dimension, "seed": args.instance_seed}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opgraph", description="Compose, run, and design metaheuristics as operator graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("design", "design one algorithm per problem group"),
                        ("compare", "compare designed graphs and baselines on the test instances"),
                        ("surrogate", "train and score performance surrogates")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--desk-scale", action="store_true", help="fill unset budgets from the reduced preset")
    sp = sub.add_parser("validate", help="check a serialized graph")
    sp.add_argument("graph")
    sp = sub.add_parser("run", help="execute a graph once and print the result as JSON")
    sp.add_argument("graph")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--dimension", type=int, default=10)
    sp.add_argument("--instance-seed", type=int, default=0)
    sp.add_argument("--K", type=int, default=2)
    sp.add_argument("--M", type=int, default=4)
    sp.add_argument("--N", type=int, default=120)
    sp.add_argument("--b", type=int, default=1)
    sp.add_argument("--population", type=int, default=20)
    sp.add_argument("--budget", type=int, default=5000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", help="write the fired-vertex trace CSV here")
    sp = sub.add_parser("catalog", help="print the operator catalog as JSON")
    sp.add_argument("--kind", choices=["continuous", "discrete"], default="continuous")
    return p


COMMANDS = {"design": cmd_design, "compare": cmd_compare, "surrogate": cmd_surrogate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command in COMMANDS:
            over = {}
            if args.seed is not None:
                over["seed"] = args.seed
            if args.out is not None:
                over["output"] = args.out
            cfg = load_config(args.config, args.desk_scale, over)
            files = COMMANDS[args.command](cfg, args.jobs)
            print("\n".join(f"{cfg.output}/{f}" for f in sorted(files)))
            return 0
        if args.command == "validate":
            report = validate(_read_graph(args.graph))
            print(report)
            return 0 if report.ok else 1
        if args.command == "run":
            g = _read_graph(args.graph)
            problem = problem_from_config(_problem_args(args))
            res = run(g, problem, RunConfig(args.population, args.budget, args.seed, record_trace=bool(args.trace)))
            if args.trace:
                Path(args.trace).write_text(res.trace_csv())
            print(res.to_json())
            return 0
        if args.command == "catalog":
            print(json.dumps(ops.catalog_table(args.kind), indent=2))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, GraphError, ProblemError, ops.OperatorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
