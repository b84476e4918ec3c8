"""``l0gm`` command line.

    l0gm train  --config FILE [--seed N] --out DIR
    l0gm sweep  --plan FILE [--jobs N] --out DIR
    l0gm eval   --checkpoint FILE [--data FILE] [--robustness] --out DIR
    l0gm report --in DIR --emit pareto|reliability|learning_curve

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint
from .config import DataConfig, load_config, plan_section_from, read_ini, train_config_from, data_config_from
from .datasets import DataError
from .datasets.tabular import Bucketizer
from .plotdata import PLOT_KINDS, emit_plotdata
from .robustness import PerturbationSpec, protocol_grid
from .runner import (AggregateReport, ExperimentPlan, IncompleteGridError, default_target, load_task,
                     run_plan)
from .trainer import ConfigError, DivergenceError, evaluate

OK, USAGE, DATA, NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="l0gm", description="Gated training, sweeps, robustness evaluation and reports.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train one config")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, help="overrides the config seed and L0GM_SEED")
    t.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="run an experiment plan")
    s.add_argument("--plan", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", help="data config (.ini) or Adult CSV; default: the data recorded in the checkpoint")
    e.add_argument("--robustness", action="store_true", help="all 13 protocol conditions instead of i.i.d. only")
    e.add_argument("--out", required=True)

    r = sub.add_parser("report", help="emit plot data from an aggregate report")
    r.add_argument("--in", dest="indir", required=True)
    r.add_argument("--emit", required=True, choices=PLOT_KINDS)
    return p


def _train(args) -> int:
    config, data = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    plan = ExperimentPlan("single", config, data, seeds=(config.seed,))
    report = run_plan(plan, out_dir=args.out)
    c = report.configs[0]["per_seed"][0]
    out = Path(args.out)
    run = json.loads((out / "runs" / f"{c['run']}.json").read_text())
    (out / "report.json").write_text(json.dumps(run, indent=1, sort_keys=True))
    print(f"seed {c['seed']}: accuracy {c['accuracy']:.4f}  auc {c['auc']:.4f}  ece {c['ece']:.4f}  "
          f"active {c['active_fraction']:.3f}  checkpoint {out / c['checkpoint']}")
    return OK


def _sweep(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    cp = read_ini(args.plan)
    plan = ExperimentPlan.from_sections(plan_section_from(cp), train_config_from(cp, env={}),
                                        data_config_from(cp), args.out)
    report = run_plan(plan, jobs=args.jobs)
    print(f"{report.trained} run(s) trained; aggregate at {Path(args.out) / 'aggregate.json'}")
    for c in report.configs:
        m = c["mean"]
        print(f"{c['name']:>16}  acc {m['accuracy']:.4f}  auc {m['auc']:.4f}  ece {m['ece']:.4f}  "
              f"active {m['active_fraction']:.3f}  worst-acc {c['worst']['accuracy']:.4f}")
    return OK


def _eval(args) -> int:
    model, meta = load_checkpoint(args.checkpoint)
    modality = meta["config"]["modality"]
    bucketizer = Bucketizer.from_dict(meta["bucketizer"]) if meta["bucketizer"] else None
    if args.data is None:
        data = DataConfig(**meta["task_meta"]["data"])
    elif Path(args.data).suffix in (".ini", ".cfg"):
        data = data_config_from(read_ini(args.data))
    else:
        recorded = DataConfig(**meta["task_meta"].get("data", {"source": "adult"}))
        data = replace(recorded, source="adult", path=str(args.data))
    task = load_task(data, modality, bucketizer)
    if task.hash != meta["dataset_hash"]:
        print(f"warning: data hash {task.hash[:12]} differs from the checkpoint's {meta['dataset_hash'][:12]}",
              file=sys.stderr)
    grid = protocol_grid(default_target(modality)) if args.robustness else [PerturbationSpec("iid")]
    rows = evaluate(model, task, grid, seed=meta["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval.json").write_text(json.dumps({"checkpoint": str(args.checkpoint), "dataset_hash": task.hash,
                                               "seed": meta["seed"], "rows": rows}, indent=1))
    for r in rows:
        print(f"{r['condition']:>16}  acc {r['accuracy']:.4f}  auc {r['auc']:.4f}  ece {r['ece']:.4f}")
    return OK


def _report(args) -> int:
    path = Path(args.indir) / "aggregate.json"
    if not path.is_file():
        raise FileNotFoundError(f"no aggregate.json in {args.indir}")
    report = AggregateReport.load(path)
    print(emit_plotdata(report, args.emit, args.indir))
    return OK


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        return {"train": _train, "sweep": _sweep, "eval": _eval, "report": _report}[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (DataError, CheckpointError, FileNotFoundError, IncompleteGridError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA
    except (DivergenceError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC


if __name__ == "__main__":
    sys.exit(main())
