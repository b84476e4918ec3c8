"""Flat tab-separated plot files derived from an aggregate report.

Every file starts with ``#`` comment lines describing the columns, then a
header row, then one row per point.  Nothing is rendered.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .runner import AggregateReport

PLOT_KINDS = ("pareto", "reliability", "learning_curve")

COLUMNS = {
    "pareto": [
        ("active_fraction", "seed-mean share of gated dimensions whose inference mask is 1"),
        ("accuracy", "seed-mean test accuracy of the selected checkpoint"),
        ("auc", "seed-mean test AUC"),
        ("lambda", "penalty weight target"),
        ("ece", "seed-mean test ECE (10 bins)"),
        ("config", "config name within the plan"),
        ("frontier", "1 if no other point has both fewer active dimensions and higher accuracy"),
    ],
    "reliability": [
        ("config", "config name within the plan"),
        ("bin_center", "centre of the equal-width confidence bin"),
        ("conf", "mean confidence in the bin, pooled over seeds (0 when empty)"),
        ("acc", "accuracy in the bin, pooled over seeds (0 when empty)"),
        ("count", "test predictions in the bin, summed over seeds"),
    ],
    "learning_curve": [
        ("config", "config name within the plan"),
        ("seed", "run seed"),
        ("step", "optimizer steps completed"),
        ("train_loss", "mean task loss since the previous validation point"),
        ("val_loss", "validation task loss, deterministic gates"),
        ("val_accuracy", "validation accuracy, deterministic gates"),
        ("active_fraction", "inference-mask density"),
        ("expected_l0", "sum of P(z > 0) over gated dimensions"),
        ("lambda", "penalty weight at this step"),
        ("tau", "gate temperature at this step"),
    ],
}


def plot_rows(report: AggregateReport, kind: str) -> list[dict]:
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    rows = []
    if kind == "pareto":
        for p in report.pareto:
            rows.append({**p, "frontier": int(p["frontier"])})
    elif kind == "reliability":
        for c in report.configs:
            rel = c["reliability"]
            M = rel["n_bins"]
            for m in range(M):
                rows.append({"config": c["name"], "bin_center": (m + 0.5) / M, "conf": rel["confidence"][m],
                             "acc": rel["accuracy"][m], "count": rel["counts"][m]})
    else:
        for c in report.configs:
            for seed, curve in c["learning_curves"].items():
                for point in curve:
                    rows.append({"config": c["name"], "seed": int(seed), **point})
    return rows


def emit_plotdata(report: AggregateReport, kind: str, out_dir) -> Path:
    rows = plot_rows(report, kind)
    cols = [name for name, _ in COLUMNS[kind]]
    buf = io.StringIO()
    for name, doc in COLUMNS[kind]:
        buf.write(f"# {name}: {doc}\n")
    w = csv.DictWriter(buf, cols, delimiter="\t", extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    path = Path(out_dir) / f"plot_{kind}.tsv"
    path.write_text(buf.getvalue())
    return path


def read_plotdata(path) -> list[dict]:
    """Parse a plot file back into rows of floats (non-numeric cells stay strings)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    out = []
    for r in csv.DictReader(lines, delimiter="\t"):
        row = {}
        for k, v in r.items():
            try:
                row[k] = float(v)
            except ValueError:
                row[k] = v
        out.append(row)
    return out
