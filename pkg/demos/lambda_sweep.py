"""A small lambda sweep on synthetic tables with a known set of useful fields.

Twenty categorical fields, four of which drive the label.  Raising the penalty
weight closes more of the embedding interface; at moderate weights the closed
dimensions are mostly the ones belonging to noise fields.

    python demos/lambda_sweep.py [out_dir]
"""
import json
import pathlib
import sys
import tempfile

import numpy as np

from l0gm.config import DataConfig
from l0gm.runner import ExperimentPlan, load_task, run_plan
from l0gm.trainer import TrainConfig

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="l0gm_sweep_")
base = TrainConfig(embed_dim=4, cin_widths=(8,), dnn_hidden=(16,), batch_size=128, epochs=4)
data = DataConfig(synthetic={"n": 3000, "noise": 0.0})
plan = ExperimentPlan("lambda_sweep", base, data, seeds=(0,), grid=(1e-4, 1e-3, 1e-2, 1e-1), out_dir=out)
report = run_plan(plan)

task = load_task(data, "tabular")
useful = np.repeat(np.isin(np.arange(task.rows.shape[1]), task.informative), base.embed_dim)
print(f"useful fields {task.informative}; runs in {out}\n")
print("lambda    accuracy   auc      active   useful open   noise open")
for c in report.configs:
    run = json.loads((pathlib.Path(out) / "runs" / f"{c['per_seed'][0]['run']}.json").read_text())
    mask = np.array(run["gate_mask"], dtype=float)
    m = c["mean"]
    print(f"{c['lambda_target']:.0e}    {m['accuracy']:.4f}     {m['auc']:.4f}   {m['active_fraction']:.3f}    "
          f"{mask[useful].mean():.3f}         {mask[~useful].mean():.3f}")
