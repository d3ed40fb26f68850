"""Draw the learning curve of a training log and top-down views of evaluation runs.

Run after 03_training.py: python3 notebooks/04_plots.py
"""

import json
import os
from pathlib import Path

from vatlab.behaviors import BehaviorSpec
from vatlab.evaluation import HtgPolicy, run_scenario
from vatlab.htg import HtgParams
from vatlab.plot import learning_curve_svg, trajectory_svg

out = Path(os.environ.get("VATLAB_OUTPUT_DIR", "runs"))
log = out / "desk" / "train_log.jsonl"
if log.exists():
    records = [json.loads(line) for line in log.read_text().splitlines()]
    print("wrote", learning_curve_svg(records, out / "desk" / "curve.svg", window=50))
else:
    print(f"no training log at {log}; run 03_training.py first")

rep = run_scenario(HtgPolicy(HtgParams()), BehaviorSpec.circular(5, 5), runs=3, steps=250, seed=0)
for i, run_log in enumerate(rep.logs):
    print("wrote", trajectory_svg(run_log, out / f"htg_circular_5_5_run{i}.svg", title=f"HTG, run {i}"))
