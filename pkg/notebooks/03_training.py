"""Train the vector-observation tracker at desk scale and evaluate it.

Run: python3 notebooks/03_training.py [episodes]  (about 5 minutes for 2000 episodes on one core)
The same run from the shell: vatlab train --mode vector --workers 4 --episodes 2000 --fc-in-units 64 ...
"""

import os
import sys
from pathlib import Path

import numpy as np

from vatlab.behaviors import BehaviorSpec
from vatlab.config import default_config
from vatlab.ddpg import Trainer
from vatlab.evaluation import LearnedPolicy, RandomPolicy, run_scenario

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
out = Path(os.environ.get("VATLAB_OUTPUT_DIR", "runs")) / "desk"
out.mkdir(parents=True, exist_ok=True)

# Reference hyper-parameters, narrower layers, 4 workers
cfg = default_config(mode="vector", workers=4, episodes=episodes, fc_in_units=64, gru_units=64, fc1_units=64,
                     fc2_units=64, seed=0, checkpoint_every=0, output_dir=str(out))
trainer = Trainer(cfg, log_path=out / "train_log.jsonl")
records = trainer.train()
trainer.save_weights(out / "weights.vatp")

# %% Reward of the policy's own episodes (HTG episodes are interleaved 4 to 1)
actor = np.array([r["mean_reward"] for r in records if r["source"] == "actor"])
k = min(200, len(actor) // 2)
print(f"{len(actor)} actor episodes; first {k}: {actor[:k].mean():.4f}, last {k}: {actor[-k:].mean():.4f}")

# %% Held-out evaluation against a circling target
spec = BehaviorSpec.circular(3, 3)
learned = run_scenario(LearnedPolicy(trainer.store.snapshot().actor, trainer.net_cfg), spec, keep_logs=False)
rand = run_scenario(RandomPolicy(), spec, keep_logs=False)
print("learned:", {k: round(v, 3) for k, v in learned.means.items()})
print("random: ", {k: round(v, 3) for k, v in rand.means.items()})
