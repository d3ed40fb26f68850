"""Walk through the tracking room and the heuristic trajectory generator.

Run: python3 notebooks/01_simulator_and_htg.py
"""

import math

import numpy as np

from vatlab.behaviors import BehaviorSpec
from vatlab.env import TrackingEnv
from vatlab.htg import HtgParams, htg_policy
from vatlab.sim import ActionCommand, ArenaConfig, RelativeState, RewardParams, in_fov, reward

# %% Reward: a bump around the desired distance and bearing, zero outside the tolerances
rp = RewardParams()
for rho, theta_deg in [(50, 0), (60, 5), (70, 0), (50, 9)]:
    print(f"reward(rho={rho}, theta={theta_deg} deg) = {reward(RelativeState(rho, math.radians(theta_deg)), rp):.4f}")

# %% Field of view: 90 degrees, edge included; positive bearings are to the tracker's right
print("in view at 45 deg:", in_fov(RelativeState(50, math.radians(45)), math.pi / 2))
print("in view at 46 deg:", in_fov(RelativeState(50, math.radians(46)), math.pi / 2))

# %% HTG: rotate in place while misaligned, then close the distance
hp = HtgParams()
for rho, theta_deg in [(50, 45), (70, 5), (30, -3)]:
    a = htg_policy(RelativeState(rho, math.radians(theta_deg)), hp)
    print(f"htg(rho={rho}, theta={theta_deg}) -> v={a.v_norm:+.3f} w={a.w_norm:+.3f}")

# %% One episode against a circling target
env = TrackingEnv(ArenaConfig(), rp, behavior=BehaviorSpec.circular(3, 3), rng=np.random.default_rng(0))
env.reset(horizon=250)
rewards = []
while not env.done:
    a = htg_policy(env.rel, hp)
    _, r, _ = env.step(ActionCommand(a.v_norm, a.w_norm))
    rewards.append(r)
print(f"HTG episode: mean reward {np.mean(rewards):.4f}, rewarded steps {np.count_nonzero(rewards)}/250")
