"""
The scale controller on a toy reward
====================================

The Q-learning agent only ever sees +1 or -1. Here the reward is +1
when kappa moves toward 0.3, so kappa should walk there and stop.
"""

from graphmixup.rl import run_convergence_harness

for seed in range(3):
    steps, kappa, done, traj = run_convergence_harness(target=0.3, epsilon_final=0.1,
                                                       epsilon_anneal=100, seed=seed)
    print(f"seed {seed}: stopped={done} after {steps} steps at kappa={kappa:.2f}")
    print("  first moves:", " ".join(f"{k:.2f}" for k in traj[:15]))
