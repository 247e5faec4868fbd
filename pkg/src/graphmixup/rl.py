"""Tabular Q-learning controller for the per-class upsampling scale.

All minority classes share one offset ``kappa``; the scale of class ``i``
is ``alpha_init[i] + kappa``. The agent nudges ``kappa`` by one grid step
per epoch and is rewarded by the sign of the macro-F1 change.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

PLUS, MINUS = 1, -1
ACTIONS = (PLUS, MINUS)


def reward(cla_e, cla_prev):
    """+1 on improvement, 0 on exact equality, -1 otherwise."""
    if cla_e > cla_prev:
        return 1
    if cla_e == cla_prev:
        return 0
    return -1


@dataclass
class QTable:
    gamma: float = 1.0
    epsilon: float = 0.9
    delta_kappa: float = 0.05
    values: dict = field(default_factory=dict)

    def get(self, state, action):
        return self.values.get((state, action), 0.0)

    def best_value(self, state):
        return max(self.get(state, a) for a in ACTIONS)

    def greedy(self, state):
        # ties favour PLUS because it comes first
        return max(ACTIONS, key=lambda a: self.get(state, a))


def state_key(kappa, delta_kappa):
    return int(round(kappa / delta_kappa))


def select_action(q, state, rng, epsilon=None):
    """Epsilon-greedy: uniform action with probability ``epsilon``, else greedy."""
    eps = q.epsilon if epsilon is None else epsilon
    if rng.random() < eps:
        return ACTIONS[rng.integers(len(ACTIONS))]
    return q.greedy(state)


def q_update(q, s, a, r, s_next, lr=1.0):
    """Move ``Q(s, a)`` toward ``r + gamma * max_a' Q(s_next, a')``.

    ``lr=1`` assigns the Bellman target directly.
    """
    target = r + q.gamma * q.best_value(s_next)
    q.values[(s, a)] = (1.0 - lr) * q.get(s, a) + lr * target
    return q


def check_termination(kappa_history, t_kappa, window=20):
    """True once the last ``window + 1`` kappa values span at most ``t_kappa``."""
    hist = list(kappa_history)
    if len(hist) < window + 1:
        return False
    recent = hist[-(window + 1):]
    return max(recent) - min(recent) <= t_kappa + 1e-12


class ScaleAgent:
    """Owns kappa, the Q-table and the termination window for one run."""

    def __init__(self, init_scales, delta_kappa=0.05, gamma=1.0, epsilon=0.9,
                 epsilon_final=None, epsilon_anneal=0, warmup=50, window=20,
                 t_kappa=None, q_lr=0.5, seed=0):
        self.init_scales = dict(init_scales)
        self.delta_kappa = delta_kappa
        self.q = QTable(gamma=gamma, epsilon=epsilon, delta_kappa=delta_kappa)
        # with gamma = 1 every +/- cycle has zero net reward, so lr = 1 leaves
        # two-state loops as exact ties; a partial step breaks them
        self.q_lr = q_lr
        self.epsilon_final = epsilon if epsilon_final is None else epsilon_final
        self.epsilon_anneal = epsilon_anneal
        self.warmup = warmup
        self.window = window
        self.t_kappa = delta_kappa if t_kappa is None else t_kappa
        self.rng = np.random.default_rng(seed)
        lowest = min(self.init_scales.values()) if self.init_scales else 0.0
        self.min_steps = -math.floor(lowest / delta_kappa + 1e-9)
        self.kappa_steps = 0
        self.history = deque(maxlen=window + 1)
        self.terminated = False
        self.n_actions = 0
        self.pending = None
        self.prev_score = None
        self.trace = []

    @property
    def kappa(self):
        return self.kappa_steps * self.delta_kappa

    def current_epsilon(self):
        if self.epsilon_anneal <= 0:
            return self.q.epsilon
        frac = min(self.n_actions / self.epsilon_anneal, 1.0)
        return self.q.epsilon + frac * (self.epsilon_final - self.q.epsilon)

    def scales(self):
        return {c: max(a + self.kappa, 0.0) for c, a in self.init_scales.items()}

    def step(self, r=None):
        """Learn from the reward of the pending action, then pick and apply a new one.

        Returns the chosen action, or ``None`` once terminated.
        """
        if self.terminated:
            return None
        s_now = self.kappa_steps
        if self.pending is not None and r is not None:
            q_update(self.q, *self.pending, r, s_now, lr=self.q_lr)
        self.history.append(self.kappa)
        if check_termination(self.history, self.t_kappa, self.window):
            self.terminated = True
            self.pending = None
            return None
        a = select_action(self.q, s_now, self.rng, self.current_epsilon())
        self.kappa_steps = max(self.kappa_steps + a, self.min_steps)
        self.pending = (s_now, a)
        self.n_actions += 1
        return a

    def rl_step(self, macro_f1, epoch):
        """Advance one training epoch and return the scales for the next one."""
        if self.terminated or epoch < self.warmup:
            self.prev_score = macro_f1
            return self.scales()
        r = None
        if self.pending is not None and self.prev_score is not None:
            r = reward(macro_f1, self.prev_score)
        a = self.step(r)
        self.prev_score = macro_f1
        self.trace.append((epoch, self.kappa, a, r, macro_f1))
        return self.scales()


class MonotoneRewardEnv:
    """Stub environment: +1 when kappa moves strictly closer to ``target``, else -1."""

    def __init__(self, target):
        self.target = target

    def reward(self, kappa_old, kappa_new):
        return 1 if abs(kappa_new - self.target) < abs(kappa_old - self.target) - 1e-12 else -1


def run_convergence_harness(target=0.3, delta_kappa=0.05, gamma=1.0, epsilon=0.9,
                            epsilon_final=0.1, epsilon_anneal=100, max_steps=500,
                            q_lr=0.5, seed=0):
    """Drive a :class:`ScaleAgent` against :class:`MonotoneRewardEnv`.

    Returns ``(steps, kappa, terminated, kappa_trajectory)``.
    """
    env = MonotoneRewardEnv(target)
    agent = ScaleAgent({0: 0.5}, delta_kappa=delta_kappa, gamma=gamma, epsilon=epsilon,
                       epsilon_final=epsilon_final, epsilon_anneal=epsilon_anneal,
                       warmup=0, q_lr=q_lr, seed=seed)
    traj = [agent.kappa]
    r = None
    for step in range(1, max_steps + 1):
        before = agent.kappa
        a = agent.step(r)
        if a is None:
            return step, agent.kappa, True, traj
        r = env.reward(before, agent.kappa)
        traj.append(agent.kappa)
    return max_steps, agent.kappa, agent.terminated, traj
