"""Steering a gradient-descent learner in a repeated bimatrix game.

The optimizer mixes over m rows; the learner runs projected OGD on the
simplex with gradient -x B_t. Because the rows of B_t span a set containing
the unit ball, any learner step of length <= theta is reachable.
"""
from __future__ import annotations

import math

import numpy as np

from ..dynamics import _ls_simplex
from ..geometry import Simplex
from ..oco import Ftrl, Ogd

R_B = math.sqrt(2) / 2


def cross_polytope_rows(n):
    """2n rows +-sqrt(n) e_i; their convex hull has inradius exactly 1."""
    E = math.sqrt(n) * np.eye(n)
    return np.vstack([E, -E])


def rotation(n, angle, i=0, j=1):
    Q = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    Q[i, i], Q[i, j], Q[j, i], Q[j, j] = c, -s, s, c
    return Q


class SteeringEnv:
    def __init__(self, A_stream, B_stream, T, L=None, A_star=None):
        """A_stream, B_stream: t -> (m, n) matrices. B_stream(-1) is the matrix
        known before the first round."""
        self.A, self.B = A_stream, B_stream
        self.A_star = A_star or A_stream
        self.T = int(T)
        B0 = B_stream(0)
        self.m, self.n = B0.shape
        self.L = float(np.linalg.norm(B0, axis=1).max()) if L is None else float(L)
        self.theta = math.sqrt(2.0 / (self.L ** 2 * self.T))
        self.learner = Ogd(Simplex(self.n), self.theta)
        self.t = 0

    @property
    def y(self):
        return self.learner.point


def steering_action(env, y_now, target, B_prev):
    if not Simplex(env.n).contains(target):
        raise ValueError("target must lie in the simplex")
    need = (np.asarray(target, float) - np.asarray(y_now, float)) / env.theta
    return _ls_simplex(np.asarray(B_prev, float).T, need)


def steering_round(env, controller_target):
    """Play one round; returns (y_next, true_reward, surrogate_loss, w)."""
    t = env.t
    y = env.y.copy()
    B_prev = env.B(t - 1)
    A_t, B_t = env.A(t), env.B(t)
    x = steering_action(env, y, controller_target, B_prev)
    intended = env.learner.domain.project(y + env.theta * (x @ B_prev))
    reward = float(x @ A_t @ y)
    surrogate = -float(A_t.mean(axis=0) @ y)
    y_next = env.learner.update(-(x @ B_t))
    env.t += 1
    env.last_action = x
    return y_next, reward, surrogate, y_next - intended


class SteeringLog:
    def __init__(self):
        self.states, self.actions, self.rewards, self.surrogates, self.w = [], [], [], [], []
        self.shadow, self.targets = [], []
        self.meta = {}


def steering_run(env, T=None, alpha=0.5, gamma=1.0):
    """Disturbance-tolerant FTRL on the surrogate -u A_t y driving the learner."""
    T = env.T if T is None else T
    Y = Simplex(env.n)
    G = 0.5 * gamma * Y.R ** 2
    L = env.L
    eta = min(math.sqrt(G * gamma / (T * L ** 2)), alpha * env.theta * gamma / L)
    ftrl = Ftrl(Y, eta, gamma, G)
    log = SteeringLog()
    log.meta.update(eta=eta, theta=env.theta, alpha=alpha, G=G, L=L)
    for t in range(T):
        y = env.y.copy()
        shadow = ftrl.next_point()
        d = shadow - y
        nd = np.linalg.norm(d)
        aim = shadow if nd <= env.theta else y + d * (env.theta / nd)
        log.states.append(y)
        y_next, reward, sur, w = steering_round(env, aim)
        log.actions.append(env.last_action)
        log.rewards.append(reward)
        log.surrogates.append(sur)
        log.w.append(w)
        log.shadow.append(shadow)
        log.targets.append(aim)
        ftrl.update(-env.A(t).mean(axis=0))
    log.final_state = env.y.copy()
    return log


def best_profile_total(env, T):
    """max over (x, y) in the product of simplices of sum_t x A_t y; attained at
    a vertex pair because the objective is bilinear."""
    S = sum(env.A(t) for t in range(T))
    return float(S.max())


def learner_regret(env, log):
    """Learner's regret on its own losses y -> -x_t B_t y."""
    T = len(log.states)
    grads = np.array([-(log.actions[t] @ env.B(t)) for t in range(T)])
    realized = float(np.sum(grads * np.array(log.states), axis=1).sum())
    return realized - float(grads.sum(axis=0).min())


def steering_bound(env, log, eps_sum, delta_sum=0.0, gamma=1.0):
    """Inner FTRL bound plus the drift term."""
    T = len(log.states)
    eta, G, L, a = log.meta["eta"], log.meta["G"], log.meta["L"], log.meta["alpha"]
    inner = eta * 2 * T * L ** 2 / gamma + G / eta + L / math.sqrt(env.n) + 2 * delta_sum
    return inner, inner + math.sqrt(2) * L * eps_sum / (1 - a)
