"""Stationary reputation distributions under compliant play.

The population's reputation profile evolves by a simple per-period kernel:
active peers (reputation >= h_o) climb one step unless a service error gets
them punished, punished peers fall to 0 unless forgiven, and inactive peers
climb unconditionally.  This module computes the long-run distribution of
that kernel, in closed form where one exists (harsh punishment, uniform
client thresholds) and by fixed-point iteration otherwise, plus the mixtures
induced by malicious and altruistic sub-populations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkEnv, ProtocolParams, error_punish_prob

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 10 ** 6


class NonConvergenceError(RuntimeError):
    """Fixed-point iteration failed to settle; carries the last iterate."""

    def __init__(self, message: str, last_iterate: np.ndarray, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.last_iterate = last_iterate
        self.residual = residual


@dataclass
class ReputationDistribution:
    """A population profile over reputations 0..L.

    eta    probability vector, eta[t] = fraction of peers at reputation t
    mu     mass at or above the activity threshold h_o
    alpha  per-period error-punishment probability the profile was built with
    """

    eta: np.ndarray
    mu: float
    alpha: float

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)

    def as_dict(self) -> dict:
        return {"eta": self.eta.tolist(), "mu": float(self.mu), "alpha": float(self.alpha)}


def transition_matrix(params: ProtocolParams, env: NetworkEnv) -> np.ndarray:
    """Row-stochastic one-period reputation kernel for a compliant peer.

    Row t is the distribution of next-period reputation given reputation t:
      t <  h_o : climb to t+1 with probability 1 (no uploads, no errors)
      t >= h_o : climb to min(L, t+1) w.p. 1 - alpha; on an error event
                 (prob alpha) stay put w.p. beta**(L - t + 1), else drop to 0.
    """
    L, h_o, beta = params.L, params.h_o, params.beta
    alpha = error_punish_prob(env, params.b)
    P = np.zeros((L + 1, L + 1))
    for t in range(L + 1):
        if t < h_o:
            P[t, t + 1] = 1.0
        else:
            keep = beta ** (L - t + 1)
            P[t, min(L, t + 1)] += 1.0 - alpha
            P[t, t] += alpha * keep
            P[t, 0] += alpha * (1.0 - keep)
    return P


def _require_harsh_uniform(params: ProtocolParams, what: str) -> None:
    if params.beta != 0.0:
        raise ValueError(f"{what} requires beta = 0, got beta={params.beta}")
    if not params.uniform_thresholds:
        raise ValueError(f"{what} requires uniform client thresholds m_o = h_o, got m_o={params.m_o}")


def stationary_closed_form(params: ProtocolParams, env: NetworkEnv) -> ReputationDistribution:
    """Closed-form stationary profile for the harsh-punishment uniform rule.

    mu = 1 / (1 + alpha * h_o); the ladder below h_o is flat at alpha * mu,
    the stretch above decays geometrically, and the remainder piles up at L.
    Rejects beta != 0 or non-uniform thresholds (use stationary_fixed_point).
    """
    _require_harsh_uniform(params, "stationary_closed_form")
    L, h_o = params.L, params.h_o
    alpha = error_punish_prob(env, params.b)
    mu = 1.0 / (1.0 + alpha * h_o)
    eta = np.zeros(L + 1)
    eta[0:h_o + 1] = alpha * mu
    for t in range(h_o + 1, L):
        eta[t] = (1.0 - alpha) ** (t - h_o) * alpha * mu
    eta[L] = 1.0 - (1.0 + h_o * alpha) * mu + (1.0 - alpha) ** (L - h_o) * mu
    return ReputationDistribution(eta=eta, mu=mu, alpha=alpha)


def stationary_fixed_point(params: ProtocolParams, env: NetworkEnv,
                           tol: float = FIXED_POINT_TOL,
                           max_iter: int = FIXED_POINT_MAX_ITER,
                           init: np.ndarray = None) -> ReputationDistribution:
    """Stationary profile of the general (L, beta) scheme by iterating the
    one-period kernel from the uniform distribution until the sup-norm change
    drops below `tol`.

    With alpha = 0 nothing is ever punished and iteration only stalls in
    representation, so the exact point mass at L is returned directly.
    """
    L = params.L
    alpha = error_punish_prob(env, params.b)
    if alpha == 0.0:
        eta = np.zeros(L + 1)
        eta[L] = 1.0
        return ReputationDistribution(eta=eta, mu=1.0, alpha=alpha)
    P = transition_matrix(params, env)
    if init is None:
        eta = np.full(L + 1, 1.0 / (L + 1))
    else:
        eta = np.asarray(init, dtype=float)
        if eta.shape != (L + 1,) or abs(eta.sum() - 1.0) > 1e-9 or (eta < 0).any():
            raise ValueError("init must be a probability vector over 0..L")
    for _ in range(max_iter):
        nxt = eta @ P
        change = float(np.max(np.abs(nxt - eta)))
        eta = nxt
        if change <= tol:
            break
    else:
        raise NonConvergenceError("stationary iteration did not converge", eta, change)
    eta = eta / eta.sum()  # shed accumulated rounding
    mu = float(eta[params.h_o:].sum())
    return ReputationDistribution(eta=eta, mu=mu, alpha=alpha)


def stationary_malicious(params: ProtocolParams, env: NetworkEnv) -> ReputationDistribution:
    """Population profile with a malicious fraction p_d mixed in.

    A malicious peer never delivers usable data, so it climbs while inactive
    (refusing is what an inactive peer is supposed to do) and is punished the
    moment it reaches the activity threshold: its reputation cycles
    0 -> 1 -> ... -> h_o -> 0, i.e. uniform mass 1/(h_o+1) on 0..h_o.  The
    reciprocative remainder sits at the harsh-punishment stationary profile,
    and the population profile is the p_d-weighted mixture.
    """
    if env.p_c != 0.0:
        raise ValueError("malicious mixture assumes p_c = 0 (no altruists)")
    _require_harsh_uniform(params, "stationary_malicious")
    p_d = env.p_d
    recip = stationary_closed_form(params, env)
    omega_d = np.zeros(params.L + 1)
    omega_d[0:params.h_o + 1] = 1.0 / (params.h_o + 1)
    eta = (1.0 - p_d) * recip.eta + p_d * omega_d
    mu = float(eta[params.h_o:].sum())
    return ReputationDistribution(eta=eta, mu=mu, alpha=recip.alpha)


def stationary_altruistic(params: ProtocolParams, env: NetworkEnv) -> ReputationDistribution:
    """Population profile with an altruistic fraction p_c pinned at L.

    Altruists are deployed by the operator and keep reputation L no matter
    what; reciprocative peers follow their usual stationary profile.
    """
    if env.p_d != 0.0:
        raise ValueError("altruistic mixture assumes p_d = 0 (no malicious peers)")
    p_c = env.p_c
    if params.beta == 0.0 and params.uniform_thresholds:
        recip = stationary_closed_form(params, env)
    else:
        recip = stationary_fixed_point(params, env)
    eta = (1.0 - p_c) * recip.eta
    eta[params.L] += p_c
    mu = float(eta[params.h_o:].sum())
    return ReputationDistribution(eta=eta, mu=mu, alpha=recip.alpha)


def stationary_for_regime(params: ProtocolParams, env: NetworkEnv) -> ReputationDistribution:
    """Dispatch to the stationary profile matching the population mix."""
    if env.p_d > 0.0 and env.p_c > 0.0:
        raise ValueError("analytic profiles handle one non-reciprocative kind at a time")
    if env.p_d > 0.0:
        return stationary_malicious(params, env)
    if env.p_c > 0.0:
        return stationary_altruistic(params, env)
    if params.beta == 0.0 and params.uniform_thresholds:
        return stationary_closed_form(params, env)
    return stationary_fixed_point(params, env)
