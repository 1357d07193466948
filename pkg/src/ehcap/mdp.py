"""Discretized average-reward dynamic program for online throughput.

The state is the post-arrival battery level on a uniform grid, actions are
grid levels not exceeding the state, and the post-decision residual plus the
next arrival snaps to the nearest grid level. Relative value iteration with a
half damping step (which removes periodicity) returns the long-run average
rate; policy scoring reuses the same snapped dynamics, so no scored policy
can beat the Bellman optimum on its own grid beyond iteration tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from ehcap.dist import ClippedDistribution
from ehcap.policies import Policy

_LN2 = np.log(2.0)
_EVENT_TOL = 1e-12
_EPOCH_CAP = 96
_OVERFLOW_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Iteration did not reach its tolerance; carries the last span/residual."""

    def __init__(self, message: str, span: float):
        super().__init__(message)
        self.span = span


class CapTooSmallError(RuntimeError):
    """Stationary mass at the truncated epoch counter exceeds tolerance."""


@dataclass(frozen=True, eq=False)
class MdpModel:
    """Snapped battery MDP: grid, arrival law, rewards, transition table."""

    dist: ClippedDistribution
    battery_grid: np.ndarray
    reward: np.ndarray
    next_idx: np.ndarray
    arrival_probs: np.ndarray


def build_mdp(dist: ClippedDistribution, n_levels: int = 256) -> MdpModel:
    """Uniform battery grid with nearest-level transition snapping."""
    if n_levels < 8:
        raise ValueError(f"n_levels must be >= 8, got {n_levels!r}")
    cap = dist.battery_cap
    grid = np.linspace(0.0, cap, n_levels)
    h = cap / (n_levels - 1)
    arrivals = np.asarray(dist.support)
    raw = np.rint((grid[:, None] + arrivals[None, :]) / h).astype(np.int64)
    return MdpModel(
        dist=dist,
        battery_grid=grid,
        reward=0.5 * np.log1p(grid) / _LN2,
        next_idx=np.clip(raw, 0, n_levels - 1),
        arrival_probs=np.asarray(dist.probs),
    )


def _bellman(v: np.ndarray, model: MdpModel, lag: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One sweep of T(v); lag[i, j] = i - j clipped, with j > i masked off."""
    wv = model.arrival_probs @ v[model.next_idx].T
    values = model.reward[None, :] + wv[lag]
    values[lag < 0] = -np.inf
    arg = values.argmax(axis=1)
    return values[np.arange(v.size), arg], arg


def value_iterate(
    model: MdpModel, tol: float = 1e-8, max_iters: int = 100_000
) -> tuple[float, np.ndarray]:
    """Average-reward gain and per-state action levels by relative iteration.

    Damped updates u = (v + T(v))/2 are normalized at state 0; the iteration
    stops when the drift span certifies the gain within tol.
    """
    if tol < 1e-8:
        raise ValueError(f"tol must be >= 1e-8, got {tol!r}")
    n = model.battery_grid.size
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    v = np.zeros(n)
    span = np.inf
    for _ in range(max_iters):
        t, _ = _bellman(v, model, lag)
        delta = 0.5 * (t - v)
        span = float(delta.max() - delta.min())
        if span <= 0.5 * tol:
            gain = float(delta.max() + delta.min())
            _, arg = _bellman(v, model, lag)
            return gain, model.battery_grid[arg].copy()
        v = v + delta
        v -= v[0]
    raise ConvergenceError(f"span {span!r} after {max_iters} iterations", span)


def _battery_action_idx(model: MdpModel, policy: Policy) -> np.ndarray:
    grid = model.battery_grid
    n = grid.size
    h = grid[1] - grid[0]
    states = np.arange(n)
    if policy.kind == "greedy":
        return states
    if policy.kind == "fixed_fraction":
        levels = policy.params["q"] * grid
    else:
        levels = np.full(n, policy.params["level"])
    return np.minimum(np.rint(levels / h).astype(np.int64), states)


def _stationary(transition: scipy.sparse.csr_matrix, tol: float) -> np.ndarray:
    """Stationary row vector of a (possibly periodic) stochastic matrix."""
    n = transition.shape[0]
    pt = transition.T.tocsr()
    pi = np.full(n, 1.0 / n)
    for _ in range(200_000):
        nxt = 0.5 * pi + 0.5 * (pt @ pi)
        diff = float(np.abs(nxt - pi).sum())
        pi = nxt
        if diff <= tol:
            pi = np.maximum(pi, 0.0)
            return pi / pi.sum()
    raise ConvergenceError(f"stationary residual {diff!r}", diff)


def evaluate_policy(model: MdpModel, policy: Policy, tol: float = 1e-12) -> float:
    """Long-run average rate of a policy snapped to the model grid.

    Battery-state policies run on the plain grid chain; epoch policies extend
    the state with a steps-since-event counter capped at 64 and fail with
    CapTooSmallError when the truncated counter keeps stationary mass above
    1e-9 (the epoch outlives the cap too often for the score to be trusted).
    """
    n = model.battery_grid.size
    if policy.kind in ("fixed_fraction", "greedy", "constant"):
        act = _battery_action_idx(model, policy)
        targets = model.next_idx[np.arange(n) - act]
        rows = np.repeat(np.arange(n), targets.shape[1])
        probs = np.tile(model.arrival_probs, n)
        p = scipy.sparse.csr_matrix(
            (probs, (rows, targets.ravel())), shape=(n, n)
        )
        pi = _stationary(p, tol)
        return float(pi @ model.reward[act])
    return _evaluate_epoch_policy(model, policy, tol)


def _evaluate_epoch_policy(model: MdpModel, policy: Policy, tol: float) -> float:
    cap = model.battery_grid[-1]
    h = model.battery_grid[1] - model.battery_grid[0]
    n = model.battery_grid.size
    arrivals = np.asarray(model.dist.support)
    if policy.kind == "bernoulli_exp":
        amp, frac = cap, policy.params["p"]
        arrival_event = arrivals >= cap - _EVENT_TOL
    elif policy.kind == "generalized_bernoulli":
        amp, frac = cap, policy.params["q"]
        arrival_event = None
    else:
        amp, frac = policy.params["threshold_x"], policy.params["q_prime"]
        if amp > cap:
            raise ValueError(f"threshold_x must be <= battery_cap, got {amp!r}")
        arrival_event = arrivals >= amp
    taus = np.arange(_EPOCH_CAP)
    act_tau = np.rint(amp * frac * (1.0 - frac) ** taus / h).astype(np.int64)
    # state (i, tau) flattened as i * cap_steps + tau
    states_i = np.repeat(np.arange(n), _EPOCH_CAP)
    states_t = np.tile(taus, n)
    act = np.minimum(act_tau[states_t], states_i)
    next_i = model.next_idx[states_i - act]
    if arrival_event is None:
        event = next_i == n - 1
    else:
        event = np.broadcast_to(arrival_event[None, :], next_i.shape)
    next_t = np.where(event, 0, np.minimum(states_t + 1, _EPOCH_CAP - 1)[:, None])
    flat = next_i * _EPOCH_CAP + next_t
    size = n * _EPOCH_CAP
    rows = np.repeat(np.arange(size), flat.shape[1])
    probs = np.tile(model.arrival_probs, size)
    p = scipy.sparse.csr_matrix((probs, (rows, flat.ravel())), shape=(size, size))
    pi = _stationary(p, tol)
    overflow = float(pi.reshape(n, _EPOCH_CAP)[:, -1].sum())
    if overflow > _OVERFLOW_TOL:
        raise CapTooSmallError(
            f"stationary mass {overflow!r} at the epoch cap {_EPOCH_CAP}"
        )
    return float(pi @ model.reward[act])
