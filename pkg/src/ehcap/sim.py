"""Battery-dynamics simulation, Monte-Carlo throughput, and epoch statistics.

Trajectory convention: the first recorded step spends from the initial
battery b0 before any energy arrives (arrivals[0] = 0), and arrivals[t]
lands at the start of step t for t >= 1. With the default b0 = battery_cap
the process starts at a regeneration point, so no burn-in is discarded.
Rates are in bits: r(g) = 0.5*log2(1+g).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from ehcap.dist import ClippedDistribution
from ehcap.engine import USING_COMPILED, run_policy
from ehcap.policies import Policy
from ehcap.serialize import write_csv

_LN2 = np.log(2.0)
_RELATIVE_TAIL = 1e-12


class AdmissibilityError(RuntimeError):
    """A policy tried to spend more energy than the battery holds."""


class InsufficientDataError(RuntimeError):
    """Too few complete epochs to form renewal statistics."""


def rate(power):
    """Instantaneous rate 0.5*log2(1+g) in bits per channel use."""
    return 0.5 * np.log1p(power) / _LN2


def step_battery(b: float, g: float, e_next: float, battery_cap: float) -> float:
    """One battery update min{b - g + e_next, battery_cap}."""
    if g < 0:
        raise ValueError(f"negative power {g}")
    if e_next < 0:
        raise ValueError(f"negative arrival {e_next}")
    if g > b:
        raise AdmissibilityError(f"power {g} exceeds battery {b}")
    return min(b - g + e_next, battery_cap)


@dataclass(frozen=True, eq=False)
class BatteryTrajectory:
    """One simulated path: per-step arrivals, powers, battery levels, events."""

    arrivals: np.ndarray
    powers: np.ndarray
    batteries: np.ndarray
    epoch_starts: np.ndarray


def simulate(
    policy: Policy,
    dist: ClippedDistribution,
    n: int,
    b0: float | None = None,
    seed=0,
) -> BatteryTrajectory:
    """Run an n-step trajectory; deterministic per seed."""
    cap = dist.battery_cap
    if b0 is None:
        b0 = cap
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0 <= b0 <= cap:
        raise ValueError(f"b0={b0} outside [0, {cap}]")
    arrivals = np.zeros(n, dtype=np.float64)
    if n > 1:
        arrivals[1:] = dist.sample(seed, n - 1)
    powers, batteries, events = run_policy(policy, cap, b0, arrivals)
    return BatteryTrajectory(arrivals, powers, batteries, np.flatnonzero(events))


@dataclass(frozen=True)
class ThroughputEstimate:
    """Monte-Carlo throughput with across-trial standard error."""

    mean_rate: float
    stderr: float
    n_steps: int
    n_trials: int
    epoch_mean_L: float
    epoch_mean_L2: float
    chernoff_bound: float

    def to_json(self) -> dict:
        return {
            "mean_rate": self.mean_rate,
            "stderr": self.stderr,
            "n": self.n_steps,
            "trials": self.n_trials,
            "epoch_mean_L": self.epoch_mean_L,
            "epoch_mean_L2": self.epoch_mean_L2,
            "chernoff_bound": self.chernoff_bound,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ThroughputEstimate":
        return cls(
            mean_rate=float(obj["mean_rate"]),
            stderr=float(obj["stderr"]),
            n_steps=int(obj["n"]),
            n_trials=int(obj["trials"]),
            epoch_mean_L=float(obj["epoch_mean_L"]),
            epoch_mean_L2=float(obj["epoch_mean_L2"]),
            chernoff_bound=float(obj["chernoff_bound"]),
        )


def _thread_count() -> int:
    return max(1, int(os.environ.get("EHCAP_THREADS", "1")))


def estimate_throughput(
    policy: Policy,
    dist: ClippedDistribution,
    n: int = 100_000,
    trials: int = 32,
    b0: float | None = None,
    seed=0,
) -> ThroughputEstimate:
    """Average rate over independent trials, reduced in trial order."""
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    children = np.random.SeedSequence(seed).spawn(trials)

    def one(child):
        traj = simulate(policy, dist, n, b0, child)
        lengths = np.diff(traj.epoch_starts)
        return float(np.mean(rate(traj.powers))), lengths

    workers = _thread_count()
    if workers > 1 and USING_COMPILED and trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(child) for child in children]

    trial_means = np.array([r[0] for r in results])
    lengths = np.concatenate([r[1] for r in results]) if results else np.array([])
    mean_rate = float(np.mean(trial_means))
    stderr = float(np.std(trial_means, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    if lengths.size:
        mean_L = float(np.mean(lengths))
        mean_L2 = float(np.mean(lengths.astype(np.float64) ** 2))
    else:
        mean_L = mean_L2 = float("nan")
    return ThroughputEstimate(
        mean_rate=mean_rate,
        stderr=stderr,
        n_steps=n,
        n_trials=trials,
        epoch_mean_L=mean_L,
        epoch_mean_L2=mean_L2,
        chernoff_bound=chernoff_epoch_bound(dist),
    )


def bernoulli_renewal_throughput(p: float, battery_cap: float) -> float:
    """Renewal-reward value of the Bernoulli policy on {0, battery_cap} arrivals.

    Sums p*(1-p)^(i-1) * 0.5*log2(1 + cap*p*(1-p)^(i-1)) over i >= 1,
    truncated once the remaining tail is below 1e-12 relative.
    """
    if not 0 < p <= 1:
        raise ValueError(f"need 0 < p <= 1, got {p}")
    if battery_cap <= 0:
        raise ValueError(f"need battery_cap > 0, got {battery_cap}")
    if p == 1.0:
        return float(0.5 * np.log2(1.0 + battery_cap))
    om = 1.0 - p
    total = 0.0
    block = 512
    start = 0
    while True:
        i = np.arange(start, start + block)
        dec = om**i
        total += float(np.sum(p * dec * 0.5 * np.log1p(battery_cap * p * dec) / _LN2))
        start += block
        # remaining terms are below (cap*p/(2 ln 2)) * sum of (1-p)^(2i)
        tail = battery_cap * p / (2.0 * _LN2) * om ** (2 * start) / (1.0 - om * om)
        if tail <= _RELATIVE_TAIL * total:
            return total


@dataclass(frozen=True, eq=False)
class EpochStats:
    """Renewal-epoch moments and identity residuals from one trajectory."""

    mean_L: float
    mean_L2: float
    wald1_residual: float
    wald2_residual: float
    chernoff_bound: float
    n_epochs: int
    epoch_lengths: np.ndarray
    epoch_energies: np.ndarray


def chernoff_epoch_bound(dist: ClippedDistribution) -> float:
    """Upper bound on the mean epoch length via a theta-grid Chernoff bound.

    E[L] <= min over theta > 0 of exp(theta*cap) / (1 - E[exp(-theta*E)]),
    evaluated on 64 log-spaced points in [1e-3, 1e2].
    """
    thetas = np.logspace(-3.0, 2.0, 64)
    x = np.array(dist.support)
    pr = np.array(dist.probs)
    mgf = np.exp(-np.outer(thetas, x)) @ pr
    log_vals = thetas * dist.battery_cap - np.log1p(-mgf)
    return float(np.exp(np.min(log_vals)))


def epoch_statistics(traj: BatteryTrajectory, dist: ClippedDistribution) -> EpochStats:
    """Epoch lengths/energies between consecutive events, plus Wald residuals."""
    starts = traj.epoch_starts
    if len(starts) < 31:
        raise InsufficientDataError(
            f"need >= 30 complete epochs, trajectory has {max(len(starts) - 1, 0)}"
        )
    lengths = np.diff(starts).astype(np.float64)
    csum = np.concatenate([[0.0], np.cumsum(traj.arrivals)])
    energies = csum[starts[1:] + 1] - csum[starts[:-1] + 1]
    mean_L = float(np.mean(lengths))
    mean_L2 = float(np.mean(lengths**2))
    centered = energies - dist.mu * lengths
    wald1 = float(abs(np.mean(energies) - dist.mu * mean_L))
    wald2 = float(abs(np.mean(centered**2) - dist.sigma2 * mean_L))
    return EpochStats(
        mean_L=mean_L,
        mean_L2=mean_L2,
        wald1_residual=wald1,
        wald2_residual=wald2,
        chernoff_bound=chernoff_epoch_bound(dist),
        n_epochs=len(lengths),
        epoch_lengths=lengths,
        epoch_energies=energies,
    )


def entropy_per_symbol(flags, block_len: int = 8) -> float:
    """Plug-in block-entropy rate of binary event flags, pooled across trials.

    Sliding windows of block_len symbols are counted (within each trial) and
    the empirical block entropy is divided by block_len; always <= 1.
    """
    if block_len < 1 or block_len > 32:
        raise ValueError(f"block_len must be in [1, 32], got {block_len}")
    if isinstance(flags, np.ndarray) and flags.ndim == 1:
        per_trial = [flags]
    else:
        per_trial = list(flags)
    weights = 1 << np.arange(block_len, dtype=np.int64)
    counts = np.zeros(1 << block_len, dtype=np.int64)
    for run in per_trial:
        a = np.asarray(run).astype(np.int64)
        if a.size < block_len:
            continue
        codes = np.lib.stride_tricks.sliding_window_view(a, block_len) @ weights
        counts += np.bincount(codes, minlength=1 << block_len)
    total = counts.sum()
    if total == 0:
        raise InsufficientDataError("no complete blocks in the provided flags")
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum() / block_len)


@dataclass(frozen=True)
class InvarianceResult:
    """Throughput gap between full-battery and empty-battery starts."""

    delta: float
    pooled_stderr: float
    mean_full: float
    mean_empty: float


def initial_state_invariance_check(
    policy: Policy,
    dist: ClippedDistribution,
    n: int = 100_000,
    trials: int = 32,
    seed=0,
) -> InvarianceResult:
    """Compare b0 = battery_cap against b0 = 0 on common arrival streams."""
    children = np.random.SeedSequence(seed).spawn(trials)

    def means_for(b0):
        out = np.empty(trials)
        for i, child in enumerate(children):
            traj = simulate(policy, dist, n, b0, child)
            out[i] = np.mean(rate(traj.powers))
        return out

    full = means_for(dist.battery_cap)
    empty = means_for(0.0)
    if trials > 1:
        se_full = np.std(full, ddof=1) / np.sqrt(trials)
        se_empty = np.std(empty, ddof=1) / np.sqrt(trials)
    else:
        se_full = se_empty = 0.0
    return InvarianceResult(
        delta=float(abs(np.mean(full) - np.mean(empty))),
        pooled_stderr=float(np.hypot(se_full, se_empty)),
        mean_full=float(np.mean(full)),
        mean_empty=float(np.mean(empty)),
    )


def trajectory_to_csv(traj: BatteryTrajectory, out: TextIO, meta: dict | None = None) -> None:
    """Dump columns t, arrival, battery, power, rate, epoch_flag."""
    flags = np.zeros(len(traj.arrivals), dtype=np.int64)
    flags[traj.epoch_starts] = 1
    rates = rate(traj.powers)
    rows = (
        (t, float(traj.arrivals[t]), float(traj.batteries[t]), float(traj.powers[t]),
         float(rates[t]), int(flags[t]))
        for t in range(len(traj.arrivals))
    )
    write_csv(out, ("t", "arrival", "battery", "power", "rate", "epoch_flag"), rows, meta)
