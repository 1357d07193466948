"""Discrete energy-arrival distributions and their battery-clipped versions.

An arrival process is an i.i.d. sequence of nonnegative energy packets drawn
from a finite support. Clipping at the battery size B maps every atom above B
onto B (the excess can never be stored), which is the only statistic of the
arrival law that matters to a finite battery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_PROB_TOL = 1e-12
_DROP_TOL = 1e-15


def _validate(support: np.ndarray, probs: np.ndarray) -> None:
    if support.ndim != 1 or probs.ndim != 1 or support.size != probs.size:
        raise ValueError("support and probs must be 1-d sequences of equal length")
    if support.size == 0:
        raise ValueError("distribution needs at least one atom")
    if not (np.all(np.isfinite(support)) and np.all(np.isfinite(probs))):
        raise ValueError("support and probs must be finite")
    if np.any(support < 0):
        raise ValueError("support values must be >= 0")
    if np.any(np.diff(support) <= 0):
        raise ValueError("support values must be strictly increasing")
    if np.any(probs < 0):
        raise ValueError("probabilities must be >= 0")
    if abs(probs.sum() - 1.0) > _PROB_TOL:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
    if float(support @ probs) <= 0.0:
        raise ValueError("mean energy must be positive")


def _merge(support: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort atoms, merge duplicates, drop negligible mass.

    Renormalizes only when mass was dropped so that rebuilding an already
    clean distribution reproduces its probabilities bitwise (idempotence).
    """
    if not (np.all(np.isfinite(support)) and np.all(np.isfinite(probs))):
        raise ValueError("support and probs must be finite")
    if np.any(probs < 0):
        raise ValueError("probabilities must be >= 0")
    if abs(probs.sum() - 1.0) > _PROB_TOL:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
    order = np.argsort(support, kind="stable")
    support, probs = support[order], probs[order]
    uniq, inverse = np.unique(support, return_inverse=True)
    merged = np.zeros(uniq.size)
    np.add.at(merged, inverse, probs)
    keep = merged >= _DROP_TOL
    if not np.all(keep):
        uniq, merged = uniq[keep], merged[keep]
        merged = merged / merged.sum()
    return uniq, merged


@dataclass(frozen=True)
class EnergyDistribution:
    """Finite discrete law of the i.i.d. energy arrivals."""

    support: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        _validate(np.asarray(self.support, dtype=float), np.asarray(self.probs, dtype=float))

    @classmethod
    def from_values(cls, support, probs) -> "EnergyDistribution":
        """Construct after sorting, merging duplicate atoms and dropping
        probabilities below 1e-15 (renormalizing the rest)."""
        s, p = _merge(np.asarray(support, dtype=float), np.asarray(probs, dtype=float))
        return cls(tuple(s.tolist()), tuple(p.tolist()))

    @classmethod
    def bernoulli(cls, p: float, energy: float) -> "EnergyDistribution":
        """Arrivals of size ``energy`` with probability p, else nothing."""
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {p!r}")
        if p == 1.0:
            return cls.from_values([energy], [1.0])
        return cls.from_values([0.0, energy], [1.0 - p, p])

    @classmethod
    def deterministic(cls, energy: float) -> "EnergyDistribution":
        return cls.from_values([energy], [1.0])

    def to_json(self) -> dict:
        return {"support": list(self.support), "probs": list(self.probs)}

    @classmethod
    def from_json(cls, obj: dict) -> "EnergyDistribution":
        if not isinstance(obj, dict) or set(obj) - {"support", "probs"}:
            raise ValueError("distribution JSON must be {'support': [...], 'probs': [...]}")
        return cls.from_values(obj["support"], obj["probs"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EnergyDistribution":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class ClippedDistribution:
    """Law of min{E, B} for battery size B, with its exact summary moments.

    mu = E[min{E, B}], sigma2 = Var(min{E, B}) and q = mu/B are computed
    from the discrete masses, so they carry no quadrature error.
    """

    base: EnergyDistribution
    battery_cap: float
    support: tuple[float, ...]
    probs: tuple[float, ...]
    mu: float
    sigma2: float
    q: float

    def __post_init__(self):
        if max(self.support) > self.battery_cap:
            raise ValueError("clipped support exceeds battery_cap")
        if not 0.0 < self.mu <= self.battery_cap + _PROB_TOL:
            raise ValueError("clipped mean outside (0, battery_cap]")
        if self.sigma2 > self.mu * (self.battery_cap - self.mu) + _PROB_TOL:
            raise ValueError("variance violates the Bhatia-Davis bound")

    def ccdf(self, x: float) -> float:
        """Pr{min(E, B) >= x}, inclusive at atoms.

        The >=-inclusive convention is load-bearing: the threshold search in
        the binary-quantization policy evaluates x * ccdf(x) at atoms.
        """
        if not 0.0 <= x <= self.battery_cap:
            raise ValueError(f"x must be in [0, {self.battery_cap}], got {x!r}")
        support = np.asarray(self.support)
        lo = int(np.searchsorted(support, x, side="left"))
        return float(np.sum(np.asarray(self.probs)[lo:]))

    def sample(self, rng_seed, n: int) -> np.ndarray:
        """n i.i.d. draws; identical seed gives an identical sequence.

        Draws are produced by inverse-CDF lookup on the atom index, so every
        sampled value equals a support atom exactly (bitwise).
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(rng_seed)
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, rng.random(n), side="right")
        return np.asarray(self.support)[np.minimum(idx, len(self.support) - 1)]

    def is_bernoulli(self) -> bool:
        """True when all mass sits on {0, battery_cap}."""
        return all(v == 0.0 or v == self.battery_cap for v in self.support)


def clip(dist: EnergyDistribution, battery_cap: float) -> ClippedDistribution:
    """Clip an arrival law at the battery size.

    Mass on atoms >= battery_cap accumulates in a point mass at battery_cap;
    moments of the clipped variable are computed exactly from the masses.
    """
    if battery_cap <= 0:
        raise ValueError(f"battery_cap must be > 0, got {battery_cap!r}")
    support = np.minimum(np.asarray(dist.support, dtype=float), battery_cap)
    s, p = _merge(support, np.asarray(dist.probs, dtype=float))
    mu = float(s @ p)
    sigma2 = float(((s - mu) ** 2) @ p)
    return ClippedDistribution(
        base=dist,
        battery_cap=float(battery_cap),
        support=tuple(s.tolist()),
        probs=tuple(p.tolist()),
        mu=mu,
        sigma2=sigma2,
        q=mu / float(battery_cap),
    )
