"""Online power-control policies as pure state machines.

Each step function takes the previous state (post-allocation balance), the
current arrival, and the battery size; it applies the battery recursion,
detects the policy's epoch event, and returns the allocated power together
with the next state. Keeping policies as (state in, state out) maps enables
deterministic replay and embarrassingly parallel trials.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ehcap.dist import ClippedDistribution

EVENT_TOL = 1e-12

KINDS = (
    "bernoulli_exp",
    "generalized_bernoulli",
    "binary_quantization",
    "fixed_fraction",
    "greedy",
    "constant",
)

_REQUIRED_PARAMS = {
    "bernoulli_exp": ("p",),
    "generalized_bernoulli": ("q",),
    "binary_quantization": ("threshold_x", "q_prime"),
    "fixed_fraction": ("q",),
    "greedy": (),
    "constant": ("level",),
}


def _check_fraction(name: str, value: float) -> float:
    if not 0.0 < value <= 1.0:
        raise ValueError(f"{name} must be in (0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class PolicyState:
    """Carry-over between steps: balance, epoch counter, and event marker."""

    battery: float
    steps_since_event: int
    event_flag: bool


def initial_state(b0: float, battery_cap: float) -> PolicyState:
    """Start state; t = 0 counts as a virtual epoch event (non-delayed)."""
    if not 0.0 <= b0 <= battery_cap:
        raise ValueError(f"b0 must be in [0, {battery_cap}], got {b0!r}")
    return PolicyState(float(b0), 0, b0 >= battery_cap - EVENT_TOL)


def _advance(state: PolicyState, arrival: float, battery_cap: float, event: bool):
    bat = min(state.battery + arrival, battery_cap)
    k = 0 if event else state.steps_since_event + 1
    return bat, k


def _emit(bat: float, g: float, k: int, event: bool) -> tuple[float, PolicyState]:
    g = min(g, bat)
    return g, PolicyState(bat - g, k, event)


def bernoulli_policy_step(
    state: PolicyState, arrival: float, p: float, battery_cap: float
) -> tuple[float, PolicyState]:
    """Allocate cap*p*(1-p)^k, k the steps since the last cap-sized arrival.

    Equivalently a fraction p of the remaining battery on cap-sized
    Bernoulli arrivals; well-defined (and admissible) for any arrival law.
    """
    p = _check_fraction("p", p)
    event = arrival >= battery_cap - EVENT_TOL
    bat, k = _advance(state, arrival, battery_cap, event)
    return _emit(bat, battery_cap * p * (1.0 - p) ** k, k, event)


def generalized_bernoulli_step(
    state: PolicyState, arrival: float, q: float, battery_cap: float
) -> tuple[float, PolicyState]:
    """Allocate cap*q*(1-q)^k, k the steps since the battery was last full.

    The epoch restarts whenever the post-arrival battery reaches the cap
    (within 1e-12 absolute); total drain between refills stays below cap.
    """
    q = _check_fraction("q", q)
    bat = min(state.battery + arrival, battery_cap)
    event = bat >= battery_cap - EVENT_TOL
    k = 0 if event else state.steps_since_event + 1
    return _emit(bat, battery_cap * q * (1.0 - q) ** k, k, event)


def binary_quantization_step(
    state: PolicyState, arrival: float, threshold_x: float, q_prime: float, battery_cap: float
) -> tuple[float, PolicyState]:
    """Treat arrivals >= x as packets of size exactly x and run the
    exponential drain at level x with probability q_prime; all other
    energy is ignored by the allocation rule (it still charges the battery).
    """
    if not 0.0 < threshold_x <= battery_cap:
        raise ValueError(f"threshold_x must be in (0, {battery_cap}], got {threshold_x!r}")
    q_prime = _check_fraction("q_prime", q_prime)
    event = arrival >= threshold_x
    bat, k = _advance(state, arrival, battery_cap, event)
    return _emit(bat, threshold_x * q_prime * (1.0 - q_prime) ** k, k, event)


def fixed_fraction_step(
    state: PolicyState, arrival: float, q: float, battery_cap: float
) -> tuple[float, PolicyState]:
    """Allocate a fixed fraction q of the post-arrival battery level."""
    q = _check_fraction("q", q)
    bat = min(state.battery + arrival, battery_cap)
    event = bat >= battery_cap - EVENT_TOL
    k = 0 if event else state.steps_since_event + 1
    return _emit(bat, q * bat, k, event)


def baseline_step(
    state: PolicyState, arrival: float, kind: str, level: float, battery_cap: float
) -> tuple[float, PolicyState]:
    """Comparison baselines: greedy full drain, or a constant level."""
    if kind not in ("greedy", "constant"):
        raise ValueError(f"baseline kind must be greedy or constant, got {kind!r}")
    if kind == "constant" and level < 0:
        raise ValueError(f"level must be >= 0, got {level!r}")
    bat = min(state.battery + arrival, battery_cap)
    event = bat >= battery_cap - EVENT_TOL
    k = 0 if event else state.steps_since_event + 1
    g = bat if kind == "greedy" else min(level, bat)
    return _emit(bat, g, k, event)


def best_threshold(dist: ClippedDistribution) -> tuple[float, float]:
    """Exact argmax of x * ccdf(x) over x in (0, cap].

    The ccdf is a step function, constant on (v_{k-1}, v_k], so x*ccdf(x)
    increases linearly on each interval and the maximum sits on a support
    atom; enumerating atoms is exact.
    """
    candidates = [v for v in dist.support if v > 0.0]
    values = [v * dist.ccdf(v) for v in candidates]
    i = int(np.argmax(values))
    return candidates[i], values[i]


@dataclass(frozen=True)
class Policy:
    """Immutable policy descriptor: a kind plus its scalar parameters."""

    kind: str
    params: Mapping[str, float]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        required = _REQUIRED_PARAMS[self.kind]
        if set(self.params) != set(required):
            raise ValueError(f"{self.kind} expects params {required}, got {tuple(self.params)}")
        p = self.params
        if self.kind == "bernoulli_exp":
            _check_fraction("p", p["p"])
        elif self.kind in ("generalized_bernoulli", "fixed_fraction"):
            _check_fraction("q", p["q"])
        elif self.kind == "binary_quantization":
            if p["threshold_x"] <= 0:
                raise ValueError(f"threshold_x must be > 0, got {p['threshold_x']!r}")
            _check_fraction("q_prime", p["q_prime"])
        elif self.kind == "constant" and p["level"] < 0:
            raise ValueError(f"level must be >= 0, got {p['level']!r}")

    @classmethod
    def bernoulli_exp(cls, p: float) -> "Policy":
        return cls("bernoulli_exp", {"p": float(p)})

    @classmethod
    def generalized_bernoulli(cls, q: float) -> "Policy":
        return cls("generalized_bernoulli", {"q": float(q)})

    @classmethod
    def binary_quantization(cls, threshold_x: float, q_prime: float) -> "Policy":
        return cls("binary_quantization", {"threshold_x": float(threshold_x), "q_prime": float(q_prime)})

    @classmethod
    def fixed_fraction(cls, q: float) -> "Policy":
        return cls("fixed_fraction", {"q": float(q)})

    @classmethod
    def greedy(cls) -> "Policy":
        return cls("greedy", {})

    @classmethod
    def constant(cls, level: float) -> "Policy":
        return cls("constant", {"level": float(level)})

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj: dict) -> "Policy":
        if not isinstance(obj, dict) or set(obj) != {"kind", "params"}:
            raise ValueError("policy JSON must be {'kind': ..., 'params': {...}}")
        return cls(obj["kind"], {k: float(v) for k, v in obj["params"].items()})


def policy_step(
    policy: Policy, state: PolicyState, arrival: float, battery_cap: float
) -> tuple[float, PolicyState]:
    """Dispatch one step of any policy kind (reference path; the simulation
    engine runs the same semantics in its kernel)."""
    p = policy.params
    if policy.kind == "bernoulli_exp":
        return bernoulli_policy_step(state, arrival, p["p"], battery_cap)
    if policy.kind == "generalized_bernoulli":
        return generalized_bernoulli_step(state, arrival, p["q"], battery_cap)
    if policy.kind == "binary_quantization":
        return binary_quantization_step(state, arrival, p["threshold_x"], p["q_prime"], battery_cap)
    if policy.kind == "fixed_fraction":
        return fixed_fraction_step(state, arrival, p["q"], battery_cap)
    if policy.kind == "greedy":
        return baseline_step(state, arrival, "greedy", 0.0, battery_cap)
    return baseline_step(state, arrival, "constant", p["level"], battery_cap)
