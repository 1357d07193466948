"""Closed-form throughput bounds, gap constants, and capacity intervals.

All rates are in bits per channel use. The two max-min optimizations
re-derive the combined policy gap (~1.8034) and its no-receiver-side-
information counterpart (~2.8034); printed constants are never hard-coded
into the optimizations, only compared against afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ehcap.dist import ClippedDistribution
from ehcap.policies import best_threshold

_LN2 = np.log(2.0)
_HALF_LOG2E = 0.5 / _LN2
_NEG_INV_E = -float(np.exp(-1.0))


def lambert_w_minus1(z: float) -> float:
    """Lower real branch of w*exp(w) = z for z in [-1/e, 0).

    Halley iteration from w0 = ln(-z) - ln(-ln(-z)), switched to the
    branch-point expansion w0 = -1 - sqrt(2(1+e*z)) near z = -1/e.
    """
    if not _NEG_INV_E - 1e-15 <= z < 0.0:
        raise ValueError(f"z must be in [-1/e, 0), got {z!r}")
    if z <= _NEG_INV_E:
        return -1.0
    s = 1.0 + np.e * z
    if s < 1e-3:
        w = -1.0 - np.sqrt(2.0 * s)
    else:
        w = np.log(-z) - np.log(-np.log(-z))
    for _ in range(64):
        ew = np.exp(w)
        f = w * ew - z
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0))
        step = f / denom
        w -= step
        if abs(step) <= 1e-14 * (1.0 + abs(w)):
            break
    if abs(w * np.exp(w) - z) > 1e-12 * abs(z):
        raise ArithmeticError(f"lambert_w_minus1 failed to converge at z={z!r}")
    return float(w)


def c_star(q: float) -> float:
    """Threshold fraction c*(q) = -1/W_-1(-q/e), in (0, 1].

    Satisfies the fixed-point identity 1 - c* = c* ln(1/(q c*)).
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q!r}")
    return float(-1.0 / lambert_w_minus1(-q / np.e))


def bernoulli_lower_bound(p: float, battery_cap: float) -> float:
    """Bernoulli-policy throughput 0.5*log2(1+p*cap) - ((1-p)/(2p))log2(1/(1-p))."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p!r}")
    if battery_cap <= 0:
        raise ValueError(f"battery_cap must be > 0, got {battery_cap!r}")
    first = 0.5 * np.log1p(p * battery_cap) / _LN2
    if p == 1.0:
        return float(first)
    return float(first - (1.0 - p) / (2.0 * p) * (-np.log1p(-p) / _LN2))


def binquant_lower_bound(dist: ClippedDistribution) -> float:
    """Best binary-quantization throughput max_x 0.5*log2(1+x*ccdf(x)) - 1/(2 ln 2)."""
    _, value = best_threshold(dist)
    return float(0.5 * np.log1p(value) / _LN2 - _HALF_LOG2E)


def genbern_gap(q: float) -> float:
    """Generalized-Bernoulli gap ((5-3q)/(4q))*log2(1/(1-q)); +inf at q = 1."""
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q!r}")
    if q == 1.0:
        return float("inf")
    return float((5.0 - 3.0 * q) / (4.0 * q) * (-np.log1p(-q) / _LN2))


def _binquant_gap(q: float) -> float:
    # 0.5*log2(e/c*) evaluated as a difference of logs to survive tiny c*
    return 0.5 * (np.log2(np.e) - np.log2(c_star(q)))


def _gap_grid() -> np.ndarray:
    linear = np.linspace(0.0, 1.0, 2050)[1:-1]
    near0 = np.logspace(-12.0, -1.0, 1024)
    near1 = 1.0 - np.logspace(-12.0, -1.0, 1024)
    return np.concatenate([near0, linear, near1])


def gap_branch_curves(qs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-q binary-quantization branch, generalized-Bernoulli branch, and envelope."""
    quant = np.array([_binquant_gap(float(q)) for q in qs])
    genb = np.array([genbern_gap(float(q)) for q in qs])
    return quant, genb, np.minimum(quant, genb)


@lru_cache(maxsize=1)
def combined_online_gap() -> float:
    """Worst-case gap of the better of the two online policies over q in (0, 1]."""
    qs = np.append(_gap_grid(), 1.0)
    _, _, envelope = gap_branch_curves(qs)
    return float(np.max(envelope))


@lru_cache(maxsize=1)
def no_csir_entropy_constant() -> float:
    """max_p [((1-p)/(2p))*log2(1/(1-p)) + H2(p)], by grid then golden section."""

    def f(p: float) -> float:
        h2 = -p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p)
        return (1.0 - p) / (2.0 * p) * (-np.log1p(-p) / _LN2) + h2

    ps = np.linspace(1e-6, 1.0 - 1e-6, 4001)
    i = int(np.argmax([f(p) for p in ps]))
    lo, hi = ps[max(i - 1, 0)], ps[min(i + 1, len(ps) - 1)]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > 1e-10:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = f(x1)
    return float(f((a + b) / 2.0))


@lru_cache(maxsize=1)
def combined_no_csir_gap() -> float:
    """Worst-case gap when the receiver lacks the arrival process.

    The binary-quantization branch pays the re-derived entropy constant and
    the generalized-Bernoulli branch pays one bit of event-flag entropy.
    """
    entropy = no_csir_entropy_constant()
    qs = np.append(_gap_grid(), 1.0)
    best = 0.0
    for q in qs:
        quant = 0.5 * (-np.log2(c_star(float(q)))) + entropy
        genb = genbern_gap(float(q)) + 1.0
        best = max(best, min(quant, genb))
    return float(best)


def gaussian_shaping_gap() -> float:
    """Rate penalty 0.5*log2(pi*e/2) for converting power into coded bits."""
    return float(0.5 * np.log2(np.pi * np.e / 2.0))


@dataclass(frozen=True)
class BoundsReport:
    """All closed-form bounds for one clipped distribution."""

    mu: float
    q: float
    upper: float
    bernoulli_lb: float
    binquant_lb: float
    binquant_guarantee: float
    genbern_lb: float
    c_star: float
    capacity_interval_tx: tuple[float, float]
    capacity_interval_txrx: tuple[float, float]
    derived_interval_txrx: tuple[float, float]
    composite_gap_tx: float
    composite_gap_txrx: float
    rounding_flagged: bool

    def to_json(self) -> dict:
        return {
            "mu": self.mu,
            "q": self.q,
            "upper": self.upper,
            "bernoulli_lb": self.bernoulli_lb,
            "binquant_lb": self.binquant_lb,
            "binquant_guarantee": self.binquant_guarantee,
            "genbern_lb": self.genbern_lb,
            "c_star": self.c_star,
            "capacity_interval_tx": list(self.capacity_interval_tx),
            "capacity_interval_txrx": list(self.capacity_interval_txrx),
            "derived_interval_txrx": list(self.derived_interval_txrx),
            "composite_gap_tx": self.composite_gap_tx,
            "composite_gap_txrx": self.composite_gap_txrx,
            "rounding_flagged": self.rounding_flagged,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BoundsReport":
        return cls(
            mu=float(obj["mu"]),
            q=float(obj["q"]),
            upper=float(obj["upper"]),
            bernoulli_lb=float(obj["bernoulli_lb"]),
            binquant_lb=float(obj["binquant_lb"]),
            binquant_guarantee=float(obj["binquant_guarantee"]),
            genbern_lb=float(obj["genbern_lb"]),
            c_star=float(obj["c_star"]),
            capacity_interval_tx=tuple(float(v) for v in obj["capacity_interval_tx"]),
            capacity_interval_txrx=tuple(float(v) for v in obj["capacity_interval_txrx"]),
            derived_interval_txrx=tuple(float(v) for v in obj["derived_interval_txrx"]),
            composite_gap_tx=float(obj["composite_gap_tx"]),
            composite_gap_txrx=float(obj["composite_gap_txrx"]),
            rounding_flagged=bool(obj["rounding_flagged"]),
        )


def _policy_lower_bound(report_fields: dict) -> float:
    candidates = [report_fields["binquant_lb"], report_fields["genbern_lb"], 0.0]
    if not np.isnan(report_fields["bernoulli_lb"]):
        candidates.append(report_fields["bernoulli_lb"])
    return max(candidates)


def capacity_intervals(dist: ClippedDistribution) -> BoundsReport:
    """Assemble upper bound, policy lower bounds, and capacity intervals."""
    mu, q, cap = dist.mu, dist.q, dist.battery_cap
    upper = float(0.5 * np.log1p(mu) / _LN2)
    cs = c_star(q)
    if dist.is_bernoulli():
        bernoulli_lb = bernoulli_lower_bound(dist.ccdf(cap), cap)
    else:
        bernoulli_lb = float("nan")
    binquant_lb = binquant_lower_bound(dist)
    binquant_guarantee = float(upper - 0.5 * (np.log2(np.e) - np.log2(cs)))
    genbern_lb = float(upper - genbern_gap(q))
    shaping = gaussian_shaping_gap()
    composite_txrx = shaping + combined_online_gap()
    composite_tx = composite_txrx + 1.0
    fields = {
        "bernoulli_lb": bernoulli_lb,
        "binquant_lb": binquant_lb,
        "genbern_lb": genbern_lb,
    }
    t_lb = _policy_lower_bound(fields)
    return BoundsReport(
        mu=float(mu),
        q=float(q),
        upper=upper,
        bernoulli_lb=bernoulli_lb,
        binquant_lb=binquant_lb,
        binquant_guarantee=binquant_guarantee,
        genbern_lb=genbern_lb,
        c_star=cs,
        capacity_interval_tx=(max(0.0, upper - 3.85), upper),
        capacity_interval_txrx=(max(0.0, upper - 2.85), upper),
        derived_interval_txrx=(max(0.0, t_lb - shaping), upper),
        composite_gap_tx=float(composite_tx),
        composite_gap_txrx=float(composite_txrx),
        rounding_flagged=bool(composite_tx > 3.85 or composite_txrx > 2.85),
    )


def mult_capacity_bounds(dist: ClippedDistribution, eta: float) -> tuple[float, float]:
    """Multiplicative sandwich [eta * best policy lower bound, 0.5*log2(1+mu)]."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta!r}")
    report = capacity_intervals(dist)
    t_lb = _policy_lower_bound(
        {
            "bernoulli_lb": report.bernoulli_lb,
            "binquant_lb": report.binquant_lb,
            "genbern_lb": report.genbern_lb,
        }
    )
    return (float(eta * t_lb), report.upper)
