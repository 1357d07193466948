"""Amplitude-constrained AWGN capacity and the five-region ratio certificate.

All rates are in bits per channel use; the noise is unit-variance Gaussian
throughout. The discrete-input optimizer alternates convex weight ascent on a
fixed symmetric support with information-density checks on a dense amplitude
grid, inserting support points at the worst violation until the KKT slack
drops below tolerance. ``verify_eta`` assembles the piecewise lower bound on
C(S) / (half log2(1+S)) over five amplitude regions and returns its minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc, roots_hermitenorm

_LN2 = np.log(2.0)
_HALF_LN_2PI = 0.5 * np.log(2.0 * np.pi)
_HALF_LOG2_2PIE = 0.5 * np.log2(2.0 * np.pi * np.e)
_GH_NODES, _gh_w = roots_hermitenorm(151)
_GH_WEIGHTS = _gh_w / np.sqrt(2.0 * np.pi)
_KKT_GRID_SIZE = 1536
_MAX_INSERTIONS = 200


class ConvergenceError(RuntimeError):
    """Support insertion failed to certify optimality; carries best iterate."""

    def __init__(self, message: str, solution: "SmithSolution | None" = None):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class SmithSolution:
    """Certified capacity-achieving discrete input for amplitude bound sqrt(S)."""

    amplitude_sq: float
    capacity: float
    support: tuple[float, ...]
    probs: tuple[float, ...]
    kkt_slack: float

    def to_json(self) -> dict:
        return {
            "amplitude_sq": self.amplitude_sq,
            "capacity": self.capacity,
            "support": list(self.support),
            "probs": list(self.probs),
            "kkt_slack": self.kkt_slack,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SmithSolution":
        return cls(
            amplitude_sq=float(payload["amplitude_sq"]),
            capacity=float(payload["capacity"]),
            support=tuple(float(x) for x in payload["support"]),
            probs=tuple(float(p) for p in payload["probs"]),
            kkt_slack=float(payload["kkt_slack"]),
        )


@dataclass(frozen=True, eq=False)
class EtaReport:
    """Per-region minima of the capacity ratio plus the supporting curve."""

    region1: float
    region2: float
    region3: float
    region4: float
    region5: float
    eta: float
    ratio_floor: float
    curve_S: tuple[float, ...]
    curve_smith: tuple[float, ...]
    curve_epi: tuple[float, ...]
    curve_upper: tuple[float, ...]
    curve_ratio: tuple[float, ...]
    solutions: tuple[SmithSolution, ...]

    def to_json(self) -> dict:
        return {
            "region1": self.region1,
            "region2": self.region2,
            "region3": self.region3,
            "region4": self.region4,
            "region5": self.region5,
            "eta": self.eta,
            "ratio_floor": self.ratio_floor,
        }


def _validated_input(support, probs) -> tuple[np.ndarray, np.ndarray]:
    support = np.asarray(support, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if support.ndim != 1 or support.shape != probs.shape or support.size == 0:
        raise ValueError("support and probs must be equal-length 1-d sequences")
    if not np.all(np.isfinite(support)):
        raise ValueError("support must be finite")
    if np.any(probs < 0.0) or not np.isfinite(probs).all():
        raise ValueError("probs must be non-negative")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probs must sum to 1, got {probs.sum()!r}")
    order = np.argsort(support)
    support = support[order]
    probs = probs[order]
    keep = probs > 0.0
    support = support[keep]
    probs = probs[keep]
    # merge exact-duplicate atoms so degenerate inputs report zero information
    out_x: list[float] = []
    out_p: list[float] = []
    for x, p in zip(support, probs):
        if out_x and x == out_x[-1]:
            out_p[-1] += p
        else:
            out_x.append(float(x))
            out_p.append(float(p))
    return np.array(out_x), np.array(out_p)


def gaussian_mi_discrete(support, probs) -> float:
    """I(X; X+N) in bits for discrete X and unit-variance Gaussian noise.

    Output entropy by adaptive quadrature of the mixture density over
    [min-8, max+8] with absolute tolerance 1e-10.
    """
    support, probs = _validated_input(support, probs)
    if support.size == 1:
        return 0.0
    scale = probs / np.sqrt(2.0 * np.pi)

    def neg_ent(y: float) -> float:
        z = y - support
        f = float(scale @ np.exp(-0.5 * z * z))
        if f < 1e-300:
            return 0.0
        return -f * np.log2(f)

    h_y, _ = quad(
        neg_ent,
        float(support[0] - 8.0),
        float(support[-1] + 8.0),
        epsabs=1e-10,
        limit=400,
        points=[float(x) for x in support],
    )
    return float(h_y - _HALF_LOG2_2PIE)


def binary_input_mi(S: float) -> float:
    """Capacity of equiprobable inputs +-sqrt(S) over the unit AWGN channel."""
    if S < 0.0:
        raise ValueError(f"S must be >= 0, got {S!r}")
    if S == 0.0:
        return 0.0
    a = float(np.sqrt(S))
    return gaussian_mi_discrete([-a, a], [0.5, 0.5])


def binary_input_ratio(S: float) -> float:
    """Binary-input rate over its small-signal proxy S / (2 ln 2)."""
    if S <= 0.0:
        raise ValueError(f"S must be > 0, got {S!r}")
    return binary_input_mi(S) * 2.0 * _LN2 / S


def uniform_input_mi(S: float) -> float:
    """Mutual information of X ~ Uniform[-sqrt(S), sqrt(S)] plus unit noise."""
    if S <= 0.0:
        raise ValueError(f"S must be > 0, got {S!r}")
    a = float(np.sqrt(S))
    inv_width = 0.5 / a
    rt2 = np.sqrt(2.0)

    def neg_ent(y: float) -> float:
        f = inv_width * 0.5 * (erfc((y - a) / rt2) - erfc((y + a) / rt2))
        if f < 1e-300:
            return 0.0
        return -f * np.log2(f)

    h_y, _ = quad(neg_ent, -a - 8.0, a + 8.0, epsabs=1e-9, limit=400, points=[-a, a])
    return float(h_y - _HALF_LOG2_2PIE)


def epi_lower_bound(S: float) -> float:
    """Entropy-power lower bound half log2(1 + 2 S / (pi e)) on C(S)."""
    if S < 0.0:
        raise ValueError(f"S must be >= 0, got {S!r}")
    return float(0.5 * np.log2(1.0 + 2.0 * S / (np.pi * np.e)))


def epi_additive_lower_bound(S: float) -> float:
    """Additive form half log2(1+S) - half log2(pi e / 2) of the same bound."""
    if S < 0.0:
        raise ValueError(f"S must be >= 0, got {S!r}")
    return float(0.5 * np.log2(1.0 + S) - 0.5 * np.log2(np.pi * np.e / 2.0))


def epi_ratio_floor() -> float:
    """Asymptotic ratio floor 2 / (pi e) implied by the entropy-power bound."""
    return float(2.0 / (np.pi * np.e))


def _mi_gauss_hermite(support, probs) -> float:
    """I(X; X+N) in bits via Gauss-Hermite noise averaging (fast inner engine)."""
    support = np.asarray(support, dtype=float)
    probs = np.asarray(probs, dtype=float)
    e_lnf = _expected_log_density(support[:, None] + _GH_NODES[None, :], support, probs)
    h_y = -float(probs @ e_lnf)
    return (h_y - _HALF_LN_2PI - 0.5) / _LN2


def _expected_log_density(y_nodes: np.ndarray, support: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """E_N[ln f(y + N)] for each row of node offsets, f the mixture density."""
    rows, m = y_nodes.shape
    z = y_nodes.reshape(-1, 1) - support[None, :]
    expo = -0.5 * z * z
    shift = expo.max(axis=1)
    dens = np.exp(expo - shift[:, None]) @ probs
    lnf = shift + np.log(np.maximum(dens, 1e-300)) - _HALF_LN_2PI
    return lnf.reshape(rows, m) @ _GH_WEIGHTS


def _weight_ascent(
    support: np.ndarray, probs: np.ndarray, inner_tol_nats: float, max_iter: int = 20000
) -> tuple[np.ndarray, float]:
    """Blahut-style ascent on a fixed support; returns weights and I in nats."""
    j = support.size
    y = support[:, None] + _GH_NODES[None, :]
    z = y.reshape(-1, 1) - support[None, :]
    expo = -0.5 * z * z
    shift = expo.max(axis=1)
    phi = np.exp(expo - shift[:, None])
    base = shift.reshape(j, -1)
    info = 0.0
    for _ in range(max_iter):
        dens = (phi @ probs).reshape(j, -1)
        # d_k = -E_N[ln f(x_k + N)] - half ln(2 pi e) in nats, constants folded
        d = -(base + np.log(np.maximum(dens, 1e-300))) @ _GH_WEIGHTS - 0.5
        info = float(probs @ d)
        if float(d.max()) - info <= inner_tol_nats:
            break
        probs = probs * np.exp(d - info)
        probs /= probs.sum()
    return probs, info


def _kkt_scan(
    support: np.ndarray, probs: np.ndarray, info_nats: float, amplitude: float
) -> tuple[float, float]:
    """Max information-density slack (bits) over [0, amplitude] and its argmax."""
    grid = np.linspace(0.0, amplitude, _KKT_GRID_SIZE)
    best_slack = -np.inf
    best_x = 0.0
    for start in range(0, grid.size, 256):
        xs = grid[start : start + 256]
        e_lnf = _expected_log_density(xs[:, None] + _GH_NODES[None, :], support, probs)
        dens_nats = -e_lnf - (_HALF_LN_2PI + 0.5)
        k = int(np.argmax(dens_nats))
        if dens_nats[k] - info_nats > best_slack:
            best_slack = float(dens_nats[k] - info_nats)
            best_x = float(xs[k])
    return best_slack / _LN2, best_x


def _prune_and_symmetrize(
    support: np.ndarray, probs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    probs = 0.5 * (probs + probs[::-1])
    keep = probs > 1e-12
    keep &= keep[::-1]
    support = support[keep]
    probs = probs[keep]
    return support, probs / probs.sum()


def smith_capacity(S: float, tol: float = 1e-4, *, _init: tuple | None = None) -> SmithSolution:
    """Discrete capacity-achieving input under amplitude constraint sqrt(S).

    Alternates weight ascent with a dense KKT scan, inserting a symmetric
    support pair at the worst information-density violation until the slack
    falls below ``tol`` bits. Raises ConvergenceError (with the best iterate
    attached) after 200 insertions without a certificate.
    """
    if not S > 0.0:
        raise ValueError(f"S must be > 0, got {S!r}")
    if not tol >= 1e-6:
        raise ValueError(f"tol must be >= 1e-6, got {tol!r}")
    a = float(np.sqrt(S))
    sep = 1e-6 * (1.0 + a)
    if _init is not None:
        support, probs = _scaled_init(_init, a, sep)
    else:
        support = np.array([-a, a])
        probs = np.array([0.5, 0.5])
    inner_tol = tol * _LN2 / 4.0
    best: tuple[float, np.ndarray, np.ndarray, float] | None = None
    for _ in range(_MAX_INSERTIONS):
        probs, info_nats = _weight_ascent(support, probs, inner_tol)
        n_before = support.size
        support, probs = _prune_and_symmetrize(support, probs)
        if support.size != n_before:
            probs, info_nats = _weight_ascent(support, probs, inner_tol)
        slack_bits, violator = _kkt_scan(support, probs, info_nats, a)
        if best is None or slack_bits < best[0]:
            best = (slack_bits, support.copy(), probs.copy(), info_nats)
        if slack_bits <= 0.95 * tol:
            return _package(S, support, probs, a)
        gap_to_support = np.min(np.abs(violator - support))
        if gap_to_support > sep:
            if violator <= sep:
                support = np.sort(np.append(support, 0.0))
            else:
                support = np.sort(np.append(support, (-violator, violator)))
            probs = np.full(support.size, 1.0 / support.size)
        else:
            inner_tol *= 0.25
    assert best is not None
    solution = _package(S, best[1], best[2], a)
    raise ConvergenceError(
        f"no KKT certificate within {_MAX_INSERTIONS} support insertions at S={S!r}",
        solution,
    )


def _scaled_init(init: tuple, a: float, sep: float) -> tuple[np.ndarray, np.ndarray]:
    """Rescale a neighboring solution's support to the new amplitude bound."""
    prev_support = np.asarray(init[0], dtype=float)
    prev_probs = np.asarray(init[1], dtype=float)
    # negligible-weight atoms would otherwise accumulate along a warm sweep
    strong = prev_probs >= 1e-9
    strong &= strong[::-1]
    prev_support = prev_support[strong]
    prev_probs = prev_probs[strong]
    if prev_support.size < 2:
        return np.array([-a, a]), np.array([0.5, 0.5])
    scale = a / float(np.abs(prev_support).max())
    scaled = np.clip(prev_support * scale, -a, a)
    scaled[0] = -a
    scaled[-1] = a
    keep = np.ones(scaled.size, dtype=bool)
    keep[1:] = np.diff(scaled) > sep
    keep &= keep[::-1]
    support = scaled[keep]
    probs = prev_probs[keep]
    if support.size < 2:
        return np.array([-a, a]), np.array([0.5, 0.5])
    return support, probs / probs.sum()


def _package(S: float, support: np.ndarray, probs: np.ndarray, a: float) -> SmithSolution:
    capacity = gaussian_mi_discrete(support, probs)
    info_bits = _mi_gauss_hermite(support, probs)
    slack_bits, _ = _kkt_scan(support, probs, info_bits * _LN2, a)
    # certificate is quoted against the quadrature capacity, not the inner engine
    kkt_slack = slack_bits + (info_bits - capacity)
    return SmithSolution(
        amplitude_sq=float(S),
        capacity=float(capacity),
        support=tuple(float(x) for x in support),
        probs=tuple(float(p) for p in probs),
        kkt_slack=float(kkt_slack),
    )


def _bracketed_min(S: np.ndarray, caps: np.ndarray) -> float:
    """Min of C(S_i) / half log2(1 + S_{i+1}); lower-bounds the ratio between
    consecutive points because C is non-decreasing in S."""
    return float(np.min(caps[:-1] / (0.5 * np.log2(1.0 + S[1:]))))


def _solve_sweep(values: np.ndarray, warm: tuple | None, cache: dict) -> tuple:
    for S in values:
        key = float(S)
        if key in cache:
            warm = (cache[key].support, cache[key].probs)
            continue
        sol = smith_capacity(key, tol=1e-4, _init=warm)
        cache[key] = sol
        warm = (sol.support, sol.probs)
    return warm


def verify_eta() -> EtaReport:
    """Five-region lower bound on min_S C(S) / (half log2(1+S)).

    Region 1 uses the monotone binary-input ratio at S = 0.69; regions 2-3 use
    certified discrete-input capacities on a log grid over [0.5, 170] (with a
    local refinement pass around the coarse minimum so the bracketing loss
    stays small); region 4 brackets with uniform inputs on a half-step grid
    over [195, 340]; region 5 is the closed-form entropy-power tail.
    """
    region1 = binary_input_ratio(0.69)

    base = np.logspace(np.log10(0.5), np.log10(170.0), 340)
    base[0] = 0.5
    base[-1] = 170.0
    cache: dict[float, SmithSolution] = {}
    _solve_sweep(base, None, cache)
    # subdivide every interval whose bracketed ratio sits near the coarse
    # minimum; 8x subdivision shrinks the bracketing loss below ~6e-4
    caps = np.array([cache[float(s)].capacity for s in base])
    brackets = caps[:-1] / (0.5 * np.log2(1.0 + base[1:]))
    refine = np.flatnonzero(brackets <= brackets.min() + 6e-3)
    fine = [
        np.logspace(np.log10(base[i]), np.log10(base[i + 1]), 9)[1:-1] for i in refine
    ]
    if fine:
        merged = np.sort(np.concatenate([base, *fine]))
        _solve_sweep(merged, None, cache)

    S_grid = np.array(sorted(cache))
    solutions = tuple(cache[float(s)] for s in S_grid)
    caps = np.array([sol.capacity for sol in solutions])
    region2 = _bracketed_min(S_grid, caps)
    region3 = float(cache[170.0].capacity / (0.5 * np.log2(196.0)))

    S4 = 195.0 + 0.5 * np.arange(291)
    caps4 = np.array([uniform_input_mi(float(s)) for s in S4])
    region4 = float(np.min(caps4 / (0.5 * np.log2(1.0 + S4 + 0.5))))

    region5 = float(1.0 - np.log2(np.pi * np.e / 2.0) / np.log2(341.0))

    upper = 0.5 * np.log2(1.0 + S_grid)
    ratio = np.append(caps[:-1] / (0.5 * np.log2(1.0 + S_grid[1:])), caps[-1] / upper[-1])
    return EtaReport(
        region1=region1,
        region2=region2,
        region3=region3,
        region4=region4,
        region5=region5,
        eta=min(region1, region2, region3, region4, region5),
        ratio_floor=epi_ratio_floor(),
        curve_S=tuple(float(s) for s in S_grid),
        curve_smith=tuple(float(c) for c in caps),
        curve_epi=tuple(epi_lower_bound(float(s)) for s in S_grid),
        curve_upper=tuple(float(u) for u in upper),
        curve_ratio=tuple(float(r) for r in ratio),
        solutions=solutions,
    )
