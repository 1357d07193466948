"""Kernel selection: compiled extension when available, Python mirror otherwise.

Set EHCAP_FORCE_FALLBACK=1 to force the pure-Python kernel (used by the
benchmark and the cross-engine parity tests).
"""

from __future__ import annotations

import os

from ehcap import _kernel_py

try:
    from ehcap import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

KIND_CODES = {
    "bernoulli_exp": 0,
    "generalized_bernoulli": 1,
    "binary_quantization": 2,
    "fixed_fraction": 3,
    "greedy": 4,
    "constant": 5,
}


def _select():
    if os.environ.get("EHCAP_FORCE_FALLBACK"):
        return _kernel_py
    return _compiled if _compiled is not None else _kernel_py


_impl = _select()

USING_COMPILED = _impl is not _kernel_py


def kernel_name() -> str:
    return "compiled" if USING_COMPILED else "python"


def kernel_args(policy) -> tuple[int, float, float]:
    """Map a Policy onto the kernel's (kind_code, a, b) scalar slots."""
    kind = KIND_CODES[policy.kind]
    params = policy.params
    if policy.kind == "binary_quantization":
        return kind, params["q_prime"], params["threshold_x"]
    if policy.kind in ("bernoulli_exp",):
        return kind, params["p"], 0.0
    if policy.kind in ("generalized_bernoulli", "fixed_fraction"):
        return kind, params["q"], 0.0
    if policy.kind == "constant":
        return kind, params["level"], 0.0
    return kind, 0.0, 0.0


def run_policy(policy, battery_cap: float, b0: float, arrivals, impl=None):
    """Run one trajectory; returns (powers, batteries, events)."""
    kind, a, b = kernel_args(policy)
    impl = impl or _impl
    return impl.simulate_kernel(kind, a, b, float(battery_cap), float(b0), arrivals)
