import time

import numpy as np
import pytest

from ehcap.dist import EnergyDistribution, clip


def make_random_clipped(rng, max_atoms=5, min_q=0.05):
    """Random small discrete arrival law with its clipped version.

    Supports 2..max_atoms atoms, sometimes exercises clipping (atoms above
    the cap), and resamples until q = mu/cap is not degenerate.
    """
    for _ in range(100):
        n_atoms = int(rng.integers(2, max_atoms + 1))
        cap = float(rng.uniform(0.5, 8.0))
        hi = cap * float(rng.uniform(0.8, 1.5))
        support = np.sort(rng.uniform(0.0, hi, size=n_atoms))
        if rng.random() < 0.5:
            support[0] = 0.0
        probs = rng.dirichlet(np.ones(n_atoms))
        if probs.max() > 1.0 - 1e-9:
            continue
        dist = EnergyDistribution.from_values(support, probs)
        clipped = clip(dist, cap)
        if clipped.q >= min_q:
            return clipped
    raise RuntimeError("failed to draw a usable random distribution")


@pytest.fixture(scope="session")
def eta_result():
    """Five-region verification is expensive; run it once per session."""
    from ehcap.smith import verify_eta

    start = time.perf_counter()
    report = verify_eta()
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def eta_report(eta_result):
    return eta_result[0]
