import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ehcap.dist import EnergyDistribution, clip

from conftest import make_random_clipped


def test_clip_bernoulli_no_clipping():
    c = clip(EnergyDistribution.from_values([0.0, 2.0], [0.5, 0.5]), 2.0)
    assert c.mu == pytest.approx(1.0, abs=1e-15)
    assert c.q == pytest.approx(0.5, abs=1e-15)


def test_clip_moves_mass_to_cap():
    c = clip(EnergyDistribution.from_values([0.0, 3.0], [0.5, 0.5]), 2.0)
    assert list(c.support) == [0.0, 2.0]
    assert c.mu == pytest.approx(1.0, abs=1e-15)
    assert c.q == pytest.approx(0.5, abs=1e-15)


def test_clip_deterministic():
    c = clip(EnergyDistribution.from_values([1.0], [1.0]), 2.0)
    assert c.mu == pytest.approx(1.0, abs=1e-15)
    assert c.sigma2 == pytest.approx(0.0, abs=1e-15)
    assert c.q == pytest.approx(0.5, abs=1e-15)


def test_clip_merges_mass_above_cap():
    c = clip(EnergyDistribution.from_values([0.5, 2.0, 3.0, 7.0], [0.25, 0.25, 0.25, 0.25]), 2.0)
    # atoms at 2, 3 and 7 all collapse onto the cap
    assert list(c.support) == [0.5, 2.0]
    assert list(c.probs) == [0.25, 0.75]


def test_clip_requires_positive_cap():
    d = EnergyDistribution.from_values([1.0], [1.0])
    with pytest.raises(ValueError):
        clip(d, 0.0)
    with pytest.raises(ValueError):
        clip(d, -1.0)


def test_construction_merges_duplicates_and_sorts():
    d = EnergyDistribution.from_values([2.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    assert list(d.support) == [0.0, 2.0]
    assert list(d.probs) == [0.5, 0.5]


def test_construction_drops_negligible_mass():
    d = EnergyDistribution.from_values([0.0, 1.0, 5.0], [0.5, 0.5, 1e-16])
    assert list(d.support) == [0.0, 1.0]
    assert sum(d.probs) == pytest.approx(1.0, abs=1e-15)


def test_construction_rejects_bad_input():
    with pytest.raises(ValueError):
        EnergyDistribution.from_values([0.0, 1.0], [0.6, 0.5])
    with pytest.raises(ValueError):
        EnergyDistribution.from_values([-1.0, 1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        EnergyDistribution.from_values([0.0, 1.0], [1.1, -0.1])
    with pytest.raises(ValueError):
        # no positive-energy mass: E[E] = 0 is not a usable arrival law
        EnergyDistribution.from_values([0.0], [1.0])


def test_ccdf_at_zero_is_one():
    c = clip(EnergyDistribution.from_values([0.0, 1.0, 2.0], [0.2, 0.5, 0.3]), 2.0)
    assert c.ccdf(0.0) == 1.0


def test_ccdf_bernoulli_at_cap():
    c = clip(EnergyDistribution.bernoulli(0.3, 2.0), 2.0)
    assert c.ccdf(2.0) == pytest.approx(0.3, abs=1e-15)


def test_ccdf_inclusive_at_atom():
    # masses at values >= 1 sum to 0.5 + 0.3
    c = clip(EnergyDistribution.from_values([0.0, 1.0, 2.0], [0.2, 0.5, 0.3]), 2.0)
    assert c.ccdf(1.0) == pytest.approx(0.8, abs=1e-15)
    assert c.ccdf(1.0 + 1e-9) == pytest.approx(0.3, abs=1e-15)


def test_ccdf_rejects_out_of_range():
    c = clip(EnergyDistribution.bernoulli(0.5, 2.0), 2.0)
    with pytest.raises(ValueError):
        c.ccdf(-0.1)
    with pytest.raises(ValueError):
        c.ccdf(2.1)


def test_sample_deterministic_atom():
    c = clip(EnergyDistribution.from_values([1.0], [1.0]), 2.0)
    assert list(c.sample(0, 3)) == [1.0, 1.0, 1.0]


def test_sample_mean_within_clt_band():
    c = clip(EnergyDistribution.bernoulli(0.5, 2.0), 2.0)
    n = 10**6
    draws = c.sample(12345, n)
    assert abs(draws.mean() - c.mu) <= 3.0 * np.sqrt(c.sigma2 / n)


def test_sample_same_seed_same_sequence():
    c = clip(EnergyDistribution.from_values([0.0, 0.7, 2.0], [0.3, 0.4, 0.3]), 2.0)
    a = c.sample(99, 1000)
    b = c.sample(99, 1000)
    assert np.array_equal(a, b)


def test_sample_values_are_exact_support_atoms():
    c = clip(EnergyDistribution.from_values([0.0, 0.7, 2.0], [0.3, 0.4, 0.3]), 2.0)
    draws = c.sample(7, 1000)
    assert set(np.unique(draws)) <= set(c.support)


def test_clip_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = make_random_clipped(rng)
        again = clip(EnergyDistribution.from_values(c.support, c.probs), c.battery_cap)
        assert np.array_equal(again.support, c.support)
        assert np.array_equal(again.probs, c.probs)
        assert again.mu == pytest.approx(c.mu, rel=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_mu_equals_integral_of_ccdf(seed):
    # mu = integral of the ccdf over [0, cap], a finite sum since the
    # ccdf is a step function constant on (v_{k-1}, v_k]
    rng = np.random.default_rng(seed)
    c = make_random_clipped(rng)
    edges = np.concatenate([[0.0], c.support])
    total = sum(
        (edges[k] - edges[k - 1]) * c.ccdf(edges[k]) for k in range(1, len(edges))
    )
    assert total == pytest.approx(c.mu, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_bhatia_davis(seed):
    rng = np.random.default_rng(seed + 1000)
    c = make_random_clipped(rng)
    assert c.sigma2 <= c.mu * (c.battery_cap - c.mu) + 1e-12


@given(
    st.lists(st.floats(0.0, 10.0), min_size=1, max_size=6),
    st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6),
)
def test_construction_invariants_hold(values, weights):
    k = min(len(values), len(weights))
    values, weights = values[:k], weights[:k]
    if sum(v * w for v, w in zip(values, weights)) <= 0:
        return
    probs = np.asarray(weights) / sum(weights)
    d = EnergyDistribution.from_values(values, probs)
    assert all(b > a for a, b in zip(d.support, d.support[1:]))
    assert abs(sum(d.probs) - 1.0) <= 1e-12
    assert all(p > 0 for p in d.probs)


def test_json_round_trip(tmp_path):
    d = EnergyDistribution.from_values([0.0, 0.25, 3.0], [0.25, 0.5, 0.25])
    path = tmp_path / "dist.json"
    d.save(path)
    loaded = EnergyDistribution.load(path)
    assert loaded == d
    raw = json.loads(path.read_text())
    assert set(raw) == {"support", "probs"}


def test_load_rejects_invalid_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"support": [0.0, 1.0], "probs": [0.9, 0.2]}))
    with pytest.raises(ValueError):
        EnergyDistribution.load(path)
