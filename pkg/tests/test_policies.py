import numpy as np
import pytest

from ehcap import engine
from ehcap.dist import EnergyDistribution, clip
from ehcap.policies import (
    Policy,
    baseline_step,
    bernoulli_policy_step,
    best_threshold,
    binary_quantization_step,
    fixed_fraction_step,
    generalized_bernoulli_step,
    initial_state,
    policy_step,
)

from conftest import make_random_clipped


def run_steps(policy, arrivals, cap, b0=None):
    """Drive the pure step functions; returns (powers, batteries_post_arrival)."""
    state = initial_state(cap if b0 is None else b0, cap)
    powers, batteries = [], []
    for e in arrivals:
        g, state = policy_step(policy, state, e, cap)
        powers.append(g)
        batteries.append(state.battery + g)
    return np.array(powers), np.array(batteries)


# ---------------------------------------------------------------- bernoulli

def test_bernoulli_fresh_arrival_then_decay():
    state = initial_state(0.0, 4.0)
    g1, state = bernoulli_policy_step(state, 4.0, 0.5, 4.0)
    g2, state = bernoulli_policy_step(state, 0.0, 0.5, 4.0)
    g3, state = bernoulli_policy_step(state, 0.0, 0.5, 4.0)
    assert (g1, g2, g3) == (2.0, 1.0, 0.5)


def test_bernoulli_p_one_full_drain():
    state = initial_state(0.0, 4.0)
    g1, state = bernoulli_policy_step(state, 4.0, 1.0, 4.0)
    g2, state = bernoulli_policy_step(state, 0.0, 1.0, 4.0)
    assert g1 == 4.0
    assert g2 == 0.0


def test_bernoulli_epoch_allocation_conserves_battery():
    # geometric series: allocations over an inter-arrival gap sum below cap
    cap, p = 4.0, 0.3
    state = initial_state(0.0, cap)
    g, state = bernoulli_policy_step(state, cap, p, cap)
    total = g
    for _ in range(200):
        g, state = bernoulli_policy_step(state, 0.0, p, cap)
        total += g
    assert total <= cap + 1e-12


def test_bernoulli_rejects_bad_p():
    state = initial_state(0.0, 4.0)
    for p in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            bernoulli_policy_step(state, 0.0, p, 4.0)


# ------------------------------------------------------ generalized bernoulli

def test_genbern_full_battery_restarts():
    cap, q = 2.0, 0.5
    state = initial_state(0.0, cap)
    g1, state = generalized_bernoulli_step(state, 2.0, q, cap)
    assert g1 == 1.0
    # refill to the cap again: epoch restarts, same allocation
    g2, state = generalized_bernoulli_step(state, 2.0, q, cap)
    assert g2 == 1.0


def test_genbern_q_one_drains_when_full():
    cap = 2.0
    state = initial_state(0.0, cap)
    g1, state = generalized_bernoulli_step(state, 2.0, 1.0, cap)
    g2, state = generalized_bernoulli_step(state, 0.5, 1.0, cap)
    assert g1 == 2.0
    assert g2 == 0.0


def test_genbern_epoch_stopping_rule():
    # deterministic arrivals mu: the first epoch ends at the first t with
    # S_t >= cap * (1 - (1-q)^t), S_t the arrivals banked since the refill
    cap, mu = 2.0, 0.5
    q = mu / cap
    policy = Policy.generalized_bernoulli(q)
    arrivals = np.full(64, mu)
    powers, batteries, events = engine.run_policy(policy, cap, cap, arrivals)
    starts = np.flatnonzero(events)
    assert len(starts) >= 2
    L = int(starts[1] - starts[0])
    S = arrivals[starts[0] + 1 : starts[1] + 1].sum()
    assert S >= cap * (1 - (1 - q) ** L) - 1e-12
    # and the rule did not fire earlier
    for t in range(1, L):
        S_t = arrivals[starts[0] + 1 : starts[0] + t + 1].sum()
        assert S_t < cap * (1 - (1 - q) ** t)


def test_genbern_rejects_bad_q():
    state = initial_state(0.0, 2.0)
    with pytest.raises(ValueError):
        generalized_bernoulli_step(state, 0.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        generalized_bernoulli_step(state, 0.0, 1.2, 2.0)


# ------------------------------------------------------- binary quantization

def test_binquant_reduces_to_bernoulli_at_cap_threshold():
    cap, p = 2.0, 0.4
    arrivals = clip(EnergyDistribution.bernoulli(p, cap), cap).sample(3, 50)
    bq = Policy.binary_quantization(cap, p)
    be = Policy.bernoulli_exp(p)
    pw_bq, _, ev_bq = engine.run_policy(bq, cap, cap, arrivals)
    pw_be, _, ev_be = engine.run_policy(be, cap, cap, arrivals)
    assert np.array_equal(pw_bq, pw_be)
    assert np.array_equal(ev_bq, ev_be)


def test_binquant_ignores_subthreshold_energy():
    x, qp, cap = 1.0, 0.8, 2.0
    state = initial_state(0.0, cap)
    g1, state = binary_quantization_step(state, 1.0, x, qp, cap)
    assert g1 == pytest.approx(0.8, abs=1e-15)
    k_before = state.steps_since_event
    g2, state = binary_quantization_step(state, 0.9, x, qp, cap)
    # sub-threshold arrival: counter advances exactly as if nothing arrived
    assert state.steps_since_event == k_before + 1
    assert g2 == pytest.approx(x * qp * (1 - qp), abs=1e-15)


def test_binquant_first_allocation_from_ccdf():
    c = clip(EnergyDistribution.from_values([0.0, 1.0, 2.0], [0.2, 0.5, 0.3]), 2.0)
    x = 1.0
    qp = c.ccdf(x)
    assert qp == pytest.approx(0.8, abs=1e-15)
    state = initial_state(0.0, 2.0)
    g, _ = binary_quantization_step(state, 1.0, x, qp, 2.0)
    assert g == pytest.approx(0.8, abs=1e-15)


def test_binquant_virtual_battery_is_lower_bound():
    rng = np.random.default_rng(11)
    for _ in range(5):
        c = make_random_clipped(rng)
        x, _ = best_threshold(c)
        qp = c.ccdf(x)
        arrivals = c.sample(int(rng.integers(1 << 30)), 2000)
        policy = Policy.binary_quantization(x, qp)
        powers, batteries, events = engine.run_policy(policy, c.battery_cap, c.battery_cap, arrivals)
        # virtual packet banked at t=0 (same convention as the full start
        # battery); qualifying arrivals refill it to x, discarding residue
        virtual = x
        for t in range(len(arrivals)):
            if arrivals[t] >= x:
                virtual = x
            assert batteries[t] >= virtual - 1e-9
            virtual -= powers[t]
            assert virtual >= -1e-12


def test_binquant_rejects_bad_threshold():
    state = initial_state(0.0, 2.0)
    with pytest.raises(ValueError):
        binary_quantization_step(state, 0.0, 0.0, 0.5, 2.0)
    with pytest.raises(ValueError):
        binary_quantization_step(state, 0.0, 2.5, 0.5, 2.0)


# ------------------------------------------------------------ best threshold

def test_best_threshold_bernoulli():
    c = clip(EnergyDistribution.bernoulli(0.5, 2.0), 2.0)
    x, value = best_threshold(c)
    assert (x, value) == (2.0, 1.0)


def test_best_threshold_deterministic():
    c = clip(EnergyDistribution.deterministic(1.0), 2.0)
    x, value = best_threshold(c)
    assert (x, value) == (1.0, 1.0)
    assert value == c.mu


def test_best_threshold_enumerates_support():
    c = clip(EnergyDistribution.from_values([0.0, 0.1, 2.0], [0.4, 0.4, 0.2]), 2.0)
    x, value = best_threshold(c)
    assert x == 2.0
    assert value == pytest.approx(0.4, abs=1e-15)


# ------------------------------------------------------------ fixed fraction

def test_fixed_fraction_allocates_fraction():
    state = initial_state(2.0, 2.0)
    g, _ = fixed_fraction_step(state, 0.0, 0.5, 2.0)
    assert g == 1.0


def test_fixed_fraction_q_one_is_greedy():
    rng = np.random.default_rng(5)
    c = make_random_clipped(rng)
    arrivals = c.sample(42, 100)
    pw_ff, _, _ = engine.run_policy(Policy.fixed_fraction(1.0), c.battery_cap, c.battery_cap, arrivals)
    pw_gr, _, _ = engine.run_policy(Policy.greedy(), c.battery_cap, c.battery_cap, arrivals)
    assert np.allclose(pw_ff, pw_gr, atol=1e-15)


def test_fixed_fraction_matches_bernoulli_on_bernoulli_arrivals():
    cap, p = 4.0, 0.5
    arrivals = clip(EnergyDistribution.bernoulli(p, cap), cap).sample(17, 20)
    pw_ff, _ = run_steps(Policy.fixed_fraction(p), arrivals, cap, b0=cap)
    pw_be, _ = run_steps(Policy.bernoulli_exp(p), arrivals, cap, b0=cap)
    assert np.allclose(pw_ff, pw_be, atol=1e-12)


# ----------------------------------------------------------------- baselines

def test_baseline_greedy_drains_everything():
    state = initial_state(1.5, 2.0)
    g, state = baseline_step(state, 0.0, "greedy", 0.0, 2.0)
    assert g == 1.5
    assert state.battery == 0.0


def test_baseline_constant_caps_at_battery():
    state = initial_state(2.0, 2.0)
    g, state = baseline_step(state, 0.0, "constant", 0.7, 2.0)
    assert g == 0.7
    g, state = baseline_step(state, 0.0, "constant", 5.0, 2.0)
    assert g == pytest.approx(1.3, abs=1e-15)
    g, state = baseline_step(state, 0.0, "constant", 0.7, 2.0)
    assert g == 0.0


# ------------------------------------------------------------ admissibility

ALL_KINDS = [
    lambda c: Policy.bernoulli_exp(0.3),
    lambda c: Policy.generalized_bernoulli(c.q),
    lambda c: Policy.binary_quantization(*_threshold(c)),
    lambda c: Policy.fixed_fraction(c.q),
    lambda c: Policy.greedy(),
    lambda c: Policy.constant(c.mu),
]


def _threshold(c):
    x, _ = best_threshold(c)
    return x, c.ccdf(x)


@pytest.mark.parametrize("seed", range(6))
def test_admissibility_exact(seed):
    # 10^6 steps across kinds and random laws: 0 <= g <= battery, no tolerance
    rng = np.random.default_rng(seed)
    c = make_random_clipped(rng)
    arrivals = c.sample(seed, 170_000)
    b0 = float(rng.uniform(0, c.battery_cap))
    for make in ALL_KINDS:
        policy = make(c)
        powers, batteries, _ = engine.run_policy(policy, c.battery_cap, b0, arrivals)
        assert np.all(powers >= 0.0)
        assert np.all(powers <= batteries)
        assert np.all(batteries <= c.battery_cap)


@pytest.mark.parametrize("seed", range(8))
def test_genbern_epoch_closed_form(seed):
    # within an epoch the battery equals cap*(1-q)^(t-1) + sum of arrivals
    # banked since the refill (positions 2..t), to 1e-10
    rng = np.random.default_rng(seed + 100)
    c = make_random_clipped(rng)
    arrivals = c.sample(seed, 4000)
    policy = Policy.generalized_bernoulli(c.q)
    powers, batteries, events = engine.run_policy(policy, c.battery_cap, c.battery_cap, arrivals)
    starts = np.flatnonzero(events)
    for s, nxt in zip(starts[:-1], starts[1:]):
        banked = 0.0
        for t in range(1, nxt - s):
            banked += arrivals[s + t]
            expected = c.battery_cap * (1 - c.q) ** t + banked
            assert batteries[s + t] == pytest.approx(expected, abs=1e-10)


# ------------------------------------------------------------- state machine

def test_state_counter_resets_exactly_on_event():
    rng = np.random.default_rng(2)
    c = make_random_clipped(rng)
    state = initial_state(c.battery_cap, c.battery_cap)
    policy = Policy.generalized_bernoulli(c.q)
    for e in c.sample(8, 500):
        _, state = policy_step(policy, state, e, c.battery_cap)
        assert (state.steps_since_event == 0) == state.event_flag
        assert 0.0 <= state.battery <= c.battery_cap


# ----------------------------------------------------------------- descriptor

def test_policy_json_round_trip():
    for policy in [
        Policy.bernoulli_exp(0.25),
        Policy.generalized_bernoulli(0.5),
        Policy.binary_quantization(1.5, 0.3),
        Policy.fixed_fraction(0.9),
        Policy.greedy(),
        Policy.constant(0.7),
    ]:
        obj = policy.to_json()
        assert set(obj) == {"kind", "params"}
        assert Policy.from_json(obj) == policy


def test_policy_validation():
    with pytest.raises(ValueError):
        Policy.bernoulli_exp(0.0)
    with pytest.raises(ValueError):
        Policy.generalized_bernoulli(1.5)
    with pytest.raises(ValueError):
        Policy.binary_quantization(-1.0, 0.5)
    with pytest.raises(ValueError):
        Policy.constant(-0.1)
    with pytest.raises(ValueError):
        Policy.from_json({"kind": "unknown", "params": {}})
