import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradualbench.errors import InsufficientData, NotUnifilar, StateExplosion
from gradualbench.library import BUNDLED_ORDER, make_task
from gradualbench.mechanics import (EpsilonMachine, is_unifilar, simulate,
                                    stationary_distribution, statistical_complexity)
from gradualbench.reconstruct import (counter_of, minimize, partition, reconstruct_from_sequence, task_model,
                                      transducer_from_task)

from machines import (doubled, golden_mean_machine, period_two, random_machine, random_transducer,
                      six_state_golden_mean)
from oracles import same_future

DEPTH = 6


def _check_minimization(raw, depth=DEPTH):
    small = minimize(raw)
    block = partition(raw)
    # sound: every state predicts exactly what its merged state predicts
    for i in range(raw.n_states):
        assert same_future(raw, i, small, block[i], depth, tol=1e-9)
    # minimal: merged states are pairwise distinguishable
    for a, b in itertools.combinations(range(small.n_states), 2):
        assert not same_future(small, a, small, b, max(small.n_states, 1), tol=1e-9)
    return small


def test_duplicates_collapse():
    coin = EpsilonMachine((0, 1), ("a", "b"), [(0, 0, 1, 0.5), (0, 1, 0, 0.5), (1, 0, 0, 0.5), (1, 1, 1, 0.5)])
    assert minimize(coin).n_states == 1


def test_golden_mean_is_fixed_point(golden_mean):
    assert minimize(golden_mean) == minimize(minimize(golden_mean))
    assert minimize(golden_mean).n_states == 2


def test_unrolled_golden_mean():
    small = _check_minimization(six_state_golden_mean())
    assert small.n_states == 2
    assert statistical_complexity(small) == pytest.approx(statistical_complexity(golden_mean_machine()), abs=1e-12)


def test_period_two_stays_two():
    assert _check_minimization(period_two()).n_states == 2


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 2))
def test_random_machine_minimization(seed, n, k):
    rng = np.random.default_rng(seed)
    m = random_machine(rng, n, k)
    small = _check_minimization(doubled(m, rng), depth=2 * n)
    assert small.n_states <= n


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_random_transducer_minimization(seed, n):
    rng = np.random.default_rng(seed)
    t = random_transducer(rng, n, 2, 2)
    small = _check_minimization(doubled(t, rng), depth=min(2 * n, 5))
    assert small.n_states <= n


def test_non_unifilar_rejected():
    split = EpsilonMachine((0, 1), "ABC", [(0, 1, 1, 0.5), (0, 1, 2, 0.5), (1, 0, 0, 1.0), (2, 0, 0, 1.0)])
    with pytest.raises(NotUnifilar) as err:
        minimize(split)
    assert err.value.witnesses


# ---------------------------------------------------------------- reconstruction from data

def test_constant_sequence_one_state():
    m = reconstruct_from_sequence([0] * 10_000, l_max=3)
    assert m.n_states == 1


def test_iid_majority_one_state():
    counts = [reconstruct_from_sequence(np.random.default_rng(s).integers(0, 2, 20_000).tolist()).n_states
              for s in range(20)]
    assert sum(c == 1 for c in counts) > 10


def test_golden_mean_recovered(golden_mean):
    ok = 0
    for s in range(20):
        m = reconstruct_from_sequence(simulate(golden_mean, 100_000, seed=s))
        if m.n_states != 2:
            continue
        assert is_unifilar(m)
        assert statistical_complexity(m) == pytest.approx(0.9182958341, abs=0.02)
        probs = sorted(p for _, _, _, p in m.edges)
        assert np.allclose(probs, [0.5, 0.5, 1.0], atol=0.02)
        ok += 1
    assert ok > 10


def test_reconstruction_keeps_symbols():
    seq = simulate(golden_mean_machine(), 20_000, seed=1)
    m = reconstruct_from_sequence(["x" if s else "o" for s in seq])
    assert set(m.alphabet) == {"x", "o"}
    stationary_distribution(m)


def test_empty_sequence():
    with pytest.raises(InsufficientData):
        reconstruct_from_sequence([])


# ---------------------------------------------------------------- task transducers

BUNDLED_SIZES = {
    "micro_fixed": 11,
    "micro_map": 10,
    "micro_map_adaptive": 20,
    "mini_describe": 23,
    "micro_group": 25,
    "micro_echo": 30,
    "mini_membership": 220,
}


@pytest.mark.parametrize("name", BUNDLED_ORDER)
def test_bundled_transducers(name):
    model = task_model(make_task(name))
    t = model.transducer
    assert is_unifilar(t) and is_unifilar(model.composed)
    assert t.n_states == BUNDLED_SIZES[name]
    assert t.n_states <= model.composed.n_states
    assert all(counter_of(s) is not None for s in t.states)


def test_map_state_names():
    names = set(transducer_from_task(make_task("micro_map")).states)
    assert names == {f"{k}{c}" for k in "AB" for c in range(5)}


def test_single_instance_single_reward():
    model = task_model(make_task("micro_fixed", req_reward=1), instance_seeds=(0,))
    assert (model.raw_states, model.composed.n_states, model.transducer.n_states) == (1, 1, 1)


def test_minimized_transducer_matches_composition():
    model = task_model(make_task("micro_map"))
    raw, small = model.composed, model.transducer
    block = partition(raw)
    for i in range(raw.n_states):
        assert same_future(raw, i, small, block[i], 2, tol=1e-9)


def test_state_cap():
    with pytest.raises(StateExplosion):
        transducer_from_task(make_task("mini_membership"), state_cap=50)


@pytest.mark.parametrize("name, value", [("A3", 3), ("Bd0_12", 12), ("x", None), ("A/B0", 0)])
def test_counter_of(name, value):
    assert counter_of(name) == value
