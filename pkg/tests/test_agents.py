import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradualbench.agents import (ConstantAgent, EchoAgent, ExternalAgent, MemorizerAgent, OracleAgent, RandomAgent,
                                 agent_step, make_agent)
from gradualbench.errors import AgentFailure
from gradualbench.harness import run_curriculum
from gradualbench.library import make_task
from gradualbench.tasks import CurriculumSpec

ECHO_CMD = [sys.executable, "-m", "gradualbench.echo_agent"]


def _stream(n, seed=0):
    rng = np.random.default_rng(seed)
    return list(zip(rng.choice([-1, 0, 1], n).tolist(), rng.integers(0, 256, n).tolist()))


def test_constant_and_echo():
    assert agent_step(ConstantAgent(0x41), 1, 0x00) == 0x41
    assert agent_step(EchoAgent(), 0, 0x33) == 0x33


def test_memorizer_repeats_rewarded_action():
    m = MemorizerAgent(seed=0, epsilon=0.0)
    ctx = [0x61, 0x62, 0x63, 0x64]
    for o in ctx[:-1]:
        m.step(0, o)
    first = m.step(0, ctx[-1])
    # reward the action, then replay the same context
    m.step(1, 0x00)
    for o in ctx[:-1]:
        m.step(0, o)
    assert m.step(0, ctx[-1]) == first


def test_memorizer_avoids_punished_action():
    m = MemorizerAgent(seed=0, window=1, actions=[1, 2])
    a = m.step(0, 0x61)
    assert m.step(-1, 0x61) != a


def test_agent_failures_are_wrapped():
    class Raises(ConstantAgent):
        def step(self, reward, observation):
            raise KeyError("x")

    class Wide(ConstantAgent):
        def step(self, reward, observation):
            return 300

    with pytest.raises(AgentFailure):
        agent_step(Raises(), 0, 0)
    with pytest.raises(AgentFailure):
        agent_step(Wide(), 0, 0)


def _snapshot_roundtrip(factory, k, m):
    stream = _stream(k + m, seed=k * 31 + m)
    a = factory()
    for r, o in stream[:k]:
        a.step(r, o)
    snap = a.snapshot()
    tail = [a.step(r, o) for r, o in stream[k:]]
    b = factory()
    b.restore(snap)
    return tail, [b.step(r, o) for r, o in stream[k:]]


@pytest.mark.parametrize("factory", [
    lambda: RandomAgent(seed=4),
    lambda: ConstantAgent(0x20),
    EchoAgent,
    lambda: MemorizerAgent(seed=4, actions=b"abcdwxyz"),
])
@given(st.integers(0, 1000), st.integers(0, 1000))
def test_snapshot_fidelity(factory, k, m):
    tail, replay = _snapshot_roundtrip(factory, k, m)
    assert tail == replay


def test_snapshot_fidelity_at_bounds():
    tail, replay = _snapshot_roundtrip(lambda: MemorizerAgent(seed=9), 1000, 1000)
    assert tail == replay


def test_snapshot_class_mismatch():
    with pytest.raises(AgentFailure):
        EchoAgent().restore(RandomAgent().snapshot())


def test_same_seed_same_actions():
    task = make_task("micro_map")
    cur = CurriculumSpec((task,), n_s=2, seed=5)
    a = run_curriculum(MemorizerAgent(seed=2, actions=b"wxyz"), cur).log.actions()
    b = run_curriculum(MemorizerAgent(seed=2, actions=b"wxyz"), cur).log.actions()
    assert a == b


def test_oracle_needs_instance():
    with pytest.raises(AgentFailure):
        agent_step(OracleAgent(), 0, 0x61)


def test_external_echo_matches_in_process_twin():
    stream = _stream(10_000, seed=1)
    twin = EchoAgent()
    with ExternalAgent(ECHO_CMD) as ext:
        for r, o in stream:
            assert agent_step(ext, r, o) == agent_step(twin, r, o)


def test_external_agent_in_harness():
    cur = CurriculumSpec((make_task("micro_echo"),), n_s=2)
    with ExternalAgent(ECHO_CMD) as ext:
        res_ext = run_curriculum(ext, cur)
    res_in = run_curriculum(EchoAgent(), cur)
    assert res_ext.log.actions() == res_in.log.actions()
    assert res_ext.total_steps == res_in.total_steps


def test_external_timeout():
    silent = [sys.executable, "-c", "import time; time.sleep(30)"]
    ext = ExternalAgent(silent, timeout=0.3)
    try:
        with pytest.raises(AgentFailure, match="within"):
            ext.step(0, 0x41)
    finally:
        ext.proc.kill()
        ext.close()


def test_external_exit_detected():
    ext = ExternalAgent([sys.executable, "-c", "pass"], timeout=2.0)
    ext.proc.wait()
    with pytest.raises(AgentFailure):
        ext.step(0, 0x41)
    ext.close()


def test_external_cannot_snapshot():
    with ExternalAgent(ECHO_CMD) as ext:
        with pytest.raises(AgentFailure):
            ext.snapshot()


def test_make_agent():
    assert isinstance(make_agent("memorizer", seed=1), MemorizerAgent)
    with pytest.raises(AgentFailure):
        make_agent("nobody")
    with pytest.raises(AgentFailure):
        make_agent("external")
