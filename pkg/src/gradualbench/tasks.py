"""Finite POMDP instances, task distributions, limits and the environment step.

An instance is stored as a joint outcome table: from state ``s`` under action
``a`` the environment pays ``r(s, a)`` and draws ``(s', o)`` jointly.  The
transition table P(s, a, s') and observation table O(s, a, o) are the two
marginals of that joint draw.  Actions without an explicit rule in a state
fall through to that state's default branch, which keeps 256-symbol action
sets cheap to describe.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigError, InvalidMachine, StepAfterTermination
from .stream import REWARDS, check_symbol

ROW_TOL = 1e-12
ACTIONS = range(256)

Outcome = tuple[float, int, int]  # (probability, next state, observation)


@dataclass(frozen=True)
class Branch:
    reward: int
    outcomes: tuple[Outcome, ...]

    def total(self) -> float:
        return float(sum(p for p, _, _ in self.outcomes))


@dataclass(frozen=True)
class InstanceSpec:
    """One sampled POMDP: states, rules, rewards, discount and description length.

    ``rules[s]`` maps explicit actions to branches; every other action uses
    ``defaults[s]``.  ``prime`` is the outcome distribution of the action-less
    first step taken from ``initial_state``.
    """

    states: tuple[str, ...]
    rules: tuple[tuple[tuple[int, Branch], ...], ...]
    defaults: tuple[Branch, ...]
    prime: tuple[Outcome, ...]
    initial_state: int = 0
    discount: float = 1.0
    description_length: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_lookup", tuple(dict(r) for r in self.rules))

    def branch(self, state: int, action: int) -> Branch:
        return self._lookup[state].get(action, self.defaults[state])

    def explicit_actions(self, state: int) -> frozenset[int]:
        return frozenset(self._lookup[state])

    def reward(self, state: int, action: int) -> int:
        return self.branch(state, action).reward

    def transition_prob(self, state: int, action: int, nxt: int) -> float:
        return float(sum(p for p, s, _ in self.branch(state, action).outcomes if s == nxt))

    def observation_prob(self, state: int, action: int, obs: int) -> float:
        return float(sum(p for p, _, o in self.branch(state, action).outcomes if o == obs))

    def observations(self) -> set[int]:
        out = {o for _, _, o in self.prime}
        for s in range(len(self.states)):
            for b in self._branches(s):
                out.update(o for _, _, o in b.outcomes)
        return out

    def _branches(self, state: int):
        yield self.defaults[state]
        for _, b in self.rules[state]:
            yield b

    def validate(self) -> None:
        n = len(self.states)
        if len(self.rules) != n or len(self.defaults) != n:
            raise InvalidMachine("rules/defaults must have one entry per state")
        if not 0.0 <= self.discount <= 1.0:
            raise InvalidMachine(f"discount {self.discount} outside [0, 1]")
        if abs(sum(p for p, _, _ in self.prime) - 1.0) > ROW_TOL:
            raise InvalidMachine("priming distribution does not sum to 1")
        for s in range(n):
            for a, _ in self.rules[s]:
                check_symbol(a)
            for b in self._branches(s):
                if b.reward not in REWARDS:
                    raise InvalidMachine(f"reward {b.reward} in state {self.states[s]} is not -1/0/+1")
                if abs(b.total() - 1.0) > ROW_TOL:
                    raise InvalidMachine(f"row of state {self.states[s]} sums to {b.total()!r}")
                for p, nxt, obs in b.outcomes:
                    if p < 0 or not 0 <= nxt < n:
                        raise InvalidMachine(f"bad outcome {(p, nxt, obs)} in state {self.states[s]}")
                    check_symbol(obs)
        unreached = set(range(n)) - self.reachable()
        if unreached:
            names = sorted(self.states[s] for s in unreached)
            raise InvalidMachine(f"states unreachable from the initial state: {names}")

    def reachable(self) -> set[int]:
        seen = {self.initial_state}
        queue = deque([self.initial_state])
        for _, s, _ in self.prime:
            if s not in seen:
                seen.add(s)
                queue.append(s)
        while queue:
            s = queue.popleft()
            for b in self._branches(s):
                for p, nxt, _ in b.outcomes:
                    if p > 0 and nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
        return seen

    def to_json(self) -> str:
        def br(b):
            return [b.reward, [list(o) for o in b.outcomes]]

        doc = {
            "states": list(self.states),
            "rules": [[[a, br(b)] for a, b in r] for r in self.rules],
            "defaults": [br(b) for b in self.defaults],
            "prime": [list(o) for o in self.prime],
            "initial_state": self.initial_state,
            "discount": self.discount,
            "description_length": self.description_length,
            "label": self.label,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> bytes:
        return self.to_json().encode()


@dataclass(frozen=True)
class LimitPolicy:
    """soft = description_length + per_reward * R*, hard = hard_factor * soft."""

    per_reward: int = 8
    hard_factor: int = 4

    def __post_init__(self):
        if self.per_reward < 1 or self.hard_factor < 1:
            raise ConfigError("limit constants must be positive integers")

    def soft(self, spec: InstanceSpec, r_star: int) -> int:
        return spec.description_length + self.per_reward * r_star

    def hard(self, spec: InstanceSpec, r_star: int) -> int:
        return self.hard_factor * self.soft(spec, r_star)


@dataclass(frozen=True)
class TaskSpec:
    id: str
    sampler: Callable[[int], InstanceSpec] = field(compare=False)
    req_reward: int = 5
    limits: LimitPolicy = LimitPolicy()
    params: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.req_reward < 1:
            raise ConfigError(f"task {self.id}: required reward must be >= 1")

    def sample_spec(self, seed: int) -> InstanceSpec:
        spec = self.sampler(seed)
        spec.validate()
        return spec


@dataclass(frozen=True)
class CurriculumSpec:
    tasks: tuple[TaskSpec, ...]
    n_s: int = 2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.tasks:
            raise ConfigError("a curriculum needs at least one task")
        if self.n_s < 1:
            raise ConfigError("n_s must be >= 1")

    def reversed(self) -> "CurriculumSpec":
        return CurriculumSpec(tuple(reversed(self.tasks)), self.n_s, self.seed)


@dataclass
class InstanceState:
    spec: InstanceSpec
    r_star: int
    limits: LimitPolicy
    seed: int
    rng: np.random.Generator
    current_state: int
    elapsed: int = 0
    primed: bool = False
    task_id: str = ""


def sample_instance(task: TaskSpec, seed: int) -> InstanceState:
    spec = task.sample_spec(seed)
    # the simulation stream is independent of the stream the sampler used
    rng = np.random.default_rng([seed, 0x5EED])
    return InstanceState(spec, task.req_reward, task.limits, seed, rng, spec.initial_state, task_id=task.id)


def req_reward(task: TaskSpec) -> int:
    return task.req_reward


def soft_limit(instance: InstanceState) -> int:
    return instance.limits.soft(instance.spec, instance.r_star)


def hard_limit(instance: InstanceState) -> int:
    return instance.limits.hard(instance.spec, instance.r_star)


def _draw(rng: np.random.Generator, outcomes: Sequence[Outcome]) -> tuple[int, int]:
    if len(outcomes) == 1:
        return outcomes[0][1], outcomes[0][2]
    u = rng.random()
    acc = 0.0
    for p, nxt, obs in outcomes:
        acc += p
        if u < acc:
            return nxt, obs
    return outcomes[-1][1], outcomes[-1][2]


def env_step(state: InstanceState, action: Optional[int]) -> tuple[int, int, InstanceState]:
    """Advance the instance by one step; ``action=None`` is the priming step."""
    if action is None:
        if state.primed:
            raise StepAfterTermination("instance already primed; the action-less step happens once")
        state.primed = True
        nxt, obs = _draw(state.rng, state.spec.prime)
        state.current_state = nxt
        return 0, obs, state
    if not state.primed:
        raise StepAfterTermination("instance must be primed before the first action")
    check_symbol(action)
    if state.elapsed >= hard_limit(state):
        raise StepAfterTermination(f"hard limit {hard_limit(state)} reached")
    branch = state.spec.branch(state.current_state, action)
    nxt, obs = _draw(state.rng, branch.outcomes)
    state.current_state = nxt
    state.elapsed += 1
    return branch.reward, obs, state


def best_action(spec: InstanceSpec, state: int) -> int:
    """Smallest action with maximal reward in ``state`` (used by scripted oracles)."""
    explicit = spec.explicit_actions(state)
    best, best_r = None, -2
    for a in sorted(explicit):
        r = spec.reward(state, a)
        if r > best_r:
            best, best_r = a, r
    if len(explicit) < 256 and spec.defaults[state].reward > best_r:
        best = min(a for a in ACTIONS if a not in explicit)
    return best
