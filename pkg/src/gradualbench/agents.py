"""Baseline and scripted agents plus the subprocess adapter.

Agents see nothing but the (reward, observation) stream.  The one exception
is :meth:`Agent.bind_instance`, a harness hook that scripted oracles use to
peek at the live instance; learning baselines ignore it.
"""
from __future__ import annotations

import os
import pickle
import random
import select
import shlex
import subprocess
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import AgentFailure
from .stream import REPLY_SIZE, check_symbol, encode_frame
from .tasks import InstanceState, best_action

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class AgentSnapshot:
    agent_class: str
    version: int
    payload: bytes


class Agent:
    seed: int = 0

    def step(self, reward: int, observation: int) -> int:
        raise NotImplementedError

    def bind_instance(self, instance: InstanceState) -> None:
        """Called by the harness whenever a new instance starts. Ignored by default."""

    def snapshot(self) -> AgentSnapshot:
        return AgentSnapshot(type(self).__name__, SNAPSHOT_VERSION, pickle.dumps(self._state()))

    def restore(self, snap: AgentSnapshot) -> None:
        if snap.agent_class != type(self).__name__ or snap.version != SNAPSHOT_VERSION:
            raise AgentFailure(f"snapshot of {snap.agent_class} v{snap.version} cannot restore {type(self).__name__}")
        self._load(pickle.loads(snap.payload))

    def _state(self) -> dict:
        return dict(self.__dict__)

    def _load(self, state: dict) -> None:
        self.__dict__.clear()
        self.__dict__.update(state)

    def close(self) -> None:
        pass


def agent_step(agent: Agent, reward: int, observation: int) -> int:
    try:
        action = agent.step(reward, observation)
    except AgentFailure:
        raise
    except Exception as exc:
        raise AgentFailure(f"{type(agent).__name__} raised {exc!r}") from exc
    try:
        return check_symbol(action)
    except ValueError as exc:
        raise AgentFailure(f"{type(agent).__name__} returned {action!r}: {exc}") from None


class RandomAgent(Agent):
    def __init__(self, seed: int = 0, actions: Optional[Sequence[int]] = None):
        self.seed = seed
        self.actions = list(range(256) if actions is None else actions)
        self.rng = random.Random(seed)

    def step(self, reward, observation):
        return self.rng.choice(self.actions)


class ConstantAgent(Agent):
    def __init__(self, action: int = 0x41, seed: int = 0):
        self.action = check_symbol(action)
        self.seed = seed

    def step(self, reward, observation):
        return self.action


class EchoAgent(Agent):
    def __init__(self, seed: int = 0):
        self.seed = seed

    def step(self, reward, observation):
        return observation


class OracleAgent(Agent):
    """Scripted optimal policy: reads the bound instance and picks the best-paying action."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.instance: Optional[InstanceState] = None

    def bind_instance(self, instance):
        self.instance = instance

    def step(self, reward, observation):
        if self.instance is None:
            raise AgentFailure("OracleAgent needs the harness to bind an instance")
        return best_action(self.instance.spec, self.instance.current_state)

    def _state(self):
        return {"seed": self.seed, "instance": None}


class MemorizerAgent(Agent):
    """Table from recent-observation contexts to actions.

    A context seen with a positive outcome replays its stored action.  An
    unseen context borrows the action of its longest known suffix, except
    that with probability ``epsilon`` (shrinking by ``decay`` after every
    positive reward) or when no suffix is known it tries a random action not
    yet punished there.  A positive reward stores the action for the full
    context (and for shorter suffixes that have no entry yet); a negative one
    deletes entries that proposed it.
    """

    def __init__(self, seed: int = 0, window: int = 4, epsilon: float = 0.1, decay: float = 0.9,
                 actions: Optional[Sequence[int]] = None):
        self.seed = seed
        self.window = window
        self.epsilon = epsilon
        self.decay = decay
        self.actions = list(range(256) if actions is None else actions)
        self.rng = random.Random(seed)
        self.history: deque = deque(maxlen=window)
        self.table: dict[tuple, int] = {}
        self.bad: dict[tuple, set] = {}
        self.last: Optional[tuple[tuple, int]] = None

    def _learn(self, reward: int) -> None:
        if self.last is None or reward == 0:
            return
        ctx, action = self.last
        suffixes = [ctx[-k:] for k in range(len(ctx), 0, -1)]
        if reward > 0:
            self.table[ctx] = action
            for s in suffixes[1:]:
                self.table.setdefault(s, action)
            self.epsilon *= self.decay
        else:
            for s in suffixes:
                if self.table.get(s) == action:
                    del self.table[s]
            self.bad.setdefault(ctx, set()).add(action)

    def _explore(self, ctx: tuple) -> int:
        tried = self.bad.get(ctx, ())
        options = [a for a in self.actions if a not in tried]
        if not options:
            self.bad.pop(ctx, None)
            options = self.actions
        return self.rng.choice(options)

    def lookup(self, ctx: tuple) -> Optional[int]:
        for k in range(len(ctx), 0, -1):
            hit = self.table.get(ctx[-k:])
            if hit is not None:
                return hit
        return None

    def step(self, reward, observation):
        self._learn(reward)
        self.history.append(observation)
        ctx = tuple(self.history)
        action = self.table.get(ctx)
        if action is None:
            borrowed = self.lookup(ctx)
            if borrowed is None or self.rng.random() < self.epsilon:
                action = self._explore(ctx)
            else:
                action = borrowed
        self.last = (ctx, action)
        return action


class ExternalAgent(Agent):
    """Agent living in a subprocess that speaks the two-octet/one-octet protocol on stdio."""

    def __init__(self, command, timeout: float = 5.0, seed: int = 0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.seed = seed
        try:
            self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0)
        except OSError as exc:
            raise AgentFailure(f"could not launch {self.command}: {exc}") from exc

    def step(self, reward, observation):
        frame = encode_frame(observation, reward)
        try:
            written = self.proc.stdin.write(frame)
            if written != len(frame):
                raise AgentFailure("short write to agent process")
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise AgentFailure(f"agent process closed its input: {exc}") from exc
        fd = self.proc.stdout.fileno()
        ready, _, _ = select.select([fd], [], [], self.timeout)
        if not ready:
            raise AgentFailure(f"agent did not reply within {self.timeout} s")
        data = os.read(fd, REPLY_SIZE)
        if not data:
            raise AgentFailure(f"agent process exited (code {self.proc.poll()})")
        return data[0]

    def snapshot(self):
        raise AgentFailure("external agents cannot be snapshotted")

    def restore(self, snap):
        raise AgentFailure("external agents cannot be restored")

    def close(self):
        proc = getattr(self, "proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
            proc.wait(timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()
        finally:
            proc.stdout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


AGENTS = {
    "random": RandomAgent,
    "constant": ConstantAgent,
    "echo": EchoAgent,
    "memorizer": MemorizerAgent,
    "oracle": OracleAgent,
}


def make_agent(name: str, seed: int = 0, command: Optional[str] = None) -> Agent:
    if name == "external":
        if not command:
            raise AgentFailure("the external agent needs a command line")
        return ExternalAgent(command, seed=seed)
    try:
        return AGENTS[name](seed=seed)
    except KeyError:
        raise AgentFailure(f"unknown agent {name!r}; known: {sorted(AGENTS) + ['external']}") from None
