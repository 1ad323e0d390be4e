"""Byte/reward alphabet, per-step records and the two-octet wire frame.

The environment speaks first: every frame it sends is ``[observation, reward]``
with the reward stored as a signed octet, and the agent answers each frame
with exactly one raw octet.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import RewardOutOfRange

REWARDS = (-1, 0, 1)
FRAME_SIZE = 2
REPLY_SIZE = 1

_REWARD_TO_OCTET = {-1: 0xFF, 0: 0x00, 1: 0x01}
_OCTET_TO_REWARD = {v: k for k, v in _REWARD_TO_OCTET.items()}


def check_symbol(value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= 255:
        raise ValueError(f"symbol must be an integer in 0..255, got {value!r}")
    return value


def check_reward(value: int) -> int:
    if isinstance(value, bool) or value not in _REWARD_TO_OCTET:
        raise RewardOutOfRange(f"reward must be one of -1, 0, +1, got {value!r}")
    return int(value)


def encode_frame(observation: int, reward: int) -> bytes:
    return bytes((check_symbol(observation), _REWARD_TO_OCTET[check_reward(reward)]))


def decode_frame(frame: bytes) -> tuple[int, int]:
    if len(frame) != FRAME_SIZE:
        raise ValueError(f"frame must be exactly {FRAME_SIZE} octets, got {len(frame)}")
    obs, raw = frame[0], frame[1]
    try:
        reward = _OCTET_TO_REWARD[raw]
    except KeyError:
        raise RewardOutOfRange(f"octet 0x{raw:02X} is not an admissible reward") from None
    return obs, reward


@dataclass(frozen=True)
class StepRecord:
    """One environment step: the action fed in and the (reward, observation) produced.

    The priming step of a session has ``action=None`` and reward 0.
    """

    t: int
    observation: int
    reward: int
    action: Optional[int] = None

    def __post_init__(self):
        check_symbol(self.observation)
        check_reward(self.reward)
        if self.action is not None:
            check_symbol(self.action)


@dataclass(frozen=True)
class Boundary:
    """Harness-side annotation; never part of the agent-visible stream."""

    index: int
    kind: str  # "task" or "instance"
    task_id: str
    instance_seed: int


@dataclass
class SessionLog:
    records: list[StepRecord] = field(default_factory=list)
    boundaries: list[Boundary] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[StepRecord]:
        return iter(self.records)

    def append(self, observation: int, reward: int, action: Optional[int]) -> StepRecord:
        rec = StepRecord(len(self.records), observation, reward, action)
        if action is None and self.records:
            raise ValueError("only the first record of a session may lack an action")
        self.records.append(rec)
        return rec

    def replace_last_observation(self, observation: int) -> None:
        last = self.records[-1]
        self.records[-1] = StepRecord(last.t, observation, last.reward, last.action)

    def action_count(self) -> int:
        return sum(1 for r in self.records if r.action is not None)

    def actions(self) -> list[int]:
        return [r.action for r in self.records if r.action is not None]

    def agent_frames(self) -> list[tuple[int, int]]:
        """(observation, reward) pairs in the order the agent received them."""
        return [(r.observation, r.reward) for r in self.records]

    def wire_bytes(self) -> bytes:
        """The env->agent byte stream exactly as an external agent would read it."""
        return b"".join(encode_frame(o, r) for o, r in self.agent_frames())

    def slice(self, start: int, stop: Optional[int] = None) -> "SessionLog":
        recs = self.records[start:stop]
        bounds = [b for b in self.boundaries if start <= b.index < (stop if stop is not None else len(self.records))]
        return SessionLog(list(recs), bounds)
