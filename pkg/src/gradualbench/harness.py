"""Instance and curriculum loops, the step-count objective, and transfer checks.

The agent-facing stream is one unbroken sequence of frames.  When an
instance ends, the observation produced by its last step is replaced by the
new instance's first observation, and the reward of that last step is the
one delivered alongside it, so every action still gets its feedback and
there is exactly one frame between consecutive actions.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .agents import Agent, agent_step
from .errors import AgentFailure, BudgetExceeded
from .stream import Boundary, SessionLog
from .tasks import CurriculumSpec, InstanceState, TaskSpec, env_step, hard_limit, req_reward, sample_instance, soft_limit

DEFAULT_FORGETTING_C = Fraction(6, 5)


@dataclass(frozen=True)
class Budget:
    max_steps: Optional[int] = None
    max_seconds: Optional[float] = None


class Session:
    """Agent plus the stream it has seen so far."""

    def __init__(self, agent: Agent, budget: Optional[Budget] = None):
        self.agent = agent
        self.budget = budget or Budget()
        self.log = SessionLog()
        self.steps = 0
        self.started = time.monotonic()

    def charge(self) -> None:
        """Account for the next step before it is taken."""
        self.steps += 1
        b = self.budget
        if b.max_steps is not None and self.steps > b.max_steps:
            raise BudgetExceeded(f"step budget of {b.max_steps} exhausted")
        if b.max_seconds is not None and time.monotonic() - self.started > b.max_seconds:
            raise BudgetExceeded(f"wall-clock budget of {b.max_seconds} s exhausted")


@dataclass
class SolveResult:
    steps: int
    solved_within_soft: bool
    terminated_by_hard: bool
    log: SessionLog
    soft_limit: int
    hard_limit: int


def solve_instance(agent: Agent, instance: InstanceState, r_star: int,
                   session: Optional[Session] = None) -> SolveResult:
    if r_star < 1:
        raise ValueError("r_star must be >= 1")
    session = session or Session(agent)
    log = session.log
    start = len(log)
    agent.bind_instance(instance)

    _, obs, _ = env_step(instance, None)
    if len(log) == 0:
        log.append(obs, 0, None)
        reward = 0
    else:
        log.replace_last_observation(obs)
        reward = log.records[-1].reward

    hard = hard_limit(instance)
    t = 0
    in_row = 0
    while True:
        session.charge()
        try:
            action = agent_step(agent, reward, obs)
        except AgentFailure as exc:
            exc.log = log
            raise
        reward, obs, _ = env_step(instance, action)
        log.append(obs, reward, action)
        t += 1
        if reward == 1:
            in_row += 1
        elif reward == -1:
            in_row = 0
        if in_row == r_star or t == hard:
            break

    solved = in_row == r_star
    soft = soft_limit(instance)
    return SolveResult(t, solved and t <= soft, not solved, log.slice(start), soft, hard)


@dataclass
class TaskOutcome:
    task_id: str
    attempted: int
    successful: int
    steps: int
    resets: int = 0
    instance_steps: list[int] = field(default_factory=list)


@dataclass
class CurriculumResult:
    total_steps: int
    per_task: list[TaskOutcome]
    log: SessionLog
    completed: bool = True

    def to_dict(self) -> dict:
        return {
            "total_steps": self.total_steps,
            "completed": self.completed,
            "per_task": [
                {"task": o.task_id, "attempted": o.attempted, "successful": o.successful,
                 "steps": o.steps, "resets": o.resets, "instance_steps": o.instance_steps}
                for o in self.per_task
            ],
        }


def instance_seed(master: int, task_index: int, instance_index: int) -> int:
    return int(np.random.SeedSequence([master, task_index, instance_index]).generate_state(1)[0])


def run_curriculum(agent: Agent, curriculum: CurriculumSpec, n_s: Optional[int] = None,
                   budget: Optional[Budget] = None, session: Optional[Session] = None) -> CurriculumResult:
    n_s = curriculum.n_s if n_s is None else n_s
    if n_s < 1:
        raise ValueError("n_s must be >= 1")
    session = session or Session(agent, budget)
    start = len(session.log)
    total = 0
    per_task: list[TaskOutcome] = []
    try:
        for j, task in enumerate(curriculum.tasks):
            outcome = TaskOutcome(task.id, 0, 0, 0)
            per_task.append(outcome)
            r_j = req_reward(task)
            in_row = 0
            i = 0
            while in_row < n_s:
                seed = instance_seed(curriculum.seed, j, i)
                i += 1
                instance = sample_instance(task, seed)
                kind = "task" if outcome.attempted == 0 else "instance"
                session.log.boundaries.append(Boundary(len(session.log), kind, task.id, seed))
                res = solve_instance(agent, instance, r_j, session)
                total += res.steps
                outcome.attempted += 1
                outcome.steps += res.steps
                outcome.instance_steps.append(res.steps)
                if res.solved_within_soft:
                    in_row += 1
                    outcome.successful += 1
                else:
                    if in_row:
                        outcome.resets += 1
                    in_row = 0
    except BudgetExceeded as exc:
        done = session.log.slice(start)
        exc.partial = CurriculumResult(done.action_count(), per_task, done, completed=False)
        raise
    return CurriculumResult(total, per_task, session.log.slice(start))


def rho(agent: Agent, curriculum: CurriculumSpec, budget: Optional[Budget] = None) -> int:
    """Number of steps the agent needs to complete the curriculum."""
    return run_curriculum(agent, curriculum, budget=budget).total_steps


@dataclass(frozen=True)
class TransferReport:
    """``rho_primed`` is the experienced agent's count, ``rho_fresh`` the reference.

    For the gradual-learning check the reference is an untrained agent; for
    the forgetting check it is the agent before it trained on the extra task.
    """

    kind: str
    rho_primed: int
    rho_fresh: int
    passed: bool
    constant_c: Optional[Fraction] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rho_primed": self.rho_primed, "rho_fresh": self.rho_fresh,
                "passed": self.passed, "constant_c": None if self.constant_c is None else str(self.constant_c)}


def _curriculum(tasks: Sequence[TaskSpec], n_s: int, seed: int) -> CurriculumSpec:
    return CurriculumSpec(tuple(tasks), n_s=n_s, seed=seed)


def gradual_learning_check(agent_factory: Callable[[], Agent], pretrain: Sequence[TaskSpec], probe: TaskSpec,
                           n_s: int = 2, seed: int = 0, budget: Optional[Budget] = None) -> TransferReport:
    primed = agent_factory()
    if pretrain:
        run_curriculum(primed, _curriculum(pretrain, n_s, seed), budget=budget)
    probe_c = _curriculum([probe], n_s, seed)
    rho_primed = rho(primed, probe_c, budget)
    rho_fresh = rho(agent_factory(), probe_c, budget)
    return TransferReport("gradual", rho_primed, rho_fresh, rho_primed < rho_fresh)


def forgetting_check(agent_factory: Callable[[], Agent], sequence: Sequence[TaskSpec],
                     revisit: Optional[TaskSpec] = None, c=DEFAULT_FORGETTING_C, n_s: int = 2, seed: int = 0,
                     budget: Optional[Budget] = None) -> TransferReport:
    """Compare revisiting ``revisit`` after the whole sequence against revisiting it one task earlier."""
    c = Fraction(str(c)) if isinstance(c, float) else Fraction(c)
    if c <= 0:
        raise ValueError("c must be positive")
    if len(sequence) < 2:
        raise ValueError("the sequence needs at least two tasks")
    revisit = revisit or sequence[-2]
    agent = agent_factory()
    run_curriculum(agent, _curriculum(sequence[:-1], n_s, seed), budget=budget)
    before = agent_factory()
    before.restore(agent.snapshot())
    revisit_c = _curriculum([revisit], n_s, seed)
    rho_before = rho(before, revisit_c, budget)
    run_curriculum(agent, _curriculum(sequence[-1:], n_s, seed), budget=budget)
    rho_after = rho(agent, revisit_c, budget)
    return TransferReport("forgetting", rho_after, rho_before, rho_after <= c * rho_before, c)
