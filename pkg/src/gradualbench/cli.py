"""Command line: ``python -m gradualbench <command> ...``.

Exit status is 0 on success, 2 for invalid input or configuration, 3 when a
step or time budget runs out (and 1 when an evaluated check fails).
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import serialize
from .agents import make_agent
from .analysis import curriculum_order_check
from .config import dump_report, load_curriculum, text_table
from .errors import AgentFailure, BudgetExceeded, ConfigError, GradualBenchError, InsufficientData
from .export import DotOptions, export_dot
from .harness import DEFAULT_FORGETTING_C, Budget, forgetting_check, gradual_learning_check, run_curriculum
from .library import bundled_curriculum, make_task
from .reconstruct import reconstruct_from_sequence, task_model
from .stream import encode_frame
from .tasks import env_step, hard_limit, sample_instance, soft_limit

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3


def _curriculum(args):
    if args.curriculum:
        cur = load_curriculum(args.curriculum)
    else:
        cur = bundled_curriculum(seed=args.seed or 0)
    if args.seed is not None:
        cur = type(cur)(cur.tasks, cur.n_s, args.seed)
    return cur


def _budget(args) -> Budget:
    return Budget(args.budget_steps, args.budget_seconds)


def _agent_factory(args):
    def factory():
        return make_agent(args.agent, seed=args.agent_seed, command=args.agent_cmd)
    return factory


def _params(text: Optional[str]) -> dict:
    if not text:
        return {}
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("--params must be a JSON object")
    return doc


def _tasks(names):
    return [make_task(n) for n in names]


def _emit(args, doc: dict, text: str) -> None:
    body = dump_report(doc) if args.format == "structured" else text
    if args.out:
        Path(args.out).write_text(body)
        if args.format == "text":
            Path(args.out).with_suffix(".json").write_text(dump_report(doc))
    else:
        sys.stdout.write(body)


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    cur = _curriculum(args)
    agent = _agent_factory(args)()
    try:
        result = run_curriculum(agent, cur, budget=_budget(args))
        status = EXIT_OK
    except BudgetExceeded as exc:
        result, status = exc.partial, EXIT_BUDGET
        print(f"budget exceeded: {exc}", file=sys.stderr)
    finally:
        agent.close()
    doc = result.to_dict()
    doc.update(agent=args.agent, seed=cur.seed, n_s=cur.n_s)
    rows = [{"task": o.task_id, "steps": o.steps, "attempted": o.attempted, "successful": o.successful,
             "resets": o.resets} for o in result.per_task]
    text = text_table(rows, ["task", "steps", "attempted", "successful", "resets"])
    text += f"total steps: {result.total_steps}  completed: {result.completed}\n"
    _emit(args, doc, text)
    return status


def cmd_check_gradual(args) -> int:
    pre, probe = _tasks(args.pretrain), make_task(args.probe)
    try:
        rep = gradual_learning_check(_agent_factory(args), pre, probe, n_s=args.n_s, seed=args.seed or 0,
                                     budget=_budget(args))
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = f"gradual: primed {rep.rho_primed} vs fresh {rep.rho_fresh} -> {'pass' if rep.passed else 'fail'}\n"
    _emit(args, rep.to_dict(), text)
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_check_forgetting(args) -> int:
    seq = _tasks(args.tasks)
    revisit = make_task(args.revisit) if args.revisit else None
    try:
        c = Fraction(args.c)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"--c must be a rational number, got {args.c!r}") from None
    try:
        rep = forgetting_check(_agent_factory(args), seq, revisit, c=c, n_s=args.n_s, seed=args.seed or 0,
                               budget=_budget(args))
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = (f"forgetting: after {rep.rho_primed} vs before {rep.rho_fresh} (c = {rep.constant_c}) -> "
            f"{'pass' if rep.passed else 'fail'}\n")
    _emit(args, rep.to_dict(), text)
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_analyze(args) -> int:
    cur = _curriculum(args)
    rep = curriculum_order_check(cur, tuple(args.instance_seeds), channel=args.channel, jobs=args.jobs)
    rows = [vars(t) for t in rep.tasks]
    text = text_table(rows, ["task_id", "n_states", "c_0", "c_mu", "c_bar", "analyzed"])
    text += f"order ok: {rep.order_ok}\n"
    for a, b, va, vb in rep.violations:
        text += f"  violation: {a} ({va:.6g}) before {b} ({vb:.6g})\n"
    if args.channel:
        text += "c_bar is maximised over i.i.d. inputs only (a lower bound on the channel complexity)\n"
    _emit(args, rep.to_dict(), text)
    return EXIT_OK if rep.order_ok else EXIT_FAILED


def cmd_model(args) -> int:
    task = make_task(args.task, **_params(args.params))
    model = task_model(task, tuple(args.instance_seeds), args.state_cap)
    doc = serialize.machine_to_dict(model.transducer)
    doc["source"] = {"task": args.task, "params": _params(args.params), "instance_seeds": list(args.instance_seeds),
                     "raw_states": model.raw_states}
    text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"{args.task}: {model.transducer.n_states} states", file=sys.stderr)
    return EXIT_OK


def _read_sequence(path: str, text_mode: bool):
    try:
        if text_mode:
            return [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
        return list(Path(path).read_bytes())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def cmd_reconstruct(args) -> int:
    seq = _read_sequence(args.input, args.text)
    m = reconstruct_from_sequence(seq, l_max=args.l_max, alpha=args.alpha)
    text = serialize.dumps(m) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"reconstructed machine: {m.n_states} state(s)", file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        m = serialize.load(args.input)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc}") from None
    dot = export_dot(m, DotOptions(args.hide_errors, args.hide_switches, args.merge_chains), Path(args.input).stem)
    if args.out:
        Path(args.out).write_text(dot)
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def _parse_action(line: str) -> Optional[int]:
    line = line.rstrip("\n")
    if len(line) == 1:
        return ord(line) if ord(line) < 256 else None
    if line.lower().startswith("0x"):
        try:
            v = int(line, 16)
        except ValueError:
            return None
        return v if 0 <= v < 256 else None
    return None


def cmd_play(args) -> int:
    """Play one task by hand: type a character (or 0xNN) per step, EOF to quit."""
    task = make_task(args.task, **_params(args.params))
    seed = args.seed or 0
    inst = sample_instance(task, seed)
    _, obs, _ = env_step(inst, None)
    reward, in_row, t = 0, 0, 0
    out = sys.stdout
    out.write(f"task {task.id}, R* = {task.req_reward}, soft limit {soft_limit(inst)}, hard limit {hard_limit(inst)}\n")
    while True:
        frame = encode_frame(obs, reward)
        out.write(f"[t={t}] obs {obs!r:>4} {chr(obs)!r}  reward {reward:+d}  frame {frame.hex()} > ")
        out.flush()
        line = sys.stdin.readline()
        if not line:
            out.write("\n")
            return EXIT_OK
        action = _parse_action(line)
        if action is None:
            out.write("enter one character or 0xNN\n")
            continue
        reward, obs, _ = env_step(inst, action)
        t += 1
        in_row = in_row + 1 if reward == 1 else 0 if reward == -1 else in_row
        if in_row == task.req_reward or t == hard_limit(inst):
            solved = in_row == task.req_reward
            out.write(f"instance {'solved' if solved else 'stopped'} after {t} steps "
                      f"({'within' if solved and t <= soft_limit(inst) else 'outside'} the soft limit)\n")
            seed += 1
            inst = sample_instance(task, seed)
            _, obs, _ = env_step(inst, None)
            in_row, t = 0, 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradualbench", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--curriculum", help="curriculum JSON file (default: bundled curriculum)")
    common.add_argument("--budget-steps", type=int, default=None)
    common.add_argument("--budget-seconds", type=float, default=None)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--out", help="write the result here instead of stdout")
    agent = argparse.ArgumentParser(add_help=False)
    agent.add_argument("--agent", default="memorizer", help="random|constant|echo|memorizer|oracle|external")
    agent.add_argument("--agent-cmd", help="command line for --agent external")
    agent.add_argument("--agent-seed", type=int, default=0)
    agent.add_argument("--n-s", type=int, default=2)
    seeds = argparse.ArgumentParser(add_help=False)
    seeds.add_argument("--instance-seeds", type=int, nargs="+", default=[0, 1])

    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("run", parents=[common, agent], help="evaluate an agent on a curriculum")
    s.set_defaults(fn=cmd_run)
    s = sub.add_parser("check-gradual", parents=[common, agent], help="primed vs fresh agent on a probe task")
    s.add_argument("--pretrain", nargs="+", required=True)
    s.add_argument("--probe", required=True)
    s.set_defaults(fn=cmd_check_gradual)
    s = sub.add_parser("check-forgetting", parents=[common, agent], help="revisit a task after learning another")
    s.add_argument("--tasks", nargs="+", required=True)
    s.add_argument("--revisit")
    s.add_argument("--c", default=str(DEFAULT_FORGETTING_C))
    s.set_defaults(fn=cmd_check_forgetting)
    s = sub.add_parser("analyze", parents=[common, seeds], help="complexity of each task and ordering verdict")
    s.add_argument("--channel", action="store_true", help="also estimate the channel complexity (slow)")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(fn=cmd_analyze)
    s = sub.add_parser("model", parents=[common, seeds], help="serialize a task's transducer")
    s.add_argument("task")
    s.add_argument("--params", help="factory parameters as a JSON object")
    s.add_argument("--state-cap", type=int, default=100_000)
    s.set_defaults(fn=cmd_model)
    s = sub.add_parser("reconstruct", parents=[common], help="infer a machine from a symbol sequence")
    s.add_argument("input")
    s.add_argument("--text", action="store_true", help="one symbol per line instead of raw bytes")
    s.add_argument("--l-max", type=int, default=4)
    s.add_argument("--alpha", type=float, default=0.001)
    s.set_defaults(fn=cmd_reconstruct)
    s = sub.add_parser("export", parents=[common], help="DOT text for a serialized machine")
    s.add_argument("input")
    s.add_argument("--hide-errors", action="store_true")
    s.add_argument("--hide-switches", action="store_true")
    s.add_argument("--merge-chains", action="store_true")
    s.set_defaults(fn=cmd_export)
    s = sub.add_parser("play", parents=[common], help="play a task by hand over the byte protocol")
    s.add_argument("task")
    s.add_argument("--params")
    s.set_defaults(fn=cmd_play)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, AgentFailure, InsufficientData, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GradualBenchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
