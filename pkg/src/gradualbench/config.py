"""Curriculum files and result reports (JSON).

A curriculum file looks like::

    {"version": 1, "seed": 0, "n_s": 2,
     "tasks": [{"task": "micro_fixed"},
               {"task": "micro_map", "id": "map", "req_reward": 3,
                "limits": {"per_reward": 8, "hard_factor": 4},
                "params": {"keys": "ab", "responses": "xy"}}]}

``task`` names a bundled factory; everything else is optional.
"""
from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .library import make_task
from .tasks import CurriculumSpec, LimitPolicy, TaskSpec

CONFIG_VERSION = 1
_TASK_KEYS = {"task", "id", "req_reward", "limits", "params"}


def _task_from_dict(entry: Any, where: str) -> TaskSpec:
    if not isinstance(entry, dict) or "task" not in entry:
        raise ConfigError(f"{where}: each task entry needs a 'task' field")
    unknown = set(entry) - _TASK_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    params = entry.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}: params must be an object")
    task = make_task(entry["task"], **params)
    if "limits" in entry:
        lim = entry["limits"]
        try:
            policy = LimitPolicy(**lim)
        except TypeError as exc:
            raise ConfigError(f"{where}: bad limits {lim!r}: {exc}") from None
        task = replace(task, limits=policy)
    if "req_reward" in entry:
        r = entry["req_reward"]
        if not isinstance(r, int) or isinstance(r, bool) or r < 1:
            raise ConfigError(f"{where}: req_reward must be a positive integer")
        task = replace(task, req_reward=r)
    if "id" in entry:
        task = replace(task, id=str(entry["id"]))
    return task


def curriculum_from_dict(doc: Any) -> CurriculumSpec:
    if not isinstance(doc, dict):
        raise ConfigError("curriculum file must hold a JSON object")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported curriculum version {doc.get('version')!r}")
    tasks = doc.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise ConfigError("curriculum needs a non-empty 'tasks' list")
    n_s, seed = doc.get("n_s", 2), doc.get("seed", 0)
    if not isinstance(n_s, int) or n_s < 1:
        raise ConfigError("n_s must be a positive integer")
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    specs = tuple(_task_from_dict(t, f"tasks[{k}]") for k, t in enumerate(tasks))
    return CurriculumSpec(specs, n_s=n_s, seed=seed)


def curriculum_to_dict(curriculum: CurriculumSpec, factory_names=None) -> dict:
    """Inverse of :func:`curriculum_from_dict` for tasks built from bundled factories."""
    out = []
    for k, t in enumerate(curriculum.tasks):
        name = factory_names[k] if factory_names else t.id
        out.append({"task": name, "id": t.id, "req_reward": t.req_reward,
                    "limits": {"per_reward": t.limits.per_reward, "hard_factor": t.limits.hard_factor},
                    "params": t.params})
    return {"version": CONFIG_VERSION, "seed": curriculum.seed, "n_s": curriculum.n_s, "tasks": out}


def load_curriculum(path) -> CurriculumSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return curriculum_from_dict(doc)


def dump_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"


def text_table(rows: list[dict], columns: list[str]) -> str:
    cells = [[("" if r.get(c) is None else f"{r[c]:.6g}" if isinstance(r.get(c), float) else str(r[c]))
              for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[k]) for row in cells]) for k, c in enumerate(columns)]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    lines = [fmt.format(*columns), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*row) for row in cells]
    return "\n".join(line.rstrip() for line in lines) + "\n"
