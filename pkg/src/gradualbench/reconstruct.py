"""Building epsilon-machines and epsilon-transducers.

* :func:`minimize` merges causally equivalent states of a unifilar
  presentation by partition refinement.
* :func:`reconstruct_from_sequence` estimates an epsilon-machine from one
  symbol stream by causal-state splitting (history suffix tree,
  chi-square homogeneity tests, then splitting until unifilar).
* :func:`transducer_from_task` turns a task (approximated by a list of
  sampled instances) into an epsilon-transducer whose inputs are action bytes
  and whose outputs are ``(observation, reward)`` pairs.
"""
from __future__ import annotations

import logging
import re
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence, Union

import numpy as np
from scipy.stats import chi2

from .errors import InsufficientData, NotUnifilar, StateExplosion
from .mechanics import PROB_DIGITS, EpsilonMachine, EpsilonTransducer, unifilarity_violations
from .tasks import ACTIONS, InstanceSpec, TaskSpec

log = logging.getLogger(__name__)

DEFAULT_STATE_CAP = 100_000
MIN_STATE_COUNT = 5

Machine = Union[EpsilonMachine, EpsilonTransducer]


# ---------------------------------------------------------------- minimization

def _labelled_edges(m: Machine):
    if isinstance(m, EpsilonTransducer):
        return [(i, (x, y), j, p) for i, x, y, j, p in m.edges]
    return [(i, (y,), j, p) for i, y, j, p in m.edges]


def partition(raw: Machine) -> list[int]:
    """Block index of every state under causal equivalence.

    Blocks are numbered by their lowest-numbered member, so the result is
    canonical for a given state order.
    """
    bad = unifilarity_violations(raw)
    if bad:
        raise NotUnifilar(f"{len(bad)} (state, symbol) pairs have several successors", bad)
    out = defaultdict(list)
    for i, key, j, p in _labelled_edges(raw):
        out[i].append((repr(key), round(p, PROB_DIGITS), j))
    n = raw.n_states
    for i in range(n):
        out[i].sort()

    def renumber(sigs):
        ids: dict = {}
        return [ids.setdefault(s, len(ids)) for s in sigs]

    block = renumber([tuple((k, p) for k, p, _ in out[i]) for i in range(n)])
    while True:
        refined = renumber([(block[i], tuple((k, p, block[j]) for k, p, j in out[i])) for i in range(n)])
        if max(refined) == max(block):
            return refined
        block = refined


def minimize(raw: Machine) -> Machine:
    """Merge equivalent states; a one-input transducer comes back as a machine."""
    block = partition(raw)
    reps: dict[int, int] = {}
    for i, b in enumerate(block):
        reps.setdefault(b, i)
    n_blocks = len(reps)
    names = [raw.states[reps[b]] for b in range(n_blocks)]
    if isinstance(raw, EpsilonTransducer):
        edges = [(block[i], x, y, block[j], p) for i, x, y, j, p in raw.edges if reps[block[i]] == i]
        if len(raw.input_alphabet) == 1:
            return EpsilonMachine(raw.output_alphabet, names, [(i, y, j, p) for i, _, y, j, p in edges])
        return EpsilonTransducer(raw.input_alphabet, raw.output_alphabet, names, edges)
    edges = [(block[i], y, block[j], p) for i, y, j, p in raw.edges if reps[block[i]] == i]
    return EpsilonMachine(raw.alphabet, names, edges)


# ---------------------------------------------------------------- CSSR

@dataclass
class HistoryTable:
    """Next-symbol counts for every history of length <= l_max seen in a sequence."""

    alphabet: tuple
    l_max: int
    counts: dict  # history tuple (symbol indices) -> np.ndarray of next-symbol counts
    length: int

    @classmethod
    def from_sequence(cls, codes: np.ndarray, alphabet: tuple, l_max: int) -> "HistoryTable":
        k = len(alphabet)
        n = len(codes)
        counts: dict[tuple, np.ndarray] = {}
        for L in range(l_max + 1):
            if n <= L:
                break
            w = np.zeros(n - L, dtype=np.int64)
            for m in range(L + 1):
                w = w * k + codes[m:n - L + m]
            words, freq = np.unique(w, return_counts=True)
            for word, f in zip(words.tolist(), freq.tolist()):
                digits = []
                for _ in range(L + 1):
                    digits.append(word % k)
                    word //= k
                digits.reverse()
                hist = tuple(digits[:-1])
                vec = counts.get(hist)
                if vec is None:
                    vec = counts[hist] = np.zeros(k, dtype=np.int64)
                vec[digits[-1]] += f
        return cls(alphabet, l_max, counts, n)

    def total(self, hist: tuple) -> int:
        vec = self.counts.get(hist)
        return 0 if vec is None else int(vec.sum())


def homogeneity_pvalue(a: np.ndarray, b: np.ndarray) -> float:
    """Chi-square test that two count vectors come from one distribution."""
    table = np.vstack([a, b]).astype(float)
    table = table[:, table.sum(axis=0) > 0]
    rows = table.sum(axis=1)
    if table.shape[1] < 2 or (rows == 0).any():
        return 1.0
    expected = np.outer(rows, table.sum(axis=0)) / table.sum()
    stat = float(((table - expected) ** 2 / expected).sum())
    return float(chi2.sf(stat, table.shape[1] - 1))


def reconstruct_from_sequence(seq: Sequence[Hashable], l_max: int = 4, alpha: float = 0.001,
                              alphabet: Optional[Sequence[Hashable]] = None) -> EpsilonMachine:
    seq = list(seq)
    alphabet = tuple(sorted(set(seq), key=repr) if alphabet is None else alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    k = len(alphabet)
    if k == 0:
        raise InsufficientData("empty sequence")
    if len(seq) < 10 * k ** l_max:
        log.warning("sequence of %d symbols is short for l_max=%d over %d symbols", len(seq), l_max, k)
    codes = np.fromiter((index[s] for s in seq), dtype=np.int64, count=len(seq))
    table = HistoryTable.from_sequence(codes, alphabet, l_max)

    states: list[list[tuple]] = [[()]]
    pooled: list[np.ndarray] = [table.counts.get((), np.zeros(k, dtype=np.int64)).copy()]
    where: dict[tuple, int] = {(): 0}

    def place(hist, target):
        states[target].append(hist)
        pooled[target] += table.counts[hist]
        where[hist] = target

    # sufficiency: grow histories one symbol into the past
    for L in range(l_max):
        for hist in [h for h in where if len(h) == L]:
            parent_state = where[hist]
            for a in range(k):
                child = (a,) + hist
                if table.total(child) == 0:
                    continue
                vec = table.counts[child]
                if homogeneity_pvalue(vec, pooled[parent_state]) >= alpha:
                    place(child, parent_state)
                    continue
                pvals = [(homogeneity_pvalue(vec, pooled[s]), -s) for s in range(len(states)) if s != parent_state]
                best = max(pvals, default=(0.0, 0))
                if best[0] >= alpha:
                    place(child, -best[1])
                else:
                    states.append([])
                    pooled.append(np.zeros(k, dtype=np.int64))
                    place(child, len(states) - 1)

    # recursion: keep full-length histories, split until transitions are deterministic
    groups = [sorted(h for h in members if len(h) == l_max) for members in states]
    groups = [g for g in groups if g]
    while True:
        where = {h: s for s, g in enumerate(groups) for h in g}
        split = None
        for s, g in enumerate(groups):
            for a in range(k):
                by_target = defaultdict(list)
                for h in g:
                    if table.counts[h][a] == 0:
                        continue
                    by_target[where.get(h[1:] + (a,))].append(h)
                by_target.pop(None, None)
                if len(by_target) > 1:
                    split = (s, sorted(by_target.values()))
                    break
            if split:
                break
        if split is None:
            break
        s, parts = split
        groups[s] = parts[0]
        groups.extend(parts[1:])

    edges = []
    for s, g in enumerate(groups):
        vec = sum(table.counts[h] for h in g)
        if vec.sum() < MIN_STATE_COUNT:
            raise InsufficientData(f"causal state {s} has only {int(vec.sum())} observations")
        kept = {}
        for a in range(k):
            if vec[a] == 0:
                continue
            targets = {where.get(h[1:] + (a,)) for h in g if table.counts[h][a] > 0} - {None}
            if targets:
                kept[a] = (vec[a], targets.pop())
        mass = sum(c for c, _ in kept.values())
        for a, (c, dst) in kept.items():
            edges.append((s, alphabet[a], dst, c / mass))
    _fix_rows(edges, len(groups))
    return EpsilonMachine(alphabet, [f"S{s}" for s in range(len(groups))], edges)


def _fix_rows(edges: list, n: int) -> None:
    # renormalise rows exactly so float sums stay within the row tolerance
    rows = defaultdict(list)
    for e, (i, *_rest, p) in enumerate(edges):
        rows[i].append(e)
    for i, idx in rows.items():
        tot = sum(edges[e][-1] for e in idx)
        for e in idx:
            edges[e] = edges[e][:-1] + (edges[e][-1] / tot,)


# ---------------------------------------------------------------- task models

def instance_letter(k: int) -> str:
    s = ""
    k += 1
    while k:
        k, r = divmod(k - 1, 26)
        s = chr(65 + r) + s
    return s


def state_name(parts: Sequence[str], counter: int) -> str:
    """State label: instance letter(s), env label, then the positive-reward count."""
    head = "/".join(parts)
    return f"{head}_{counter}" if head and head[-1].isdigit() else f"{head}{counter}"


_COUNTER = re.compile(r"(\d+)$")


def counter_of(name) -> Optional[int]:
    m = _COUNTER.search(str(name))
    return int(m.group(1)) if m else None


@dataclass(frozen=True)
class TaskModel:
    task_id: str
    instance_seeds: tuple
    composed: EpsilonTransducer  # unifilar, before merging
    raw_states: int  # (instance, env state, counter) triples reached
    transducer: EpsilonTransducer


def compose_task(task: TaskSpec, instance_seeds: Sequence[int] = (0, 1),
                 state_cap: int = DEFAULT_STATE_CAP) -> tuple[EpsilonTransducer, int]:
    """Unifilar presentation of the task over the sampled instances.

    Raw states are (instance, env state, consecutive-positive counter).  A
    positive reward that completes R* switches to a fresh instance drawn
    uniformly from the sample; the output of that step carries the new
    instance's first observation.  Because instances can be hidden from the
    agent, states of the presentation are posterior distributions over raw
    states given the input/output history, which makes it unifilar.
    """
    specs: list[InstanceSpec] = [task.sample_spec(s) for s in instance_seeds]
    if not specs:
        raise ValueError("need at least one instance seed")
    r_star = task.req_reward
    K = len(specs)

    raw_index: dict[tuple, int] = {}
    raw_keys: list[tuple] = []

    def raw(key):
        if key not in raw_index:
            if len(raw_keys) >= state_cap:
                raise StateExplosion(f"task {task.id}: more than {state_cap} raw states")
            raw_index[key] = len(raw_keys)
            raw_keys.append(key)
        return raw_index[key]

    entries = []  # (weight, obs, raw state)
    for k, spec in enumerate(specs):
        for p, s, o in spec.prime:
            entries.append((p / K, o, raw((k, s, 0))))

    def moves(r: int, x: int):
        k, s, c = raw_keys[r]
        b = specs[k].branch(s, x)
        if b.reward == 1 and c + 1 == r_star:
            return [((o, 1), p * w, dst) for p, _, _ in b.outcomes for w, o, dst in entries]
        c2 = c + 1 if b.reward == 1 else (0 if b.reward == -1 else c)
        return [((o, b.reward), p, raw((k, s2, c2))) for p, s2, o in b.outcomes]

    def key_of(dist: dict) -> tuple:
        tot = sum(dist.values())
        return tuple(sorted((r, round(w / tot, PROB_DIGITS)) for r, w in dist.items() if w / tot > 10 ** -PROB_DIGITS))

    beliefs: dict[tuple, int] = {}
    order: list[tuple] = []
    queue: deque = deque()

    def belief(dist):
        key = key_of(dist)
        if key not in beliefs:
            if len(order) >= state_cap:
                raise StateExplosion(f"task {task.id}: more than {state_cap} model states")
            beliefs[key] = len(order)
            order.append(key)
            queue.append(key)
        return beliefs[key]

    by_obs = defaultdict(lambda: defaultdict(float))
    for w, o, r in entries:
        by_obs[o][r] += w
    for o in sorted(by_obs):
        belief(by_obs[o])

    edges = []
    outputs = set()
    while queue:
        key = queue.popleft()
        src = beliefs[key]
        explicit = set()
        for r, _ in key:
            k, s, _c = raw_keys[r]
            explicit |= specs[k].explicit_actions(s)
        others = [x for x in ACTIONS if x not in explicit]
        probes = sorted(explicit) + others[:1]
        for x in probes:
            acc = defaultdict(lambda: defaultdict(float))
            for r, w in key:
                for y, p, dst in moves(r, x):
                    acc[y][dst] += w * p
            row = []
            for y in sorted(acc):
                mass = sum(acc[y].values())
                row.append((y, mass, belief(acc[y])))
            tot = sum(m for _, m, _ in row)
            targets = [x] if x in explicit else others
            for y, mass, dst in row:
                outputs.add(y)
                for xx in targets:
                    edges.append((src, xx, y, dst, mass / tot))

    names = []
    for key in order:
        parts, counters = set(), set()
        for r, _ in key:
            k, s, c = raw_keys[r]
            parts.add(instance_letter(k) + specs[k].states[s])
            counters.add(c)
        assert len(counters) == 1, "all raw states of a posterior share the counter"
        names.append(state_name(sorted(parts), counters.pop()))
    if len(set(names)) != len(names):
        seen = defaultdict(int)
        uniq = []
        for n in names:
            seen[n] += 1
            uniq.append(n if seen[n] == 1 else f"{n}'{seen[n] - 1}")
        names = uniq
    composed = EpsilonTransducer(tuple(ACTIONS), tuple(sorted(outputs)), names, edges)
    return composed, len(raw_keys)


def task_model(task: TaskSpec, instance_seeds: Sequence[int] = (0, 1),
               state_cap: int = DEFAULT_STATE_CAP) -> TaskModel:
    composed, n_raw = compose_task(task, instance_seeds, state_cap)
    return TaskModel(task.id, tuple(instance_seeds), composed, n_raw, minimize(composed))


def transducer_from_task(task: TaskSpec, instance_seeds: Sequence[int] = (0, 1),
                         state_cap: int = DEFAULT_STATE_CAP) -> EpsilonTransducer:
    return task_model(task, instance_seeds, state_cap).transducer
