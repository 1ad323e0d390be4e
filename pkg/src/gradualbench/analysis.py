"""Curriculum complexity ordering and shared structure between task models."""
from __future__ import annotations

from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import NonErgodic, StateExplosion
from .mechanics import (EpsilonMachine, EpsilonTransducer, channel_complexity_upper, input_dependent_complexity,
                        topological_complexity)
from .reconstruct import DEFAULT_STATE_CAP, task_model
from .tasks import CurriculumSpec, TaskSpec

ORDER_TOL = 1e-9
EXACT_STATE_LIMIT = 30

Machine = Union[EpsilonMachine, EpsilonTransducer]


@dataclass
class TaskComplexity:
    task_id: str
    n_states: Optional[int] = None
    c_0: Optional[float] = None
    c_mu: Optional[float] = None
    c_bar: Optional[float] = None
    analyzed: bool = True
    error: Optional[str] = None


@dataclass
class ComplexityReport:
    tasks: list[TaskComplexity]
    order_ok: bool
    violations: list[tuple[str, str, float, float]]
    instance_seeds: tuple = (0, 1)
    input_process: str = "uniform i.i.d. actions"

    def unanalyzed(self) -> list[str]:
        return [t.task_id for t in self.tasks if not t.analyzed]

    def to_dict(self) -> dict:
        return {
            "order_ok": self.order_ok,
            "violations": [list(v) for v in self.violations],
            "instance_seeds": list(self.instance_seeds),
            "input_process": self.input_process,
            "channel_complexity_note": "maximised over i.i.d. inputs only: a lower bound on the channel complexity",
            "tasks": [vars(t) for t in self.tasks],
        }


def analyze_task(task: TaskSpec, instance_seeds: Sequence[int] = (0, 1), state_cap: int = DEFAULT_STATE_CAP,
                 channel: bool = True, resolution: float = 1e-2) -> TaskComplexity:
    try:
        T = task_model(task, instance_seeds, state_cap).transducer
    except StateExplosion as exc:
        return TaskComplexity(task.id, analyzed=False, error=str(exc))
    out = TaskComplexity(task.id, T.n_states, topological_complexity(T))
    try:
        out.c_mu = input_dependent_complexity(T)
    except NonErgodic as exc:
        out.analyzed, out.error = False, f"driven chain not ergodic: {exc}"
    if channel:
        out.c_bar = channel_complexity_upper(T, resolution=resolution).value
    return out


def order_violations(values: Sequence[tuple[str, float]], tol: float = ORDER_TOL):
    """Adjacent pairs whose complexity decreases by more than ``tol``."""
    return [(a, b, va, vb) for (a, va), (b, vb) in zip(values, values[1:]) if vb < va - tol]


def curriculum_order_check(curriculum: CurriculumSpec, instance_seeds: Sequence[int] = (0, 1),
                           state_cap: int = DEFAULT_STATE_CAP, channel: bool = False,
                           resolution: float = 1e-2, jobs: int = 1) -> ComplexityReport:
    """Is C_mu (uniform i.i.d. actions) non-decreasing along the curriculum?

    Tasks whose model exceeds ``state_cap`` are reported as unanalyzed and
    left out of the verdict.
    """
    def one(task):
        return analyze_task(task, instance_seeds, state_cap, channel, resolution)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one, curriculum.tasks))
    else:
        results = [one(t) for t in curriculum.tasks]
    ordered = [(r.task_id, r.c_mu) for r in results if r.analyzed]
    violations = order_violations(ordered)
    return ComplexityReport(results, not violations, violations, tuple(instance_seeds))


# ---------------------------------------------------------------- shared structure

@dataclass(frozen=True)
class SharedStructureScore:
    pair: tuple
    score: Fraction
    matched_edges: int
    witness: dict = field(compare=False)  # state name in first machine -> state name in second
    exact: bool = True


def _edge_graph(m: Machine):
    """adj[u][v] = set of labels on edges u -> v."""
    adj = defaultdict(lambda: defaultdict(set))
    if isinstance(m, EpsilonTransducer):
        for i, x, y, j, _ in m.edges:
            adj[i][j].add((x, y))
    else:
        for i, y, j, _ in m.edges:
            adj[i][j].add(y)
    n_edges = sum(len(ls) for row in adj.values() for ls in row.values())
    return adj, n_edges


class _Matcher:
    """Branch and bound over injective partial maps from the states of ``a`` into ``b``.

    Vertices of ``a`` are assigned in a fixed order; an edge is credited when
    its later endpoint is assigned.  The bound adds, for every unassigned
    vertex, its best exact credit against the assigned part plus an optimistic
    count of labels it could still share with not-yet-assigned neighbours.
    """

    def __init__(self, a: Machine, b: Machine):
        self.na, self.nb = a.n_states, b.n_states
        self.out_a, self.ea = _edge_graph(a)
        self.out_b, self.eb = _edge_graph(b)
        self.in_a = defaultdict(dict)
        for u, row in list(self.out_a.items()):
            for v, ls in row.items():
                self.in_a[v][u] = ls
        deg = [sum(map(len, self.out_a[u].values())) + sum(map(len, self.in_a[u].values())) for u in range(self.na)]
        self.order = sorted(range(self.na), key=lambda u: (-deg[u], u))
        self.pos = {u: k for k, u in enumerate(self.order)}
        self._inter: dict = {}
        out_lb = [Counter() for _ in range(self.nb)]
        in_lb = [Counter() for _ in range(self.nb)]
        for w, row in list(self.out_b.items()):
            for z, ls in row.items():
                if z != w:
                    out_lb[w].update(ls)
                    in_lb[z].update(ls)
        # fut[k][u][w]: labels u could still share with w through a-neighbours at positions k..pos(u)-1
        self.fut = []
        for k in range(self.na + 1):
            table = {}
            for u in self.order[k:]:
                co, ci = Counter(), Counter()
                for v, ls in self.out_a[u].items():
                    if v != u and k <= self.pos[v] < self.pos[u]:
                        co.update(ls)
                for v, ls in self.in_a[u].items():
                    if v != u and k <= self.pos[v] < self.pos[u]:
                        ci.update(ls)
                table[u] = [sum((co & out_lb[w]).values()) + sum((ci & in_lb[w]).values()) for w in range(self.nb)]
            self.fut.append(table)

    def inter(self, u, v, w, z) -> int:
        key = (u, v, w, z)
        hit = self._inter.get(key)
        if hit is None:
            la = self.out_a[u].get(v)
            lb = self.out_b[w].get(z) if la else None
            hit = self._inter[key] = len(la & lb) if la and lb else 0
        return hit

    def gain(self, u: int, w: int, f: dict) -> int:
        g = self.inter(u, u, w, w)
        for v in self.out_a[u]:
            z = f.get(v)
            if z is not None and v != u:
                g += self.inter(u, v, w, z)
        for v in self.in_a[u]:
            z = f.get(v)
            if z is not None and v != u:
                g += self.inter(v, u, z, w)
        return g

    def greedy(self):
        f: dict[int, int] = {}
        used: set[int] = set()
        total = 0
        for k, u in enumerate(self.order):
            best = None
            for w in range(self.nb):
                if w in used:
                    continue
                key = (self.gain(u, w, f), self.fut[0][u][w], -w)
                if best is None or key > best[0]:
                    best = (key, w)
            if best is None:
                continue
            f[u] = best[1]
            used.add(best[1])
            total += best[0][0]
        return total, f

    def exact(self, max_nodes: int = 2_000_000):
        best_total, best_f = self.greedy()
        cap = min(self.ea, self.eb)
        f: dict[int, int] = {}
        used: set[int] = set()
        nodes = 0
        complete = True

        def search(k: int, total: int):
            nonlocal best_total, best_f, nodes, complete
            nodes += 1
            if nodes > max_nodes:
                complete = False
                return
            if total > best_total:
                best_total, best_f = total, dict(f)
            if k == self.na or best_total >= cap:
                return
            free = [w for w in range(self.nb) if w not in used]
            fut = self.fut[k]
            rest = 0
            gains_u = None
            for u in self.order[k:]:
                gu = [(self.gain(u, w, f), w) for w in free]
                if gains_u is None:
                    gains_u = gu
                rest += max((g + fut[u][w] for g, w in gu), default=0)
            if total + rest <= best_total:
                return
            u = self.order[k]
            for g, w in sorted(gains_u, key=lambda t: (-t[0], t[1])):
                f[u] = w
                used.add(w)
                search(k + 1, total + g)
                del f[u]
                used.discard(w)
                if not complete:
                    return
            search(k + 1, total)

        search(0, 0)
        return best_total, best_f, complete


def shared_structure(a: Machine, b: Machine, names: tuple = ("a", "b"), exact_limit: int = EXACT_STATE_LIMIT,
                     max_nodes: int = 2_000_000) -> SharedStructureScore:
    """Largest label-preserving common edge set under an injective state map, over max edge count.

    Exact branch and bound when both machines have at most ``exact_limit``
    states; otherwise the better of the two greedy directions, flagged
    approximate.
    """
    m = _Matcher(a, b)
    denom = max(m.ea, m.eb)
    if denom == 0:
        return SharedStructureScore(names, Fraction(1), 0, {}, True)
    if max(a.n_states, b.n_states) <= exact_limit:
        if a.n_states <= b.n_states:
            total, f, exact = m.exact(max_nodes)
        else:
            total, back, exact = _Matcher(b, a).exact(max_nodes)
            f = {u: w for w, u in back.items()}
    else:
        total, f = m.greedy()
        back_total, back = _Matcher(b, a).greedy()
        if back_total > total:
            total, f = back_total, {u: w for w, u in back.items()}
        exact = False
    witness = {a.states[u]: b.states[w] for u, w in sorted(f.items())}
    return SharedStructureScore(names, Fraction(total, denom), total, witness, exact)


def greedy_shared_structure(a: Machine, b: Machine) -> Fraction:
    m = _Matcher(a, b)
    denom = max(m.ea, m.eb)
    if denom == 0:
        return Fraction(1)
    return Fraction(max(m.greedy()[0], _Matcher(b, a).greedy()[0]), denom)
