"""Graphviz DOT text for machines and transducers.

Transducer edges with the same source, output, target and probability are
drawn once, labelled ``(o, r | a)`` with ``a`` the set of actions that take
it.  Output is a pure function of the machine and the options.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Union

from .mechanics import EpsilonMachine, EpsilonTransducer
from .reconstruct import counter_of

Machine = Union[EpsilonMachine, EpsilonTransducer]

LIST_LIMIT = 8


@dataclass(frozen=True)
class DotOptions:
    hide_errors: bool = False      # transitions paying -1
    hide_switches: bool = False    # +1 transitions into a counter-0 state (a fresh instance)
    merge_chains: bool = False     # fold zero-reward runs through in/out-degree-1 states into one edge


def _sym(v) -> str:
    if isinstance(v, int) and 0x21 <= v < 0x7F:
        return chr(v)
    if isinstance(v, int):
        return f"0x{v:02X}"
    return str(v)


def _inputs(xs, alphabet) -> str:
    xs = sorted(xs, key=alphabet.index)
    if len(xs) == len(alphabet):
        return "*"
    if len(xs) <= LIST_LIMIT:
        return ",".join(_sym(x) for x in xs)
    rest = [x for x in alphabet if x not in set(xs)]
    if len(rest) <= LIST_LIMIT:
        return "~{" + ",".join(_sym(x) for x in rest) + "}"
    return f"{len(xs)} actions"


def _prob(p: float) -> str:
    return "" if abs(p - 1.0) < 1e-12 else f" [{p:.4g}]"


@dataclass
class _Edge:
    src: int
    dst: int
    label: str
    reward: object   # None for plain machines


def _edges(m: Machine) -> list[_Edge]:
    out = []
    if isinstance(m, EpsilonTransducer):
        groups = defaultdict(list)
        for i, x, y, j, p in m.edges:
            groups[(i, y, j, round(p, 12))].append(x)
        alphabet = list(m.input_alphabet)
        for (i, y, j, p), xs in groups.items():
            if isinstance(y, tuple) and len(y) == 2:
                head, reward = f"{_sym(y[0])}, {y[1]:+d}" if y[1] else f"{_sym(y[0])}, 0", y[1]
            else:
                head, reward = _sym(y), None
            out.append(_Edge(i, j, f"({head} | {_inputs(xs, alphabet)}){_prob(p)}", reward))
    else:
        for i, y, j, p in m.edges:
            out.append(_Edge(i, j, f"{_sym(y)}{_prob(p)}", None))
    out.sort(key=lambda e: (e.src, e.dst, e.label))
    return out


def _merge_chains(edges: list[_Edge], n: int) -> tuple[list[_Edge], set[int]]:
    removed: set[int] = set()
    changed = True
    while changed:
        changed = False
        for v in range(n):
            if v in removed:
                continue
            ins = [e for e in edges if e.dst == v and e.src != v]
            outs = [e for e in edges if e.src == v]
            if len(ins) != 1 or len(outs) != 1 or outs[0].dst == v or ins[0].src == v:
                continue
            a, b = ins[0], outs[0]
            if a.reward not in (0, None) or b.reward not in (0, None):
                continue
            edges = [e for e in edges if e is not a and e is not b]
            edges.append(_Edge(a.src, b.dst, a.label + " ; " + b.label, 0 if a.reward == 0 else None))
            edges.sort(key=lambda e: (e.src, e.dst, e.label))
            removed.add(v)
            changed = True
    return edges, removed


def export_dot(machine: Machine, options: DotOptions = DotOptions(), name: str = "machine") -> str:
    names = [str(s) for s in machine.states]
    edges = _edges(machine)
    if options.hide_errors:
        edges = [e for e in edges if e.reward != -1]
    if options.hide_switches:
        edges = [e for e in edges if not (e.reward == 1 and counter_of(names[e.dst]) == 0)]
    removed: set[int] = set()
    if options.merge_chains:
        edges, removed = _merge_chains(edges, len(names))
    q = json.dumps
    lines = [f"digraph {q(name)} {{", "  rankdir=LR;", "  node [shape=circle];"]
    lines += [f"  {q(s)};" for k, s in enumerate(names) if k not in removed]
    lines += [f"  {q(names[e.src])} -> {q(names[e.dst])} [label={q(e.label)}];" for e in edges]
    lines.append("}")
    return "\n".join(lines) + "\n"


def edge_count(dot: str) -> int:
    return sum(1 for line in dot.splitlines() if " -> " in line)
