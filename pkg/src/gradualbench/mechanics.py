"""Epsilon-machines, epsilon-transducers and their complexity measures.

Machines are stored as sparse edge lists.  A machine edge ``(i, y, j, p)``
is the entry T^(y)[i, j] = P(S1 = j, Y0 = y | S0 = i); a transducer edge
``(i, x, y, j, p)`` is T^(y|x)[i, j] = P(S1 = j, Y0 = y | S0 = i, X0 = x).
Dense per-symbol matrices are built on request.

Channel complexity is only searched over i.i.d. input processes, so
:func:`channel_complexity_upper` returns a lower bound on the supremum over
all input processes (it is still bounded above by ``log2 |S|``).
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidDistribution, InvalidMachine, NonErgodic

ROW_TOL = 1e-12
FIXED_POINT_TOL = 1e-10
PROB_DIGITS = 12

Symbol = Hashable


def _check_rows(totals: Mapping, what: str) -> None:
    for key, tot in totals.items():
        if abs(tot - 1.0) > ROW_TOL:
            raise InvalidMachine(f"{what} {key!r} has outgoing probability {tot!r}, expected 1")


@dataclass(frozen=True)
class EpsilonMachine:
    alphabet: tuple
    states: tuple
    edges: tuple  # (i, y, j, p)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        edges = tuple((int(i), y, int(j), float(p)) for i, y, j, p in self.edges if p > 0)
        object.__setattr__(self, "edges", edges)
        n = len(self.states)
        if n < 1:
            raise InvalidMachine("a machine needs at least one state")
        alpha = set(self.alphabet)
        totals = defaultdict(float, {s: 0.0 for s in range(n)})
        for i, y, j, p in edges:
            if not (0 <= i < n and 0 <= j < n) or y not in alpha or p > 1 + ROW_TOL:
                raise InvalidMachine(f"bad edge {(i, y, j, p)!r}")
            totals[i] += p
        _check_rows({self.states[i]: t for i, t in totals.items()}, "state")

    @property
    def n_states(self) -> int:
        return len(self.states)

    def matrix(self, y) -> np.ndarray:
        T = np.zeros((self.n_states, self.n_states))
        for i, s, j, p in self.edges:
            if s == y:
                T[i, j] += p
        return T

    def state_matrix(self) -> np.ndarray:
        M = np.zeros((self.n_states, self.n_states))
        for i, _, j, p in self.edges:
            M[i, j] += p
        return M

    def successors(self) -> dict:
        """(state, symbol) -> list of (next state, p)."""
        out = defaultdict(list)
        for i, y, j, p in self.edges:
            out[(i, y)].append((j, p))
        return out


@dataclass(frozen=True)
class EpsilonTransducer:
    input_alphabet: tuple
    output_alphabet: tuple
    states: tuple
    edges: tuple  # (i, x, y, j, p)

    def __post_init__(self):
        object.__setattr__(self, "input_alphabet", tuple(self.input_alphabet))
        object.__setattr__(self, "output_alphabet", tuple(self.output_alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        edges = tuple((int(i), x, y, int(j), float(p)) for i, x, y, j, p in self.edges if p > 0)
        object.__setattr__(self, "edges", edges)
        n = len(self.states)
        if n < 1:
            raise InvalidMachine("a transducer needs at least one state")
        xs, ys = set(self.input_alphabet), set(self.output_alphabet)
        totals = {(s, x): 0.0 for s in range(n) for x in self.input_alphabet}
        for i, x, y, j, p in edges:
            if not (0 <= i < n and 0 <= j < n) or x not in xs or y not in ys or p > 1 + ROW_TOL:
                raise InvalidMachine(f"bad edge {(i, x, y, j, p)!r}")
            totals[(i, x)] += p
        _check_rows({(self.states[i], x): t for (i, x), t in totals.items()}, "state/input")

    @property
    def n_states(self) -> int:
        return len(self.states)

    def matrix(self, y, x) -> np.ndarray:
        T = np.zeros((self.n_states, self.n_states))
        for i, a, b, j, p in self.edges:
            if a == x and b == y:
                T[i, j] += p
        return T

    def input_matrix(self, x) -> np.ndarray:
        """Sum over outputs of T^(y|x)."""
        M = np.zeros((self.n_states, self.n_states))
        for i, a, _, j, p in self.edges:
            if a == x:
                M[i, j] += p
        return M

    def input_classes(self) -> list[list]:
        """Inputs grouped by identical behaviour in every state, in alphabet order."""
        rows = defaultdict(list)
        for i, x, y, j, p in self.edges:
            rows[x].append((i, repr(y), j, round(p, PROB_DIGITS)))
        groups: dict[tuple, list] = {}
        for x in self.input_alphabet:
            groups.setdefault(tuple(sorted(rows[x])), []).append(x)
        return list(groups.values())

    def successors(self) -> dict:
        """(state, input, output) -> list of (next state, p)."""
        out = defaultdict(list)
        for i, x, y, j, p in self.edges:
            out[(i, x, y)].append((j, p))
        return out


Machine = Union[EpsilonMachine, EpsilonTransducer]


@dataclass(frozen=True)
class StateDistribution:
    states: tuple
    weights: np.ndarray = field(compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.states) or (w < -ROW_TOL).any() or abs(w.sum() - 1) > ROW_TOL:
            raise InvalidDistribution("state distribution must be a non-negative vector summing to 1")
        object.__setattr__(self, "weights", w)

    def as_dict(self) -> dict:
        return dict(zip(self.states, self.weights.tolist()))


@dataclass(frozen=True)
class IIDInput:
    """Independent draws over the transducer's input alphabet."""

    probs: Mapping

    def vector(self, alphabet: Sequence) -> np.ndarray:
        unknown = set(self.probs) - set(alphabet)
        if unknown:
            raise InvalidDistribution(f"input symbols {sorted(map(repr, unknown))} not in the input alphabet")
        v = np.array([float(self.probs.get(x, 0.0)) for x in alphabet])
        _check_distribution(v, 1e-9)
        return v

    @classmethod
    def uniform(cls, alphabet: Sequence) -> "IIDInput":
        return cls({x: 1.0 / len(alphabet) for x in alphabet})


InputProcess = Union[IIDInput, EpsilonMachine, Mapping, None]


def _check_distribution(p: np.ndarray, tol: float) -> None:
    if p.ndim != 1 or len(p) == 0 or (p < 0).any() or abs(p.sum() - 1.0) > tol:
        raise InvalidDistribution(f"not a probability vector (sum={p.sum() if p.size else 0!r})")


def shannon_entropy(dist) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(dist, dtype=float).ravel()
    _check_distribution(p, 1e-9)
    p = p[p > 0]
    h = float(-(p * np.log2(p)).sum())
    return 0.0 if h < 1e-15 else h


def is_unifilar(machine: Machine) -> bool:
    return not unifilarity_violations(machine)


def unifilarity_violations(machine: Machine) -> list:
    """(state name, symbol[s]) pairs with more than one positive-probability successor."""
    bad = []
    for key, succ in machine.successors().items():
        if len({j for j, p in succ if p > 0}) > 1:
            bad.append((machine.states[key[0]],) + tuple(key[1:]))
    return bad


def recurrent_classes(M: np.ndarray) -> list[list[int]]:
    """Closed strongly connected classes of the support graph of ``M``."""
    support = csr_matrix(M > 0)
    n_comp, labels = connected_components(support, directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    rows, cols = support.nonzero()
    for i, j in zip(rows, cols):
        if labels[i] != labels[j]:
            leaves[labels[i]] = False
    classes = [sorted(np.flatnonzero(labels == c).tolist()) for c in range(n_comp) if leaves[c]]
    return sorted(classes)


def stationary_vector(M: np.ndarray) -> np.ndarray:
    """The unique stationary row vector of a row-stochastic matrix with one recurrent class.

    Solves pi (M - I) = 0 with sum(pi) = 1 on the recurrent class, which is
    valid for periodic chains too; transient states get weight 0.
    """
    M = np.asarray(M, dtype=float)
    classes = recurrent_classes(M)
    if len(classes) != 1:
        raise NonErgodic(f"{len(classes)} recurrent classes", classes)
    rc = classes[0]
    sub = M[np.ix_(rc, rc)]
    k = len(rc)
    A = sub.T - np.eye(k)
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        x = _power_iteration(sub)
    for _ in range(3):
        if np.abs(x @ sub - x).max() <= FIXED_POINT_TOL * 1e-2:
            break
        r = b - A @ x
        x = x + np.linalg.lstsq(A, r, rcond=None)[0]
    x = np.clip(x, 0.0, None)
    x /= x.sum()
    pi = np.zeros(M.shape[0])
    pi[rc] = x
    return pi


def _power_iteration(P: np.ndarray, iters: int = 100000) -> np.ndarray:
    # lazy chain so periodic classes still converge
    L = 0.5 * (P + np.eye(P.shape[0]))
    x = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(iters):
        nxt = x @ L
        if np.abs(nxt - x).max() < 1e-15:
            return nxt
        x = nxt
    return x


def stationary_distribution(machine: EpsilonMachine) -> StateDistribution:
    return StateDistribution(machine.states, stationary_vector(machine.state_matrix()))


def statistical_complexity(machine: EpsilonMachine) -> float:
    return shannon_entropy(stationary_distribution(machine).weights)


def topological_complexity(machine: Machine) -> float:
    return math.log2(machine.n_states)


def _class_matrices(transducer: EpsilonTransducer, classes: list[list]) -> list[np.ndarray]:
    return [transducer.input_matrix(c[0]) for c in classes]


def driven_state_distribution(transducer: EpsilonTransducer, input: InputProcess = None) -> StateDistribution:
    """pi_X: stationary transducer-state distribution when driven by ``input``."""
    S = transducer.n_states
    if isinstance(input, EpsilonMachine):
        missing = set(input.alphabet) - set(transducer.input_alphabet)
        if missing:
            raise InvalidDistribution(f"input machine emits symbols outside the input alphabet: {missing}")
        Q = input.n_states
        J = np.zeros((Q * S, Q * S))
        for x in input.alphabet:
            Tq = input.matrix(x)
            if Tq.any():
                J += np.kron(Tq, transducer.input_matrix(x))
        joint = stationary_vector(J)
        pi = joint.reshape(Q, S).sum(axis=0)
    else:
        if input is None:
            input = IIDInput.uniform(transducer.input_alphabet)
        elif not isinstance(input, IIDInput):
            input = IIDInput(dict(input))
        q = input.vector(transducer.input_alphabet)
        classes = transducer.input_classes()
        pos = {x: k for k, x in enumerate(transducer.input_alphabet)}
        M = np.zeros((S, S))
        for cls, Mc in zip(classes, _class_matrices(transducer, classes)):
            w = sum(q[pos[x]] for x in cls)
            if w > 0:
                M += w * Mc
        pi = stationary_vector(M)
    pi = np.clip(pi, 0.0, None)
    return StateDistribution(transducer.states, pi / pi.sum())


def input_dependent_complexity(transducer: EpsilonTransducer, input: InputProcess = None) -> float:
    """C_X = H[pi_X]; ``input=None`` means uniform i.i.d. over the input alphabet."""
    return shannon_entropy(driven_state_distribution(transducer, input).weights)


@dataclass(frozen=True)
class ChannelEstimate:
    value: float
    input: dict
    class_weights: tuple
    lower_bound: bool = True  # sup restricted to i.i.d. inputs
    evaluations: int = 0


def _simplex_grid(k: int, n: int):
    for cuts in itertools.combinations(range(n + k - 1), k - 1):
        parts, prev = [], -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(n + k - 2 - prev)
        yield np.array(parts, dtype=float) / n


def channel_complexity_upper(transducer: EpsilonTransducer, resolution: float = 1e-2, refine: float = 1e-4,
                             seed: int = 0, max_points: int = 6000) -> ChannelEstimate:
    """Maximise C_X over i.i.d. inputs: grid (or random simplex sample) then pattern search.

    Inputs that behave identically everywhere are pooled first, so the search
    runs over the weights of behaviour classes.  Inputs whose driven chain has
    several recurrent classes are skipped.
    """
    classes = transducer.input_classes()
    mats = _class_matrices(transducer, classes)
    k = len(classes)
    evals = 0

    def score(w):
        nonlocal evals
        evals += 1
        M = sum(wi * Mi for wi, Mi in zip(w, mats) if wi > 0)
        try:
            return shannon_entropy(stationary_vector(M))
        except NonErgodic:
            return -1.0

    n = max(1, int(round(1.0 / resolution)))
    if k == 1:
        candidates = [np.ones(1)]
    elif math.comb(n + k - 1, k - 1) <= max_points:
        candidates = list(_simplex_grid(k, n))
    else:
        rng = np.random.default_rng(seed)
        candidates = [np.eye(k)[i] for i in range(k)] + [np.full(k, 1.0 / k)]
        candidates += list(rng.dirichlet(np.ones(k), size=max_points - len(candidates)))

    best_w, best = None, -1.0
    for w in candidates:
        v = score(w)
        if v > best:
            best_w, best = w, v
    if best < 0:
        best_w = np.full(k, 1.0 / k)
        best = max(score(best_w), 0.0)

    step = resolution / 2
    while step >= refine and k > 1:
        improved = True
        while improved:
            improved = False
            for a in range(k):
                for b in range(k):
                    if a == b or best_w[b] < step:
                        continue
                    w = best_w.copy()
                    w[a] += step
                    w[b] -= step
                    v = score(w)
                    if v > best + 1e-13:
                        best_w, best, improved = w, v, True
        step /= 2

    weights = {}
    for cls, w in zip(classes, best_w):
        for x in cls:
            weights[x] = float(w) / len(cls)
    return ChannelEstimate(float(best), weights, tuple(float(w) for w in best_w), True, evals)


def simulate(machine: EpsilonMachine, n: int, seed: int = 0, start: Optional[int] = None,
             return_states: bool = False):
    """Draw ``n`` symbols; the start state defaults to a draw from the stationary distribution."""
    rng = np.random.default_rng(seed)
    succ = defaultdict(list)
    for i, y, j, p in machine.edges:
        succ[i].append((p, y, j))
    table = []
    for i in range(machine.n_states):
        outs = succ[i]
        cum = np.cumsum([p for p, _, _ in outs])
        table.append((cum.tolist(), [y for _, y, _ in outs], [j for _, _, j in outs]))
    if start is None:
        pi = stationary_vector(machine.state_matrix())
        start = int(rng.choice(machine.n_states, p=pi))
    u = rng.random(n).tolist()
    state = start
    symbols, states = [], []
    for r in u:
        cum, ys, js = table[state]
        k = 0
        while k < len(cum) - 1 and r >= cum[k]:
            k += 1
        if return_states:
            states.append(state)
        symbols.append(ys[k])
        state = js[k]
    return (symbols, states) if return_states else symbols
