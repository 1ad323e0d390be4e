"""Bundled micro- and mini-tasks.

Each factory returns a :class:`TaskSpec` whose sampler builds one finite
instance per seed.  The families cover fixed targets, key-to-reply maps,
group-conditional replies, description-then-query and membership questions.
Observations are printable ASCII.
"""
from __future__ import annotations

from collections import deque
from typing import Callable, Hashable, Iterable, Optional

import numpy as np

from .errors import ConfigError
from .tasks import Branch, CurriculumSpec, InstanceSpec, LimitPolicy, TaskSpec

StepFn = Callable[[Hashable], tuple[dict[int, tuple[int, list]], tuple[int, list]]]


def build_instance(
    prime: list[tuple[float, Hashable, int]],
    step: StepFn,
    label_of: Callable[[Hashable], str],
    *,
    description_length: int = 0,
    label: str = "",
    discount: float = 1.0,
) -> InstanceSpec:
    """Explore states breadth-first from the priming outcomes.

    ``step(key)`` returns ``(rules, default)`` where ``rules`` maps an action
    to ``(reward, outcomes)`` and outcomes are ``(p, next_key, observation)``.
    """
    index: dict[Hashable, int] = {}
    keys: list[Hashable] = []

    def idx(key):
        if key not in index:
            index[key] = len(keys)
            keys.append(key)
            queue.append(key)
        return index[key]

    queue: deque = deque()
    prime_out = tuple((float(p), idx(k), int(o)) for p, k, o in prime)
    table: dict[Hashable, tuple] = {}
    while queue:
        key = queue.popleft()
        rules, default = step(key)

        def branch(rw, outs):
            return Branch(int(rw), tuple((float(p), idx(k), int(o)) for p, k, o in outs))

        table[key] = (
            tuple((int(a), branch(*rules[a])) for a in sorted(rules)),
            branch(*default),
        )
    return InstanceSpec(
        states=tuple(label_of(k) for k in keys),
        rules=tuple(table[k][0] for k in keys),
        defaults=tuple(table[k][1] for k in keys),
        prime=prime_out,
        initial_state=prime_out[0][1],
        discount=discount,
        description_length=description_length,
        label=label,
    )


def _uniform(items: Iterable[tuple[Hashable, int]]) -> list[tuple[float, Hashable, int]]:
    items = list(items)
    return [(1.0 / len(items), k, o) for k, o in items]


def _byte(ch: str) -> int:
    b = ch.encode("ascii")
    if len(b) != 1 or not 0x20 <= b[0] < 0x7F:
        raise ConfigError(f"{ch!r} is not a printable ASCII character")
    return b[0]


def _task(task_id, sampler, req_reward, limits, params) -> TaskSpec:
    return TaskSpec(task_id, sampler, req_reward, limits or LimitPolicy(), dict(params))


def micro_fixed(*, targets=None, prompt=".", req_reward=5, limits=None, task_id="micro_fixed") -> TaskSpec:
    """Hidden target byte per instance; the prompt never changes."""
    pool = list(range(256)) if targets is None else [t if isinstance(t, int) else _byte(t) for t in targets]
    p = _byte(prompt)

    def sampler(seed: int) -> InstanceSpec:
        target = int(np.random.default_rng(seed).choice(pool))
        stay = [(1.0, "w", p)]
        return build_instance(
            [(1.0, "w", p)],
            lambda key: ({target: (1, stay)}, (-1, stay)),
            lambda key: "",
            label=f"target={target}",
        )

    params = {"targets": None if targets is None else list(pool), "prompt": prompt}
    return _task(task_id, sampler, req_reward, limits, params)


def micro_echo(*, letters="ABCDEFGH", k=3, req_reward=5, limits=None, task_id="micro_echo") -> TaskSpec:
    """Repeat the last observed byte; each instance draws ``k`` letters to emit."""
    if not 1 <= k <= len(letters):
        raise ConfigError("micro_echo needs 1 <= k <= len(letters)")

    def sampler(seed: int) -> InstanceSpec:
        chosen = sorted(np.random.default_rng(seed).choice(list(letters), size=k, replace=False))
        emit = _uniform((c, _byte(c)) for c in chosen)
        return build_instance(
            emit,
            lambda c: ({_byte(c): (1, emit)}, (-1, emit)),
            lambda c: c.lower(),
            label="letters=" + "".join(chosen),
        )

    return _task(task_id, sampler, req_reward, limits, {"letters": letters, "k": k})


def micro_map(*, keys="abcd", responses="wxyz", adaptive=False, req_reward=5, limits=None,
              task_id=None) -> TaskSpec:
    """One prompt letter per instance; the task-wide map names the right reply.

    With ``adaptive=True`` the first wrong reply in an instance is answered
    with 0 instead of -1; the state remembers whether that grace was used.
    """
    if len(keys) != len(responses) or not keys:
        raise ConfigError("keys and responses must be non-empty and equally long")
    mapping = dict(zip(keys, responses))

    def sampler(seed: int) -> InstanceSpec:
        key = str(np.random.default_rng(seed).choice(list(keys)))
        o = _byte(key)
        good = _byte(mapping[key])
        if not adaptive:
            stay = [(1.0, "w", o)]
            return build_instance([(1.0, "w", o)], lambda s: ({good: (1, stay)}, (-1, stay)),
                                  lambda s: "", label=f"prompt={key}")

        def step(graced):
            nxt = [(1.0, graced, o)]
            wrong = (-1, [(1.0, True, o)]) if graced else (0, [(1.0, True, o)])
            return {good: (1, nxt)}, wrong

        return build_instance([(1.0, False, o)], step, lambda g: "e" if g else "",
                              label=f"prompt={key}")

    tid = task_id or ("micro_map_adaptive" if adaptive else "micro_map")
    return _task(tid, sampler, req_reward, limits, {"keys": keys, "responses": responses, "adaptive": adaptive})


def micro_group(*, groups=("ac", "bd"), responses="wx", req_reward=5, limits=None,
                task_id="micro_group") -> TaskSpec:
    """Letters come in groups; the reply depends on the group of the letter just shown.

    Each instance plays one letter from every group, drawn per instance.
    """
    if len(groups) != len(responses) or len(groups) < 2:
        raise ConfigError("need one response per group and at least two groups")
    group_of = {c: g for g, members in enumerate(groups) for c in members}

    def sampler(seed: int) -> InstanceSpec:
        rng = np.random.default_rng(seed)
        letters = [str(rng.choice(list(members))) for members in groups]
        emit = _uniform((c, _byte(c)) for c in letters)
        return build_instance(
            emit,
            lambda c: ({_byte(responses[group_of[c]]): (1, emit)}, (-1, emit)),
            lambda c: c,
            label="letters=" + "".join(letters),
        )

    return _task(task_id, sampler, req_reward, limits, {"groups": list(groups), "responses": responses})


def mini_describe(*, keys="abcd", values="wxyz", pairs=2, req_reward=5, limits=None,
                  task_id="mini_describe") -> TaskSpec:
    """Spell out a small key->value map, then quiz the agent on it.

    The description is ``k1 v1 k2 v2 ...``; replies during it earn 0.  After the
    last value the environment emits a key and expects its value.
    """
    if not 1 <= pairs <= len(keys):
        raise ConfigError("pairs must be between 1 and len(keys)")

    def sampler(seed: int) -> InstanceSpec:
        rng = np.random.default_rng(seed)
        ks = [str(k) for k in rng.choice(list(keys), size=pairs, replace=False)]
        vs = [str(v) for v in rng.choice(list(values), size=pairs)]
        desc = "".join(k + v for k, v in zip(ks, vs))
        answer = dict(zip(ks, vs))
        query = _uniform((("q", k), _byte(k)) for k in ks)

        def step(key):
            if key[0] == "d":
                i = key[1]
                if i + 1 < len(desc):
                    return {}, (0, [(1.0, ("d", i + 1), _byte(desc[i + 1]))])
                return {}, (0, query)
            return {_byte(answer[key[1]]): (1, query)}, (-1, query)

        return build_instance(
            [(1.0, ("d", 0), _byte(desc[0]))],
            step,
            lambda key: f"d{key[1]}" if key[0] == "d" else f"q{key[1]}",
            description_length=len(desc),
            label="map=" + ",".join(f"{k}{v}" for k, v in zip(ks, vs)),
        )

    return _task(task_id, sampler, req_reward, limits, {"keys": keys, "values": values, "pairs": pairs})


# (transition table over "ab", start state, accepting states)
LANGUAGES: dict[str, tuple[dict[tuple[int, str], int], int, frozenset[int]]] = {
    "even_a": ({(0, "a"): 1, (0, "b"): 0, (1, "a"): 0, (1, "b"): 1}, 0, frozenset({0})),
    "starts_a": ({(0, "a"): 1, (0, "b"): 2, (1, "a"): 1, (1, "b"): 1, (2, "a"): 2, (2, "b"): 2}, 0, frozenset({1})),
    "ends_b": ({(0, "a"): 0, (0, "b"): 1, (1, "a"): 0, (1, "b"): 1}, 0, frozenset({1})),
    "contains_ab": ({(0, "a"): 1, (0, "b"): 0, (1, "a"): 1, (1, "b"): 2, (2, "a"): 2, (2, "b"): 2}, 0,
                    frozenset({2})),
    "no_bb": ({(0, "a"): 0, (0, "b"): 1, (1, "a"): 0, (1, "b"): 2, (2, "a"): 2, (2, "b"): 2}, 0,
              frozenset({0, 1})),
}


def accepts(language: str, word: str) -> bool:
    delta, q, final = LANGUAGES[language]
    for c in word:
        q = delta[(q, c)]
    return q in final


def mini_membership(*, languages=None, lengths=(4, 5), accept="y", reject="n", delimiter="?",
                    req_reward=5, limits=None, task_id="mini_membership") -> TaskSpec:
    """Emit a random string over {a, b}, then ``delimiter``; reply accept/reject.

    Each instance picks one language from the family.  Replies while the
    string is being spelled earn 0.
    """
    names = list(languages or LANGUAGES)
    for name in names:
        if name not in LANGUAGES:
            raise ConfigError(f"unknown language {name!r}")
    yes, no, qm = _byte(accept), _byte(reject), _byte(delimiter)

    def sampler(seed: int) -> InstanceSpec:
        lang = str(np.random.default_rng(seed).choice(names))
        delta, q0, final = LANGUAGES[lang]
        fresh = _uniform(((L, 1, delta[(q0, c)]), _byte(c)) for L in lengths for c in "ab")

        def step(key):
            if key[0] == "ask":
                good = yes if key[1] else no
                return {good: (1, fresh)}, (-1, fresh)
            L, pos, q = key
            if pos < L:
                return {}, (0, _uniform(((L, pos + 1, delta[(q, c)]), _byte(c)) for c in "ab"))
            return {}, (0, [(1.0, ("ask", q in final), qm)])

        def label_of(key):
            if key[0] == "ask":
                return "acc" if key[1] else "rej"
            return "L%dp%ds%d" % key

        return build_instance(fresh, step, label_of, label=f"language={lang}")

    params = {"languages": names, "lengths": list(lengths), "accept": accept, "reject": reject,
              "delimiter": delimiter}
    return _task(task_id, sampler, req_reward, limits, params)


def scripted_rewards(rewards, *, obs=".", req_reward=5, limits=None, task_id="scripted_rewards") -> TaskSpec:
    """Pays ``rewards[t]`` on step ``t`` whatever the action; the last reward repeats forever.

    Useful for exercising the instance loop against a known reward trace.
    """
    rewards = tuple(int(r) for r in rewards)
    if not rewards:
        raise ConfigError("scripted_rewards needs at least one reward")
    o = _byte(obs)
    last = len(rewards) - 1

    def sampler(seed: int) -> InstanceSpec:
        def step(t):
            return {}, (rewards[t], [(1.0, min(t + 1, last), o)])

        return build_instance([(1.0, 0, o)], step, lambda t: f"t{t}_", label="scripted")

    return _task(task_id, sampler, req_reward, limits, {"rewards": list(rewards), "obs": obs})


TASK_FACTORIES: dict[str, Callable[..., TaskSpec]] = {
    "micro_fixed": micro_fixed,
    "micro_echo": micro_echo,
    "micro_map": micro_map,
    "micro_map_adaptive": lambda **kw: micro_map(adaptive=True, **kw),
    "micro_group": micro_group,
    "mini_describe": mini_describe,
    "mini_membership": mini_membership,
    "scripted_rewards": scripted_rewards,
}


def make_task(name: str, **kwargs) -> TaskSpec:
    try:
        factory = TASK_FACTORIES[name]
    except KeyError:
        raise ConfigError(f"unknown task {name!r}; known: {sorted(TASK_FACTORIES)}") from None
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for task {name!r}: {exc}") from None


# Sorted by C_mu under uniform actions.  micro_fixed sits about 4e-9 bits above
# the two maps: its model keeps a short-lived state where the instance is ambiguous.
BUNDLED_ORDER = (
    "micro_map",
    "micro_map_adaptive",
    "micro_fixed",
    "mini_describe",
    "micro_group",
    "micro_echo",
    "mini_membership",
)


def bundled_curriculum(n_s: int = 2, seed: int = 0, names: Optional[Iterable[str]] = None) -> CurriculumSpec:
    return CurriculumSpec(tuple(make_task(n) for n in (names or BUNDLED_ORDER)), n_s=n_s, seed=seed)
