"""JSON text format for machines and transducers.

Transitions are sparse rows ``[i, y, j, p]`` (machines) or ``[i, y, x, j, p]``
(transducers).  Tuple symbols are written as JSON arrays and read back as
tuples.  Floats go through ``repr``, so values survive the round trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ConfigError
from .mechanics import EpsilonMachine, EpsilonTransducer

FORMAT = "gradualbench/machine"
VERSION = 1


def _enc(sym):
    if isinstance(sym, tuple):
        return [_enc(s) for s in sym]
    if isinstance(sym, np.generic):
        return sym.item()
    return sym


def _dec(sym):
    if isinstance(sym, list):
        return tuple(_dec(s) for s in sym)
    return sym


def machine_to_dict(m: Union[EpsilonMachine, EpsilonTransducer]) -> dict:
    if isinstance(m, EpsilonTransducer):
        return {
            "format": FORMAT,
            "version": VERSION,
            "kind": "transducer",
            "input_alphabet": [_enc(x) for x in m.input_alphabet],
            "output_alphabet": [_enc(y) for y in m.output_alphabet],
            "states": [_enc(s) for s in m.states],
            "transitions": [[i, _enc(y), _enc(x), j, float(p)] for i, x, y, j, p in m.edges],
        }
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": "machine",
        "alphabet": [_enc(y) for y in m.alphabet],
        "states": [_enc(s) for s in m.states],
        "transitions": [[i, _enc(y), j, float(p)] for i, y, j, p in m.edges],
    }


def machine_from_dict(doc: dict) -> Union[EpsilonMachine, EpsilonTransducer]:
    if doc.get("format") != FORMAT:
        raise ConfigError(f"not a machine document (format={doc.get('format')!r})")
    if doc.get("version") != VERSION:
        raise ConfigError(f"unsupported machine format version {doc.get('version')!r}")
    states = [_dec(s) for s in doc["states"]]
    try:
        if doc["kind"] == "transducer":
            edges = [(i, _dec(x), _dec(y), j, p) for i, y, x, j, p in doc["transitions"]]
            return EpsilonTransducer([_dec(x) for x in doc["input_alphabet"]],
                                     [_dec(y) for y in doc["output_alphabet"]], states, edges)
        if doc["kind"] == "machine":
            edges = [(i, _dec(y), j, p) for i, y, j, p in doc["transitions"]]
            return EpsilonMachine([_dec(y) for y in doc["alphabet"]], states, edges)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"malformed machine document: {exc}") from exc
    raise ConfigError(f"unknown machine kind {doc.get('kind')!r}")


def dumps(m) -> str:
    return json.dumps(machine_to_dict(m), indent=1)


def loads(text: str):
    try:
        return machine_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"machine file is not valid JSON: {exc}") from exc


def save(m, path) -> None:
    Path(path).write_text(dumps(m))


def load(path):
    return loads(Path(path).read_text())
