"""Complexity table, shared-structure matrix and DOT files for the bundled tasks.

    python3 scripts/analyze_bundled.py --out results/bundled   # about 90 s
"""
import argparse
import json
import time
from pathlib import Path

from gradualbench.analysis import analyze_task, shared_structure
from gradualbench.config import text_table
from gradualbench.export import DotOptions, export_dot
from gradualbench.library import BUNDLED_ORDER, make_task
from gradualbench.reconstruct import transducer_from_task


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/bundled")
    ap.add_argument("--resolution", type=float, default=0.1, help="grid step of the channel search")
    ap.add_argument("--max-nodes", type=int, default=200_000, help="search nodes per pair before falling back")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows, machines = [], {}
    for name in BUNDLED_ORDER:
        t0 = time.perf_counter()
        r = analyze_task(make_task(name), resolution=args.resolution)
        machines[name] = transducer_from_task(make_task(name))
        rows.append({"task": name, "states": r.n_states, "C_0": round(r.c_0, 6), "C_mu": round(r.c_mu, 10),
                     "C_bar": round(r.c_bar, 6), "secs": round(time.perf_counter() - t0, 2)})
        opts = DotOptions(hide_errors=True, hide_switches=True)
        (out / f"{name}.dot").write_text(export_dot(machines[name], opts, name=name))
    print(text_table(rows, ["task", "states", "C_0", "C_mu", "C_bar", "secs"]))

    # neighbouring pairs only: the full matrix is quadratic in the larger machines
    pairs = []
    for a, b in zip(BUNDLED_ORDER, BUNDLED_ORDER[1:]):
        s = shared_structure(machines[a], machines[b], names=(a, b), max_nodes=args.max_nodes)
        pairs.append({"from": a, "to": b, "score": f"{float(s.score):.4f}", "exact": s.exact})
    print()
    print(text_table(pairs, ["from", "to", "score", "exact"]))
    (out / "report.json").write_text(json.dumps({"tasks": rows, "shared_structure": pairs}, indent=2))


if __name__ == "__main__":
    main()
