"""Steps each baseline agent needs on the bundled curriculum, plus the two transfer checks.

    python3 scripts/run_baselines.py --budget-steps 200000
"""
import argparse

from gradualbench.agents import make_agent
from gradualbench.config import text_table
from gradualbench.errors import BudgetExceeded
from gradualbench.harness import Budget, forgetting_check, gradual_learning_check, run_curriculum
from gradualbench.library import bundled_curriculum, make_task

AGENTS = ("oracle", "memorizer", "echo", "random", "constant")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--budget-steps", type=int, default=200_000)
    ap.add_argument("--n-s", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cur = bundled_curriculum(n_s=args.n_s, seed=args.seed)
    rows = []
    for name in AGENTS:
        agent = make_agent(name, seed=args.seed)
        try:
            res = run_curriculum(agent, cur, budget=Budget(max_steps=args.budget_steps))
        except BudgetExceeded as exc:
            res = exc.partial
        done = sum(o.successful >= args.n_s for o in res.per_task)
        rows.append({"agent": name, "steps": res.total_steps, "completed": res.completed,
                     "tasks_done": f"{done}/{len(cur.tasks)}"})
    print(text_table(rows, ["agent", "steps", "completed", "tasks_done"]))

    print()
    seq = [make_task("micro_fixed", targets="wxyz", task_id="warmup"),
           make_task("micro_map", keys="ab", responses="wx", task_id="map_ab"),
           make_task("micro_map", keys="ef", responses="st", task_id="map_ef")]
    budget = Budget(max_steps=args.budget_steps)
    checks = []
    for name in ("memorizer", "random"):
        def factory(name=name):
            return make_agent(name, seed=args.seed)
        row = {"agent": name}
        try:
            f = forgetting_check(factory, seq, c=1, n_s=4, seed=args.seed, budget=budget)
            row.update(forgetting=f"{f.rho_primed} vs {f.rho_fresh}", kept=f.passed)
        except BudgetExceeded:
            row.update(forgetting="over budget", kept=None)
        try:
            g = gradual_learning_check(factory, seq[:2], seq[2], n_s=4, seed=args.seed, budget=budget)
            row.update(gradual=f"{g.rho_primed} vs {g.rho_fresh}", faster=g.passed)
        except BudgetExceeded:
            row.update(gradual="over budget", faster=None)
        checks.append(row)
    print(text_table(checks, ["agent", "forgetting", "kept", "gradual", "faster"]))


if __name__ == "__main__":
    main()
