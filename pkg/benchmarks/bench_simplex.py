"""Time the compiled simplex kernels against the numpy fallback.

Each backend runs in its own interpreter, since the choice is made at import.

    python benchmarks/bench_simplex.py [--repeat 3] [--days 2]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from coalgrid.data import load_bundled
from coalgrid.dispatch import ProblemKind, build
from coalgrid.lp import solve_lp, kernels

repeat, days = int(sys.argv[1]), int(sys.argv[2])
h = load_bundled()
lps = {}
for d in range(days):
    s = h.day_scenario(d)
    lps[f"individual m1 day {d + 1}"] = build(s, ProblemKind.individual(s.member_ids[0]))
    lps[f"coalitional day {d + 1}"] = build(s, ProblemKind.coalitional(s.member_ids))
    lps[f"community day {d + 1}"] = build(s, ProblemKind.community(s.member_ids, [p.id for p in s.consumers]))
out = {"backend": kernels.BACKEND, "rows": {}}
for name, lp in lps.items():
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        sol = solve_lp(lp)
        best = min(best, time.perf_counter() - t0)
    out["rows"][name] = dict(seconds=best, objective=sol.objective_value, iterations=sol.iterations,
                             size=f"{lp.num_rows}x{lp.num_vars}")
print(json.dumps(out))
"""


def run(pure: bool, repeat: int, days: int) -> dict:
    env = dict(os.environ)
    env.pop("COALGRID_PURE_PYTHON", None)
    if pure:
        env["COALGRID_PURE_PYTHON"] = "1"
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat), str(days)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--days", type=int, default=2)
    args = ap.parse_args()

    fast = run(False, args.repeat, args.days)
    slow = run(True, args.repeat, args.days)
    if fast["backend"] != "cython":
        print("compiled kernels not built; both columns use the fallback", file=sys.stderr)

    print(f"{'problem':<24}{'size':>10}{'iters':>7}{fast['backend']:>10}{slow['backend']:>10}{'speedup':>9}")
    tot_f = tot_s = 0.0
    for name, f in fast["rows"].items():
        s = slow["rows"][name]
        assert abs(f["objective"] - s["objective"]) <= 1e-9 * (1 + abs(s["objective"])), name
        tot_f += f["seconds"]
        tot_s += s["seconds"]
        print(f"{name:<24}{f['size']:>10}{f['iterations']:>7}{f['seconds']:>9.3f}s{s['seconds']:>9.3f}s"
              f"{s['seconds'] / f['seconds']:>8.1f}x")
    print(f"{'total':<41}{tot_f:>9.3f}s{tot_s:>9.3f}s{tot_s / tot_f:>8.1f}x")


if __name__ == "__main__":
    main()
