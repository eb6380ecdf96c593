"""Monte Carlo comparison of selectors, as in the benchmark command.

Uses fewer replicates than the acceptance run so it finishes in about a
minute.  Pass a replicate count on the command line for more.
"""
import sys
import time

from circtrend import Exponential, MonteCarloPlan, ScenarioSpec, WrappedGPSpec, run_monte_carlo

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 20
scenario = ScenarioSpec(WrappedGPSpec(Exponential(0.1)), "r1", n=100, centered_grid=True)

for p in (0, 1):
    plan = MonteCarloPlan(scenario, replicates=reps, p=p, master_seed=2024,
                          grid_points=20, grid_lo=0.05, grid_hi=2.5)
    t0 = time.perf_counter()
    res = run_monte_carlo(plan)
    print(f"p = {p}  ({reps} replicates, {time.perf_counter() - t0:.0f} s)")
    for row in res.summary():
        print(f"  {row['selector']:5s} {row['mean_case']:.4f}  (se {row['mc_se']:.4f})")
