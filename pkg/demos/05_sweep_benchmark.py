"""Run the full pose-pair sweep on a small instance and report the
accuracy and timing summary, the batch workflow behind the CLI's
`sweep` and `bench` subcommands.
"""

import numpy as np

from costpredict.bench import summarize, sweep
from costpredict.trajectory import simulate_pair

tA, tB, _ = simulate_pair(12, seed=3)
rows = sweep(tA, tB, mode="both", jobs=1)
stats = summarize(rows)

print(f"pairs evaluated:        {stats['pairs']}")
print(f"max relative error:     {stats['max_rel_error']:.2%}")
print(f"median relative error:  {stats['median_rel_error']:.2%}")
print(f"predict total:          {stats['t_predict_total']:.3f} s "
      f"({stats['t_predict_avg'] * 1e3:.2f} ms per pair)")
print(f"solve total:            {stats['t_solve_total']:.3f} s "
      f"({stats['t_solve_avg'] * 1e3:.2f} ms per pair)")
print(f"speedup:                {stats['t_solve_avg'] / stats['t_predict_avg']:.0f}x")

grid = np.full((12, 12), np.nan)
for row in rows:
    grid[row.l - 1, row.r - 1] = row.rel_error
print("\nworst pairs by relative error:")
for row in sorted(rows, key=lambda r: -(r.rel_error or 0.0))[:3]:
    print(f"  (l={row.l}, r={row.r}): predicted {row.delta_f:.2f}, "
          f"solved {row.f_real:.2f}, rel {row.rel_error:.2%}")
