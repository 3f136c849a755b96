"""A miniature planner shoot-out.

Runs a reduced version of the batch comparison (fewer runs, two distances)
and prints the per-distance metric tables. The full-size protocol lives in
tests/test_acceptance.py and behind `sarsim compare`.
"""

import os
import time

from sarsim import compare_planners, write_metrics_csv

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT_DIR, exist_ok=True)

t0 = time.time()
tables = compare_planners(distances_km=[10.0, 20.0], runs=12, master_seed=4,
                          workers=1, bnb_horizon=8, bnb_beam=64)
for table in tables:
    print(table.to_text())
    print()

csv_path = os.path.join(OUT_DIR, "mini_compare.csv")
write_metrics_csv(tables, csv_path)
print(f"wrote {csv_path} ({time.time() - t0:.0f} s total)")
