# %% [markdown]
# # When the sweep crawls
#
# On `problem6` the upper end of the interval (0, 1/2) is a point where the
# dual optimal set jumps. The certified radius shrinks at the same rate as
# the distance to the end, so each step covers only a fraction of the gap.

# %%
import time

from socopart.auxnlp import Sense
from socopart.instance_io import load_bundled
from socopart.intervals import run_direction

inst = load_bundled("problem6")
t0 = time.perf_counter()
tr = run_direction(inst, 0.25, Sense.MAX, max_iter=200)
print(f"200 steps in {time.perf_counter() - t0:.1f} s")

# %%
for k in (0, 1, 2, 5, 10, 20, 50, 100, 200):
    r = tr.rows[k]
    print(f"k={k:3d}  beta_k={r.value:.6f}  gap to 1/2={0.5 - r.value:.2e}  "
          f"radius={r.delta:.2e}")

# %% [markdown]
# The gap decays roughly like 1/k rather than geometrically, so a fixed
# iteration budget stops short of 1/2.
