# %% [markdown]
# # Optimal partitions along a parameter
#
# `problem5` perturbs the objective of a two-block second-order cone program
# by `eps * cbar`. We solve it on a grid, classify every block and watch the
# partition change.

# %%
import numpy as np

from socopart.instance_io import load_bundled
from socopart.intervals import grid_scan
from socopart.reporting import emit_value_function

inst = load_bundled("problem5")
print(inst.structure.dims, "blocks,", inst.m, "equality rows")

# %%
scan = grid_scan(inst, -0.5, 1.5, 9)
for p in scan.points:
    print(f"eps = {p.eps:5.2f}  partition {p.label}")

# %% [markdown]
# The second block is interior for eps in (0, 1) and zero beyond 1. At 0 and
# 1 themselves it sits at the origin on one side, which is what puts it into
# a T set: no strictly complementary solution exists there.

# %%
for a, b in scan.changes:
    print(f"partition changes somewhere in [{a:.2f}, {b:.2f}]")

# %% [markdown]
# The optimal value function is concave; the samples confirm it.

# %%
vf = emit_value_function(inst, np.linspace(-0.5, 1.5, 21))
print(vf.table().to_text())
print("concave:", vf.concave)
