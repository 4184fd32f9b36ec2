# %% [markdown]
# # Which optimizer is robust to which attack
#
# On separable data the exponential risk has no minimizer and descent drives
# the weights to infinity. The direction they settle on depends on the
# geometry of the steepest-descent step. Coordinate descent ends up with the
# largest margin against l_inf attacks, gradient descent against l2 and sign
# gradient descent against l1.

# %%
import numpy as np

from maxrobust import LinearParams, TrainConfig, generate, min_norm, train_steepest

ds = generate(32, 8, seed=0)
norms = ("linf", "l2", "l1")
best = {k: min_norm(ds, k).implied_max_eps for k in norms}
print("certified maximal eps:", {k: round(v, 4) for k, v in best.items()})

# %%
cfg = TrainConfig(steps=5000, record_every=500, margin_norms=norms)
runs = {m: train_steepest(LinearParams.zeros(ds.d), ds, m, cfg) for m in ("cd", "gd", "signgd")}

print(f"{'':8s}" + "".join(f"{k:>9s}" for k in norms))
for m, traj in runs.items():
    print(f"{m:8s}" + "".join(f"{traj.margins(k)[-1] / best[k]:9.3f}" for k in norms))

# %% [markdown]
# Each row peaks in its own column, close to 1. The margin is normalized, so
# it is unaffected by the growing scale of the weights.

# %%
traj = runs["gd"]
print(np.column_stack([traj.steps(), traj.margins("l2") / best["l2"]])[::2])
