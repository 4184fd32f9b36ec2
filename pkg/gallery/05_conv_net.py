# %% [markdown]
# # Two-layer linear convolutional network
#
# The model `x -> <w2, w1 * x>` is linear in `x`. Its effective weight is the
# correlation of the two filters. Trained by gradient descent it drifts
# towards the smallest Fourier-l1 norm, which means robustness to attacks
# bounded per frequency.

# %%
import numpy as np

from maxrobust import ConvParams, LinearParams, TrainConfig, generate, min_norm, train_steepest
from maxrobust.numerics import norm

ds = generate(16, 4, seed=0)
best = min_norm(ds, "fourier_linf")
cfg = TrainConfig(steps=20_000, record_every=2000, margin_norms=("fourier_linf", "l2"))
conv = train_steepest(ConvParams.random(ds.d, seed=0), ds, "gd", cfg)
lin = train_steepest(LinearParams.zeros(ds.d), ds, "gd", cfg)

# %%
print("step   conv   linear   (Fourier-l_inf margin / certified best)")
for s, a, b in zip(conv.steps(), conv.margins("fourier_linf"), lin.margins("fourier_linf")):
    print(f"{s:6d} {a / best.implied_max_eps:.4f} {b / best.implied_max_eps:.4f}")

# %% [markdown]
# The linear model instead reaches the l2 optimum, so its Fourier-l_inf
# margin stalls below the conv net's.

# %%
w = conv.final_params.effective_weight()
w = w / np.min(ds.labels * (ds.features @ w))
print("Fourier-l1 norm of normalized weight:", norm(w, "fourier_l1"), "vs min", best.objective)
