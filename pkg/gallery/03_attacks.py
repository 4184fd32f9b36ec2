# %% [markdown]
# # Attacks and the two routes to the maximal robust epsilon
#
# For a linear model the worst perturbation of size eps lowers every margin
# `y <w, x>` by exactly `eps * ||w||_*`. So the largest budget a model
# survives can be read off in closed form (the normalized margin) or found by
# attacking it on a grid of budgets. The two should agree to a grid step.

# %%
import numpy as np

from maxrobust import AttackSpec, LinearParams, generate, margin, robust_report
from maxrobust.attack import attack, band_mask, is_feasible
from maxrobust.numerics import dft

ds = generate(16, 4, seed=3)
model = LinearParams(ds.ground_truth)
for k in ("l1", "l2", "linf", "fourier_linf"):
    rep = robust_report(model, ds, k, np.arange(0, 3, 1e-3))
    print(f"{k:13s} attack route {rep.max_eps:.4f}   closed form {margin(model, ds, k):.4f}")

# %% [markdown]
# A single attack step is the exact maximizer for a linear model: its inner
# product with the gradient equals `eps * ||g||_*`.

# %%
x, y = ds.features[0], ds.labels[0]
for k in ("l1", "l2", "linf", "fourier_linf"):
    p = attack(model, x, y, AttackSpec(k, 0.5))
    print(k, "achieved norm", round(p.achieved_norm, 12), "new score", y * (x + p.delta) @ model.w)

# %% [markdown]
# Band-limited Fourier attacks put a per-frequency budget on the spectrum.
# Here only the high half of the frequencies may move.

# %%
spec = AttackSpec("fourier_linf", eps_mask=band_mask(16, "high", 45 / 255, 0.5))
p = attack(model, x, y, spec)
print("feasible:", is_feasible(p.delta, spec))
print("|dft(delta)|:", np.round(np.abs(dft(p.delta)), 4))
