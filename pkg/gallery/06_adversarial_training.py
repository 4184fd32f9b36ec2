# %% [markdown]
# # Adversarial training and its budget
#
# Training on worst-case perturbed inputs of size eps pushes the model towards
# an eps-robust solution. Gradient descent on its own favors l2; with eps at
# the certified l_inf maximum its l_inf margin climbs towards the optimum
# (slowly, since that problem is degenerate). Smaller budgets settle lower.

# %%
import numpy as np

from maxrobust import LinearParams, TrainConfig, adversarial_train, generate, min_norm, train_steepest

ds = generate(32, 8, seed=1)
star = min_norm(ds, "linf").implied_max_eps
cfg = TrainConfig(steps=20_000, record_every=20_000)
for frac in (0.0, 0.25, 0.5, 1.0):
    traj = adversarial_train(ds, frac * star, "linf", cfg)
    print(f"eps = {frac:4.2f} eps*   l_inf margin / eps* = {traj.margins()[-1] / star:.4f}")

# %% [markdown]
# With eps = 0 adversarial training is plain gradient descent, bit for bit.

# %%
cfg = TrainConfig(steps=500, record_every=50, margin_norms=("linf",))
a = adversarial_train(ds, 0.0, "linf", cfg).final_params.w
b = train_steepest(LinearParams.zeros(ds.d), ds, "gd", cfg).final_params.w
print("identical:", np.array_equal(a, b))
