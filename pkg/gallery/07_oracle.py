# %% [markdown]
# # Certified maximal robustness
#
# The maximally robust linear classifier solves `min ||w|| s.t. y_i <w, x_i> >= 1`
# with the norm dual to the attack. l1 and l_inf problems are LPs, solved
# here by a dense simplex; l2 and Fourier-l1 use first-order methods. Every
# answer ships with primal and dual evidence.

# %%
import numpy as np

from maxrobust import Dataset, InfeasibleError, check_certificate, generate, min_norm

ds = generate(12, 5, seed=2)
for k in ("l1", "l2", "linf", "fourier_linf"):
    cert = min_norm(ds, k)
    chk = check_certificate(cert, ds)
    print(f"{k:13s} eps*={cert.implied_max_eps:.6f} solver={cert.solver:24s} "
          f"gap={chk.duality_gap:.1e} passed={chk.passed}")

# %% [markdown]
# Non-separable data has no robust classifier at all. The oracle returns a
# Farkas ray instead: a convex combination of signed samples summing to zero.

# %%
xor = Dataset(np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]),
              np.array([1.0, 1.0, -1.0, -1.0]))
try:
    min_norm(xor, "l2")
except InfeasibleError as exc:
    print(exc)
    print("ray:", exc.ray, " combination:", exc.ray @ xor.signed_features)
