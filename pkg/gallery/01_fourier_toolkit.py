# %% [markdown]
# # Unitary DFT and circular convolution
#
# All Fourier quantities in the package use the unitary DFT, so Parseval holds
# exactly and the Fourier-l1 and Fourier-l_inf norms are a dual pair.

# %%
import numpy as np

from maxrobust.numerics import circ_conv, dft, dft_matrix, idft, norm

rng = np.random.default_rng(0)
d = 8
f = dft_matrix(d)
print("max |F^H F - I| =", np.abs(f.conj().T @ f - np.eye(d)).max())

# %% [markdown]
# A real signal has a Hermitian spectrum, and `idft` refuses spectra that are
# not (up to a tiny tolerance), since they would not come back real.

# %%
x = rng.standard_normal(d)
c = dft(x)
print("c[k] == conj(c[-k]):", np.allclose(c[1:], np.conj(c[1:][::-1])))
print("round trip error:", np.abs(idft(c) - x).max())

# %% [markdown]
# Convolution becomes an elementwise product of spectra.

# %%
w = rng.standard_normal(d)
lhs = dft(circ_conv(w, x))
rhs = dft(w) * dft(x)
print("convolution theorem error:", np.abs(lhs - rhs).max())

# %%
# Dual norms: |<w, x>| <= ||w||_F1 * ||x||_Finf
print(abs(w @ x), "<=", norm(w, "fourier_l1") * norm(x, "fourier_linf"))
