"""Vector norms, the unitary DFT and circular convolution.

All transforms are dense O(d^2) matrix applications with unitary scaling
``1/sqrt(d)``. Indices are 0-based and wrapped modulo ``d``.
"""
import enum
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, SymmetryError

#: Absolute tolerance on imaginary residue discarded by :func:`idft`.
HERMITIAN_TOL = 1e-9


class NormKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    FOURIER_L1 = "fourier_l1"
    FOURIER_LINF = "fourier_linf"

    @property
    def is_fourier(self):
        return self in (NormKind.FOURIER_L1, NormKind.FOURIER_LINF)

    @classmethod
    def parse(cls, value):
        """Accept a member, its value, or a loose spelling like ``'Linf'``."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"l_inf": "linf", "inf": "linf", "fourier_l_inf": "fourier_linf",
                   "fl1": "fourier_l1", "flinf": "fourier_linf"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise InvalidInputError(f"unknown norm kind {value!r}") from None


_DUAL = {
    NormKind.L1: NormKind.LINF,
    NormKind.LINF: NormKind.L1,
    NormKind.L2: NormKind.L2,
    NormKind.FOURIER_L1: NormKind.FOURIER_LINF,
    NormKind.FOURIER_LINF: NormKind.FOURIER_L1,
}


def dual(kind):
    """Return the dual norm kind."""
    return _DUAL[NormKind.parse(kind)]


def as_real_vector(v, name="v"):
    """Validate and return ``v`` as a 1-D finite float array."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return v


@lru_cache(maxsize=64)
def _dft_matrix(d):
    # Reduce the exponent mod d before scaling so large i*k keeps full precision.
    ik = np.outer(np.arange(d), np.arange(d)) % d
    mat = np.exp(-2j * np.pi * ik / d) / np.sqrt(d)
    mat.setflags(write=False)
    return mat


def dft_matrix(d):
    """Unitary DFT matrix ``F[i, k] = exp(-2 pi j i k / d) / sqrt(d)`` (read-only)."""
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    return _dft_matrix(int(d))


def dft(v):
    """Unitary DFT of a real vector."""
    v = as_real_vector(v)
    return dft_matrix(v.size) @ v


def idft(c, tol=HERMITIAN_TOL):
    """Inverse unitary DFT of a Hermitian-symmetric spectrum, returned as real.

    Raises :class:`SymmetryError` if the imaginary residue of the inverse
    exceeds ``tol``, i.e. ``c`` is not the spectrum of a real vector.
    """
    c = np.asarray(c, dtype=complex)
    if c.ndim != 1 or c.size == 0:
        raise InvalidInputError("spectrum must be a nonempty 1-D vector")
    out = dft_matrix(c.size).conj() @ c
    resid = np.max(np.abs(out.imag))
    if resid > tol:
        raise SymmetryError(f"spectrum is not Hermitian: imaginary residue {resid:.3g} > {tol:g}")
    return out.real.copy()


def is_hermitian(c, tol=1e-12):
    """Check ``c[i] == conj(c[-i mod d])`` within ``tol``."""
    c = np.asarray(c, dtype=complex)
    mirrored = np.conj(c[(-np.arange(c.size)) % c.size])
    return bool(np.max(np.abs(c - mirrored), initial=0.0) <= tol)


def mirror_index(d):
    """Index array mapping frequency ``i`` to ``-i mod d``."""
    return (-np.arange(d)) % d


def dft2(a):
    """Separable unitary 2-D DFT (rows, then columns) of a real array."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise InvalidInputError("dft2 expects a nonempty 2-D array")
    rows, cols = a.shape
    return dft_matrix(rows) @ a @ dft_matrix(cols).T


def idft2(c, tol=HERMITIAN_TOL):
    """Inverse of :func:`dft2`; the result must be real within ``tol``."""
    c = np.asarray(c, dtype=complex)
    rows, cols = c.shape
    out = dft_matrix(rows).conj() @ c @ dft_matrix(cols).conj().T
    resid = np.max(np.abs(out.imag))
    if resid > tol:
        raise SymmetryError(f"2-D spectrum is not Hermitian: imaginary residue {resid:.3g}")
    return out.real.copy()


def norm(v, kind):
    """Norm of a real vector; Fourier kinds are norms of ``dft(v)``."""
    kind = NormKind.parse(kind)
    v = as_real_vector(v)
    if kind is NormKind.L1:
        return float(np.sum(np.abs(v)))
    if kind is NormKind.L2:
        return float(np.linalg.norm(v))
    if kind is NormKind.LINF:
        return float(np.max(np.abs(v)))
    spec = np.abs(dft(v))
    if kind is NormKind.FOURIER_L1:
        return float(np.sum(spec))
    return float(np.max(spec))


def complex_inner(u, v):
    """``<u, v> = u^T conj(v)`` for complex vectors."""
    return complex(np.dot(np.asarray(u), np.conj(np.asarray(v))))


@lru_cache(maxsize=64)
def _conv_index(d):
    # idx[i, m] = (i - m) mod d, so out[i] = sum_m w[m] x[i - m].
    idx = (np.arange(d)[:, None] - np.arange(d)[None, :]) % d
    idx.setflags(write=False)
    return idx


def circ_conv(w, x):
    """Circular convolution ``[w * x]_i = d^{-1/2} sum_k w[-k] x[i + k]``.

    With this scaling the unitary DFT diagonalizes it:
    ``dft(circ_conv(w, x)) == dft(w) * dft(x)``.
    """
    w = as_real_vector(w, "w")
    x = as_real_vector(x, "x")
    if w.size != x.size:
        raise InvalidInputError(f"length mismatch: {w.size} vs {x.size}")
    d = w.size
    return x[_conv_index(d)] @ w / np.sqrt(d)


def flip(v):
    """Circular reversal ``v[-i mod d]``."""
    v = np.asarray(v)
    return v[mirror_index(v.size)]
