"""Norm-bounded steepest-ascent attacks, including the Fourier-l_inf attack.

A Fourier-l_inf budget bounds the modulus of every unitary DFT coefficient of
the perturbation, either uniformly (``epsilon``) or per frequency
(``eps_mask``, which must be circularly symmetric so the perturbation stays
real).

Two multi-step modes are offered. ``accumulate`` re-derives an
``epsilon``-sized step from the current gradient and adds it, ``m`` times,
without projecting, so for ``m > 1`` the total can leave the budget.
``projected`` (default) projects the running perturbation back onto the
budget after each step and returns the best feasible iterate.
"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .models import loss
from .numerics import NormKind, as_real_vector, dft_matrix, idft, mirror_index, norm
from .optim import project_l1_ball

PROJECTED = "projected"
ACCUMULATE = "accumulate"
# Mode names accepted from configs written against the original interface.
MODE_ALIASES = {"paper_faithful": ACCUMULATE}
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class AttackSpec:
    norm: NormKind
    epsilon: Optional[float] = None
    eps_mask: Optional[np.ndarray] = None
    steps: int = 1
    mode: str = PROJECTED

    def __post_init__(self):
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if (self.epsilon is None) == (self.eps_mask is None):
            raise InvalidInputError("set exactly one of epsilon and eps_mask")
        if self.epsilon is not None and not self.epsilon >= 0:
            raise InvalidInputError("epsilon must be nonnegative")
        if self.eps_mask is not None:
            if self.norm is not NormKind.FOURIER_LINF:
                raise InvalidInputError("eps_mask is only defined for Fourier-l_inf attacks")
            mask = np.array(self.eps_mask, dtype=float)
            if mask.ndim != 1 or np.any(mask < 0) or not np.all(np.isfinite(mask)):
                raise InvalidInputError("eps_mask must be a finite nonnegative vector")
            if not np.array_equal(mask, mask[mirror_index(mask.size)]):
                raise InvalidInputError("eps_mask must be circularly symmetric")
            mask.setflags(write=False)
            object.__setattr__(self, "eps_mask", mask)
        if self.steps < 1:
            raise InvalidInputError("steps must be >= 1")
        object.__setattr__(self, "mode", MODE_ALIASES.get(self.mode, self.mode))
        if self.mode not in (PROJECTED, ACCUMULATE):
            raise InvalidInputError(f"unknown attack mode {self.mode!r}")

    @property
    def budget(self):
        return self.epsilon if self.eps_mask is None else self.eps_mask

    def with_epsilon(self, eps):
        return AttackSpec(self.norm, float(eps), None, self.steps, self.mode)


@dataclass
class Perturbation:
    delta: np.ndarray
    achieved_norm: float


def complex_linf_project(c, r):
    """Rescale entries with modulus above ``r`` (scalar or per-entry) to modulus ``r``."""
    c = np.asarray(c, dtype=complex)
    r = np.broadcast_to(np.asarray(r, dtype=float), c.shape)
    if np.any(r < 0):
        raise InvalidInputError("radius must be nonnegative")
    mod = np.abs(c)
    over = mod > r
    out = c.copy()
    out[over] = c[over] * (r[over] / mod[over])
    return out


def _clean_spectrum(spec):
    """Symmetrize rows of a spectrum and zero numerically-null coefficients."""
    d = spec.shape[-1]
    spec = 0.5 * (spec + np.conj(spec[..., mirror_index(d)]))
    mod = np.abs(spec)
    tiny = mod <= 1e-12 * np.max(mod, axis=-1, keepdims=True)
    spec[tiny] = 0.0
    return spec


def _fourier_linf_dirs(g, budget):
    """Rows of ``idft(budget * phase(dft(g)))`` for a 2-D ``g``."""
    d = g.shape[1]
    f = dft_matrix(d)
    ghat = _clean_spectrum(g @ f.T)
    mod = np.abs(ghat)
    phase = np.divide(ghat, mod, out=np.zeros_like(ghat), where=mod > 0)
    dhat = phase * np.asarray(budget, dtype=float)
    return _rows_idft(dhat)


def _rows_idft(spec):
    return np.array([idft(row) for row in spec])


def fourier_linf_step(g, eps):
    """Maximizer of ``<g, delta>`` over ``|dft(delta)_i| <= eps_i``.

    ``eps`` is a scalar or a circularly symmetric mask. Frequencies where
    ``dft(g)`` vanishes get no budget.
    """
    g = as_real_vector(g, "g")
    eps_arr = np.asarray(eps, dtype=float)
    if eps_arr.ndim == 1:
        if eps_arr.size != g.size or not np.array_equal(eps_arr, eps_arr[mirror_index(g.size)]):
            raise InvalidInputError("eps mask must have length d and be circularly symmetric")
    return _fourier_linf_dirs(g[None, :], eps_arr)[0]


def steepest_ascent(g, kind, budget):
    """Rows of ``argmax <g_row, delta>`` over the ``kind`` ball of size ``budget``."""
    kind = NormKind.parse(kind)
    g = np.atleast_2d(np.asarray(g, dtype=float))
    out = np.zeros_like(g)
    if kind is NormKind.FOURIER_LINF:
        return _fourier_linf_dirs(g, budget)
    eps = float(budget)
    if kind is NormKind.LINF:
        return eps * np.sign(g)
    if kind is NormKind.L2:
        nrm = np.linalg.norm(g, axis=1, keepdims=True)
        return np.divide(eps * g, nrm, out=out, where=nrm > 0)
    if kind is NormKind.L1:
        idx = np.argmax(np.abs(g), axis=1)
        rows = np.arange(g.shape[0])
        out[rows, idx] = eps * np.sign(g[rows, idx])
        return out
    # Fourier-l1: the whole budget on the strongest frequency (and its mirror).
    d = g.shape[1]
    ghat = _clean_spectrum(g @ dft_matrix(d).T)
    mod = np.abs(ghat)
    mirror = mirror_index(d)
    dhat = np.zeros_like(ghat)
    for r in range(g.shape[0]):
        i = int(np.argmax(mod[r]))
        if mod[r, i] == 0:
            continue
        share = eps if mirror[i] == i else eps / 2
        dhat[r, i] = share * ghat[r, i] / mod[r, i]
        dhat[r, mirror[i]] = np.conj(dhat[r, i]) if mirror[i] != i else dhat[r, i]
    return _rows_idft(dhat)


def project_ball(delta, kind, budget):
    """Euclidean projection of each row onto the ``kind`` ball of size ``budget``."""
    kind = NormKind.parse(kind)
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    if kind is NormKind.FOURIER_LINF:
        f = dft_matrix(delta.shape[1])
        spec = complex_linf_project(_clean_spectrum(delta @ f.T), budget)
        return _rows_idft(spec)
    eps = float(budget)
    if eps == 0:
        return np.zeros_like(delta)
    if kind is NormKind.LINF:
        return np.clip(delta, -eps, eps)
    if kind is NormKind.L2:
        nrm = np.linalg.norm(delta, axis=1, keepdims=True)
        return delta * np.minimum(1.0, eps / np.maximum(nrm, 1e-300))
    if kind is NormKind.L1:
        return np.array([project_l1_ball(row, eps) if np.any(row) else row for row in delta])
    f = dft_matrix(delta.shape[1])
    spec = _clean_spectrum(delta @ f.T)
    out = []
    for row in spec:
        mod = np.abs(row)
        new_mod = project_l1_ball(mod, eps) if np.any(mod) else mod
        out.append(np.divide(row * new_mod, mod, out=np.zeros_like(row), where=mod > 0))
    return _rows_idft(np.array(out))


def constraint_value(delta, spec):
    """Norm of ``delta`` in the attack geometry; for masks, the worst ratio ``|dft_i| / mask_i``."""
    if spec.eps_mask is None:
        return norm(delta, spec.norm)
    mod = np.abs(dft_matrix(delta.size) @ delta)
    mask = spec.eps_mask
    if np.any(mod[mask == 0] > FEASIBILITY_TOL):
        return np.inf
    live = mask > 0
    return float(np.max(mod[live] / mask[live], initial=0.0))


def is_feasible(delta, spec, tol=FEASIBILITY_TOL):
    """Whether ``delta`` satisfies the attack budget within ``tol``."""
    delta = as_real_vector(delta, "delta")
    if spec.eps_mask is None:
        return norm(delta, spec.norm) <= spec.epsilon + tol
    mod = np.abs(dft_matrix(delta.size) @ delta)
    return bool(np.all(mod <= spec.eps_mask + tol))


def attack_batch(model, features, labels, spec, loss_kind):
    """Attack every row of ``features``; returns the ``(n, d)`` perturbation matrix.

    The models here are linear in the input, so the input gradient of each
    sample is ``zeta'(y <w, x>) y w`` with ``w`` the effective weight. Every
    supported loss is non-increasing, so ``-y w`` points along the gradient
    whenever it is nonzero; using it directly keeps the attack alive where
    ``zeta'`` underflows (large margins) or vanishes (hinge beyond 1).
    """
    w = model.effective_weight()
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=float).reshape(-1)
    if x.shape[1] != w.size:
        raise InvalidInputError(f"input dimension {x.shape[1]} does not match model d={w.size}")
    if spec.eps_mask is not None and spec.eps_mask.size != w.size:
        raise InvalidInputError("eps_mask length does not match the input dimension")
    bias = getattr(model, "augmented_bias", False)
    if bias and spec.norm.is_fourier:
        raise InvalidInputError("Fourier attacks do not support augmented-bias models")
    free = np.ones(w.size)
    if bias:
        free[-1] = 0.0
    budget = spec.budget

    g = -y[:, None] * (w * free)[None, :]

    def sample_loss(delta):
        return loss(loss_kind, y * ((x + delta) @ w))

    delta = np.zeros_like(x)
    if spec.mode == ACCUMULATE:
        for _ in range(spec.steps):
            delta = delta + steepest_ascent(g, spec.norm, budget)
        return delta
    best, best_loss = delta.copy(), sample_loss(delta)
    for _ in range(spec.steps):
        delta = project_ball(delta + steepest_ascent(g, spec.norm, budget), spec.norm, budget)
        cur = sample_loss(delta)
        better = cur > best_loss
        best[better], best_loss[better] = delta[better], cur[better]
    return best


def attack(model, x, y, spec, loss_kind="exponential"):
    """Steepest-ascent attack on one sample; returns a :class:`Perturbation`."""
    x = as_real_vector(x, "x")
    delta = attack_batch(model, x[None, :], [y], spec, loss_kind)[0]
    return Perturbation(delta, constraint_value(delta, spec) if spec.eps_mask is not None
                        else norm(delta, spec.norm))


def band_mask(d, band, eps, cutoff):
    """Budget ``eps`` on the low or high circular-frequency band, zero elsewhere.

    Frequency ``i`` has circular index ``min(i, d - i)``; the low band is
    ``index < cutoff * d / 2`` and the high band is the rest.
    """
    if not 0 < cutoff < 1:
        raise InvalidInputError("cutoff must lie in (0, 1)")
    if band not in ("low", "high"):
        raise InvalidInputError("band must be 'low' or 'high'")
    idx = np.arange(d)
    freq = np.minimum(idx, d - idx)
    low = freq < cutoff * d / 2
    return np.where(low if band == "low" else ~low, float(eps), 0.0)


def write_report(path, rows):
    """Write attack-report rows (dicts) with the fixed CSV schema."""
    cols = ["sample_index", "norm_kind", "epsilon", "steps", "loss_before", "loss_after",
            "flipped", "achieved_norm"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in cols})
    return Path(path)


def attack_rows(model, ds, spec, loss_kind="exponential"):
    """Attack every sample of ``ds`` and build report rows."""
    deltas = attack_batch(model, ds.features, ds.labels, spec, loss_kind)
    w = model.effective_weight()
    eps_label = spec.epsilon if spec.eps_mask is None else float(np.max(spec.eps_mask))
    rows = []
    for i, (x, y, delta) in enumerate(zip(ds.features, ds.labels, deltas)):
        z0, z1 = y * (x @ w), y * ((x + delta) @ w)
        rows.append({
            "sample_index": i,
            "norm_kind": spec.norm.value,
            "epsilon": repr(float(eps_label)),
            "steps": spec.steps,
            "loss_before": repr(float(loss(loss_kind, z0))),
            "loss_after": repr(float(loss(loss_kind, z1))),
            "flipped": int((z0 > 0) != (z1 > 0)),
            "achieved_norm": repr(constraint_value(delta, spec)),
        })
    return rows


__all__ = [
    "AttackSpec", "Perturbation", "attack", "attack_batch", "attack_rows", "band_mask",
    "complex_linf_project", "constraint_value", "fourier_linf_step", "is_feasible", "project_ball",
    "steepest_ascent", "write_report", "PROJECTED", "ACCUMULATE",
]
