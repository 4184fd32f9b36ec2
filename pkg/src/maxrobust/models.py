"""Linear and two-layer circular-convolution classifiers, losses and risk.

Both model families are linear in the input, so every model exposes an
``effective_weight`` and all margin/attack code works on that vector.
Optimizers see parameters as one flat vector (``to_flat``/``with_flat``).
"""
import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import DatasetFormatError, InvalidInputError
from .numerics import NormKind, as_real_vector, circ_conv, dual, flip, norm


class LossKind(enum.Enum):
    EXPONENTIAL = "exponential"
    LOGISTIC = "logistic"
    HINGE = "hinge"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidInputError(f"unknown loss {value!r}") from None


@dataclass(frozen=True)
class LinearParams:
    """Weights of ``x -> <w, x>``.

    When ``augmented_bias`` is set the last coordinate multiplies the
    constant-1 feature appended by :func:`maxrobust.synthdata.augment`;
    attacks leave that coordinate alone.
    """

    w: np.ndarray
    augmented_bias: bool = False

    def __post_init__(self):
        object.__setattr__(self, "w", as_real_vector(self.w, "w").copy())

    kind = "linear"

    @property
    def d(self):
        return self.w.size

    def effective_weight(self):
        return self.w

    def to_flat(self):
        return self.w.copy()

    def with_flat(self, theta):
        return LinearParams(theta, self.augmented_bias)

    @classmethod
    def zeros(cls, d, augmented_bias=False):
        return cls(np.zeros(d), augmented_bias)

    @classmethod
    def random(cls, d, seed=0, scale=1.0, augmented_bias=False):
        return cls(scale * np.random.default_rng(seed).standard_normal(d), augmented_bias)


@dataclass(frozen=True)
class ConvParams:
    """Two-layer linear conv net ``x -> <w2, w1 * x>`` with circular ``*``."""

    w1: np.ndarray
    w2: np.ndarray

    kind = "conv2"
    augmented_bias = False

    def __post_init__(self):
        w1 = as_real_vector(self.w1, "w1").copy()
        w2 = as_real_vector(self.w2, "w2").copy()
        if w1.size != w2.size:
            raise InvalidInputError("w1 and w2 must have equal length")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def d(self):
        return self.w1.size

    def effective_weight(self):
        return effective_weight(self)

    def to_flat(self):
        return np.concatenate([self.w1, self.w2])

    def with_flat(self, theta):
        d = self.d
        return ConvParams(theta[:d], theta[d:])

    @classmethod
    def random(cls, d, seed=0, scale=None):
        """Gaussian init. The all-zero point is a saddle, so conv nets start here."""
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(d) if scale is None else scale
        return cls(scale * rng.standard_normal(d), scale * rng.standard_normal(d))


def _check_dim(model, x):
    if x.shape[-1] != model.d:
        raise InvalidInputError(f"input dimension {x.shape[-1]} does not match model d={model.d}")


def forward_linear(p, x):
    x = as_real_vector(x, "x")
    _check_dim(p, x)
    return float(p.w @ x)


def forward_conv(p, x):
    x = as_real_vector(x, "x")
    _check_dim(p, x)
    return float(p.w2 @ circ_conv(p.w1, x))


def forward(model, x):
    if isinstance(model, ConvParams):
        return forward_conv(model, x)
    return forward_linear(model, x)


def effective_weight(p):
    """Vector ``w_eff`` with ``<w_eff, x> == forward_conv(p, x)`` for all ``x``.

    Expanding the double sum gives ``w_eff[j] = d^{-1/2} sum_i w2[i] w1[i - j]``,
    i.e. ``circ_conv(flip(w1), w2)``, whose spectrum is
    ``conj(dft(w1)) * dft(w2)``.
    """
    if isinstance(p, LinearParams):
        return p.w
    return circ_conv(flip(p.w1), p.w2)


def loss(kind, z):
    kind = LossKind.parse(kind)
    z = np.asarray(z, dtype=float)
    if kind is LossKind.EXPONENTIAL:
        with np.errstate(over="ignore"):  # inf is the right answer past ~-709
            out = np.exp(-z)
    elif kind is LossKind.LOGISTIC:
        out = np.logaddexp(0.0, -z)
    else:
        out = np.maximum(0.0, 1.0 - z)
    return out if out.ndim else float(out)


def loss_deriv(kind, z):
    """Derivative of the loss; for hinge the subgradient ``-1`` on ``z < 1``."""
    kind = LossKind.parse(kind)
    z = np.asarray(z, dtype=float)
    if kind is LossKind.EXPONENTIAL:
        out = -np.exp(-z)
    elif kind is LossKind.LOGISTIC:
        out = -expit(-z)
    else:
        out = np.where(z < 1.0, -1.0, 0.0)
    return out if out.ndim else float(out)


def _batch(ds_or_x, labels=None):
    if labels is None:
        return ds_or_x.features, ds_or_x.labels
    return np.asarray(ds_or_x, dtype=float), np.asarray(labels, dtype=float)


def log_risk_and_direction(model, features, labels, kind):
    """Return ``(log_risk, u)`` with ``risk_grad = exp(log_risk) * u``.

    ``u`` is the gradient with respect to the effective weight divided by the
    risk. For the exponential loss it is built from softmax weights, so it
    stays finite when individual ``exp(-z)`` terms would under/overflow.
    Returns ``u = 0`` if the risk is exactly zero (hinge).
    """
    kind = LossKind.parse(kind)
    w = model.effective_weight()
    z = labels * (features @ w)
    n = z.size
    if kind is LossKind.EXPONENTIAL:
        top = np.max(-z)
        shifted = np.exp(-z - top)
        total = shifted.sum()
        lse = top + np.log(total)
        weights = shifted / total
        log_r = lse - np.log(n)
    else:
        vals = loss(kind, z)
        r = float(np.mean(vals))
        if r == 0.0:
            return -np.inf, np.zeros_like(w)
        weights = -loss_deriv(kind, z) / (n * r)
        log_r = np.log(r)
    return float(log_r), -(weights * labels) @ features


def effective_to_param_grad(model, g_eff):
    """Chain rule from a gradient w.r.t. ``effective_weight`` to a flat parameter gradient."""
    if isinstance(model, LinearParams):
        return g_eff
    g1 = circ_conv(flip(g_eff), model.w2)
    g2 = circ_conv(model.w1, g_eff)
    return np.concatenate([g1, g2])


def risk(model, ds, kind, labels=None):
    """Mean loss of ``y_i phi(x_i)``."""
    x, y = _batch(ds, labels)
    _check_dim(model, x)
    log_r, _ = log_risk_and_direction(model, x, y, kind)
    with np.errstate(over="ignore"):
        return float(np.exp(log_r))


def risk_grad(model, ds, kind, labels=None):
    """Gradient of :func:`risk` with respect to all parameters (flat vector)."""
    x, y = _batch(ds, labels)
    _check_dim(model, x)
    log_r, u = log_risk_and_direction(model, x, y, kind)
    return effective_to_param_grad(model, np.exp(log_r) * u)


def risk_grad_x(model, x, y, kind):
    """Gradient of the single-sample loss ``zeta(y phi(x))`` w.r.t. ``x``."""
    x = as_real_vector(x, "x")
    _check_dim(model, x)
    w = model.effective_weight()
    return loss_deriv(kind, y * float(w @ x)) * y * w


def margin(w, ds, attack_norm):
    """Normalized margin ``min_i y_i <w, x_i> / ||w||_*`` under the attack's dual norm.

    ``w`` may be a weight vector or a model. For a model with an augmented
    bias the bias coordinate is excluded from the norm, since attacks do not
    perturb the constant feature.
    """
    attack_norm = NormKind.parse(attack_norm)
    skip_bias = getattr(w, "augmented_bias", False)
    if hasattr(w, "effective_weight"):
        w = w.effective_weight()
    w = as_real_vector(w, "w")
    if w.shape != (ds.d,):
        raise InvalidInputError(f"w has length {w.size}, dataset has d={ds.d}")
    scale = norm(w[:-1] if skip_bias else w, dual(attack_norm))
    if scale == 0.0:
        raise InvalidInputError("margin is undefined for zero weights")
    return float(np.min(ds.labels * (ds.features @ w)) / scale)


def save_model(model, path):
    if isinstance(model, LinearParams):
        doc = {"kind": "linear", "d": model.d, "augmented_bias": model.augmented_bias,
               "w": model.w.tolist()}
    else:
        doc = {"kind": "conv2", "d": model.d, "augmented_bias": False,
               "w1": model.w1.tolist(), "w2": model.w2.tolist()}
    Path(path).write_text(json.dumps(doc))
    return Path(path)


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
        if doc["kind"] == "linear":
            model = LinearParams(doc["w"], bool(doc.get("augmented_bias", False)))
        elif doc["kind"] == "conv2":
            model = ConvParams(doc["w1"], doc["w2"])
        else:
            raise DatasetFormatError(f"unknown model kind {doc['kind']!r}")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetFormatError(f"{path}: malformed checkpoint ({exc})") from exc
    if model.d != int(doc["d"]):
        raise DatasetFormatError(f"{path}: declared d={doc['d']} but weights have d={model.d}")
    return model
