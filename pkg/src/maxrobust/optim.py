"""Steepest-descent and proximal-gradient training for linear classifiers.

Steepest descent with respect to a norm ``||.||`` takes the step
``argmin_v <g, v> + 0.5 ||v||^2``. Geometry and the attack it defends against
are dual: coordinate descent (l1 geometry) gives l_inf robustness, gradient
descent (l2) gives l2, sign gradient descent (l_inf) gives l1.
"""
import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import InvalidInputError, StepSizeError
from .models import (
    ConvParams,
    LinearParams,
    LossKind,
    effective_to_param_grad,
    log_risk_and_direction,
    margin,
)
from .numerics import NormKind, as_real_vector, dft, dual, idft, norm


class SteepestKind(enum.Enum):
    COORDINATE_DESCENT = "cd"
    GRADIENT_DESCENT = "gd"
    SIGN_GRADIENT_DESCENT = "signgd"

    @property
    def geometry(self):
        """Norm defining the step."""
        return _GEOMETRY[self]

    @property
    def robust_against(self):
        """Attack norm whose maximally robust classifier this optimizer reaches."""
        return dual(self.geometry)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "").replace("+ls", ""))
        except ValueError:
            raise InvalidInputError(f"unknown steepest-descent kind {value!r}") from None


_GEOMETRY = {
    SteepestKind.COORDINATE_DESCENT: NormKind.L1,
    SteepestKind.GRADIENT_DESCENT: NormKind.L2,
    SteepestKind.SIGN_GRADIENT_DESCENT: NormKind.LINF,
}


@dataclass(frozen=True)
class LineSearch:
    """Backtracking (Armijo) line search: halve from ``max_step`` until sufficient decrease.

    ``max_step=None`` picks ``1 / B**2`` with ``B = max_i ||x_i||`` measured in
    the dual of the optimizer's geometry, the scale under which steepest
    descent keeps its max-margin bias. Larger ceilings converge to worse
    margins for sign and coordinate descent.
    """

    max_step: Optional[float] = None
    armijo: float = 1e-4
    shrink: float = 0.5
    max_halvings: int = 80

    def __post_init__(self):
        if self.max_step is not None and not self.max_step > 0:
            raise InvalidInputError("line search max_step must be positive")

    def resolve(self, features, geometry):
        if self.max_step is not None:
            return self.max_step
        return auto_max_step(features, geometry)


def auto_max_step(features, geometry):
    """``1 / max_i ||x_i||_*^2`` for the dual of ``geometry``."""
    b = max(norm(x, dual(geometry)) for x in features)
    return 1.0 / b**2


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 10_000
    step_size: Union[float, LineSearch] = field(default_factory=LineSearch)
    loss: LossKind = LossKind.EXPONENTIAL
    record_every: int = 100
    # Extra attack norms whose margins are recorded on every stored iterate.
    margin_norms: tuple = ()
    # Stop early when the relative objective decrease falls below this (proximal runs only).
    rel_tol: float = 1e-12
    # Steepest descent only. True (or "risk"): eta_t = gamma_t / L(w_t) with gamma_t <= max_step.
    # "gradient": eta_t = gamma_t / ||grad L(w_t)||_*, a step of length gamma_t in the geometry,
    # which keeps moving when the risk plateaus (adversarial training at the maximal budget).
    # False: plain steps, which stall once the risk underflows.
    normalized: Union[bool, str] = True

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidInputError("steps must be >= 1")
        if self.record_every < 1:
            raise InvalidInputError("record_every must be >= 1")
        if not isinstance(self.step_size, LineSearch) and not self.step_size > 0:
            raise InvalidInputError("step_size must be positive")
        object.__setattr__(self, "loss", LossKind.parse(self.loss))
        if self.normalized == "risk":
            object.__setattr__(self, "normalized", True)
        if self.normalized not in (True, False, "gradient"):
            raise InvalidInputError("normalized must be True, False, 'risk' or 'gradient'")
        object.__setattr__(self, "margin_norms", tuple(NormKind.parse(k) for k in self.margin_norms))


@dataclass
class TrajectoryPoint:
    step: int
    params: object
    risk: float
    direction: np.ndarray
    margins: dict


@dataclass
class Trajectory:
    points: list = field(default_factory=list)
    # Attack norm of the headline margin (matched to the optimizer's geometry).
    primary_norm: Optional[NormKind] = None

    @property
    def final(self):
        return self.points[-1]

    @property
    def final_params(self):
        return self.points[-1].params

    def margins(self, kind=None):
        kind = self.primary_norm if kind is None else NormKind.parse(kind)
        return np.array([p.margins[kind] for p in self.points])

    def steps(self):
        return np.array([p.step for p in self.points])

    def to_csv(self, path, kind=None):
        """Write ``step, risk, margin, norm_of_w`` rows (norm is l2 of the effective weight)."""
        kind = self.primary_norm if kind is None else NormKind.parse(kind)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "risk", "margin", "norm_of_w"])
            for p in self.points:
                w = p.params.effective_weight()
                writer.writerow([p.step, repr(p.risk), repr(p.margins[kind]), repr(float(np.linalg.norm(w)))])
        return Path(path)


def steepest_step(g, kind):
    """Unnormalized steepest-descent step ``argmin_v <g, v> + 0.5 ||v||^2``."""
    kind = SteepestKind.parse(kind)
    g = as_real_vector(g, "gradient")
    if kind is SteepestKind.GRADIENT_DESCENT:
        return -g
    if kind is SteepestKind.SIGN_GRADIENT_DESCENT:
        return -np.sum(np.abs(g)) * np.sign(g)
    step = np.zeros_like(g)
    i = int(np.argmax(np.abs(g)))  # first maximizer on ties
    step[i] = -g[i]
    return step


_LOG_MAX = math.log(np.finfo(float).max)


def _check_finite(log_r, step):
    if math.isnan(log_r) or log_r >= _LOG_MAX:
        raise StepSizeError(f"risk became non-finite after step {step}; reduce the step size", step - 1)


def _record(traj, step, model, log_r, ds, norms):
    w = model.effective_weight()
    nrm = float(np.linalg.norm(w))
    if nrm == 0.0:
        return
    with np.errstate(over="ignore"):
        r = float(np.exp(log_r))
    traj.points.append(TrajectoryPoint(step, model, r, w / nrm, {k: margin(model, ds, k) for k in norms}))


def _descent(model, ds, kind, cfg, batch_features=None):
    """Shared loop for ERM and adversarial training.

    ``batch_features(model)`` returns the feature matrix the step is taken on
    (perturbed inputs for adversarial training); ``None`` means clean data.
    """
    kind = SteepestKind.parse(kind)
    if isinstance(model, ConvParams) and kind is not SteepestKind.GRADIENT_DESCENT:
        raise InvalidInputError("conv models are trained with gradient descent only")
    primary = NormKind.FOURIER_LINF if isinstance(model, ConvParams) else kind.robust_against
    norms = (primary,) + tuple(k for k in cfg.margin_norms if k is not primary)
    traj = Trajectory(primary_norm=primary)
    labels = ds.labels
    theta = model.to_flat()
    if isinstance(cfg.step_size, LineSearch):
        max_step = cfg.step_size.resolve(ds.features, kind.geometry)

    def evaluate(m, feats):
        log_r, u = log_risk_and_direction(m, feats, labels, cfg.loss)
        return log_r, effective_to_param_grad(m, u)

    feats = ds.features if batch_features is None else batch_features(model)
    log_r, g_unit = evaluate(model, feats)
    _check_finite(log_r, 0)
    _record(traj, 0, model, log_r, ds, norms)
    for t in range(1, cfg.steps + 1):
        # risk gradient = f * g_unit and every steepest step is 1-homogeneous,
        # so the step is f * steepest_step(g_unit), divided by f when normalized.
        np.nan_to_num(g_unit, copy=False)
        step_dir = steepest_step(g_unit, kind) if np.any(g_unit) else np.zeros_like(g_unit)
        if cfg.normalized == "gradient":
            g_norm = norm(g_unit, dual(kind.geometry))
            f = 1.0 / g_norm if g_norm > 0 else 0.0
        else:
            f = 1.0 if cfg.normalized else math.exp(log_r)
        if isinstance(cfg.step_size, LineSearch):
            ls = cfg.step_size
            slope = float(g_unit @ step_dir)  # <= 0
            gamma = max_step
            for _ in range(ls.max_halvings):
                trial = model.with_flat(theta + gamma * f * step_dir)
                trial_log_r, _ = log_risk_and_direction(trial, feats, labels, cfg.loss)
                bound = 1.0 + ls.armijo * gamma * f * slope
                if bound > 0 and trial_log_r <= log_r + math.log(bound):
                    break
                gamma *= ls.shrink
            else:
                gamma = 0.0
        else:
            gamma = cfg.step_size
        theta = theta + gamma * f * step_dir
        if not np.all(np.isfinite(theta)):
            raise StepSizeError(f"parameters overflowed at step {t}; reduce the step size", t - 1)
        model = model.with_flat(theta)
        if batch_features is not None:
            feats = batch_features(model)
        log_r, g_unit = evaluate(model, feats)
        _check_finite(log_r, t)
        if t % cfg.record_every == 0 or t == cfg.steps:
            _record(traj, t, model, log_r, ds, norms)
    return traj


def train_steepest(model, ds, kind, cfg=None):
    """Minimize the empirical risk with steepest descent; return the recorded trajectory.

    Margins are recorded under the attack norm matched to the geometry
    (Fourier-l_inf for conv models) plus any ``cfg.margin_norms``.
    """
    return _descent(model, ds, kind, cfg or TrainConfig())


def project_l1_ball(v, r):
    """Euclidean projection onto ``{u : ||u||_1 <= r}`` by sorted thresholding."""
    v = as_real_vector(v)
    if not r > 0:
        raise InvalidInputError("radius must be positive")
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    mu = np.sort(a)[::-1]
    cums = np.cumsum(mu) - r
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(mu - cums / ks > 0)[0][-1]
    tau = cums[rho] / (rho + 1)
    return np.sign(v) * np.maximum(a - tau, 0.0)


def _complex_shrink(c, t):
    mod = np.abs(c)
    scale = np.where(mod > t, 1.0 - t / np.where(mod > 0, mod, 1.0), 0.0)
    return c * scale


def prox(kind, t, v):
    """``argmin_u t ||u||_kind + 0.5 ||u - v||_2^2``."""
    kind = NormKind.parse(kind)
    v = as_real_vector(v)
    if not t > 0:
        raise InvalidInputError("prox parameter must be positive")
    if kind is NormKind.L1:
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
    if kind is NormKind.L2:
        nv = np.linalg.norm(v)
        return v * max(0.0, 1.0 - t / nv) if nv > 0 else np.zeros_like(v)
    if kind is NormKind.LINF:
        # Moreau: prox of a norm is v minus projection onto the dual ball.
        return v - project_l1_ball(v, t)
    if kind is NormKind.FOURIER_L1:
        # Modulus shrinkage keeps the spectrum Hermitian, so the result is real.
        return idft(_complex_shrink(dft(v), t))
    raise InvalidInputError(f"no prox implemented for {kind}")


#: Step ceiling for proximal backtracking when ``LineSearch.max_step`` is None.
PROX_MAX_STEP = 1e6


@dataclass(frozen=True)
class RegKind:
    norm: NormKind
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "norm", NormKind.parse(self.norm))
        if self.norm is NormKind.FOURIER_LINF:
            raise InvalidInputError("Fourier-l_inf penalty is not supported")
        if not self.lam > 0:
            raise InvalidInputError("regularization constant must be positive")


@dataclass
class ProxResult:
    params: LinearParams
    objective: float
    iterations: int
    history: np.ndarray


def _risk_value(w, x, y, loss_kind):
    log_r, u = log_risk_and_direction(LinearParams(w), x, y, loss_kind)
    if not log_r < _LOG_MAX:
        # Overflowing trial point: reject it so the line search shrinks.
        return math.inf, np.full_like(u, np.nan)
    r = math.exp(log_r)
    return r, r * u


def train_proximal(ds, reg, cfg=None, w0=None):
    """Proximal gradient on ``risk(w) + lam ||w||`` with backtracking.

    With a :class:`LineSearch` step each iteration starts from
    ``min(max_step, 2 * previous step)`` and halves until the standard
    quadratic upper-bound test holds, which makes the objective monotone.
    """
    cfg = cfg or TrainConfig()
    x, y = ds.features, ds.labels
    w = np.zeros(ds.d) if w0 is None else as_real_vector(w0, "w0").copy()
    lam = reg.lam

    def objective(v, r):
        return r + lam * norm(v, reg.norm) if np.any(v) else r

    r, g = _risk_value(w, x, y, cfg.loss)
    obj = objective(w, r)
    history = [obj]
    ls = cfg.step_size if isinstance(cfg.step_size, LineSearch) else None
    cap = (ls.max_step or PROX_MAX_STEP) if ls else None
    gamma = cap if ls else cfg.step_size
    it = 0
    for it in range(1, cfg.steps + 1):
        if ls:
            gamma = min(cap, 2.0 * gamma)
        for _ in range(ls.max_halvings if ls else 1):
            w_new = prox(reg.norm, lam * gamma, w - gamma * g)
            r_new, g_new = _risk_value(w_new, x, y, cfg.loss)
            diff = w_new - w
            if not ls or r_new <= r + g @ diff + diff @ diff / (2 * gamma) * (1 + 1e-12):
                break
            gamma *= ls.shrink
        if not np.isfinite(r_new):
            raise StepSizeError(f"proximal iteration {it} diverged; reduce the step size", it - 1)
        obj_new = objective(w_new, r_new)
        decrease = obj - obj_new
        w, r, g, obj = w_new, r_new, g_new, obj_new
        history.append(obj)
        if 0 <= decrease <= cfg.rel_tol * abs(history[-2]):
            break
    return ProxResult(LinearParams(w), float(obj), it, np.array(history))


@dataclass
class PathPoint:
    lam: float
    params: LinearParams
    objective: float
    margin: float


def regularization_path(ds, norm_kind, lambdas, cfg=None):
    """Warm-started proximal solves along a strictly decreasing ``lambdas``.

    Each point reports the margin against the attack dual to the penalty norm
    (so the margin is normalized by the penalty norm itself).
    """
    norm_kind = NormKind.parse(norm_kind)
    lambdas = [float(v) for v in lambdas]
    if not lambdas or any(v <= 0 for v in lambdas) or any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidInputError("lambdas must be positive and strictly decreasing")
    attack = dual(norm_kind)
    w = None
    out = []
    for lam in lambdas:
        res = train_proximal(ds, RegKind(norm_kind, lam), cfg, w0=w)
        w = res.params.w
        mu = margin(w, ds, attack) if np.any(w) else float("nan")
        out.append(PathPoint(lam, res.params, res.objective, mu))
    return out
