"""Margins, robust accuracy, maximal robust epsilon and adversarial training.

For a linear model the largest budget the model survives equals its margin
under the dual norm, so :func:`max_robust_eps` (attack-based) and
:func:`margin` (closed form) are two routes to the same number.
"""
import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .attack import PROJECTED, AttackSpec, attack_batch, project_ball, steepest_ascent
from .errors import InvalidInputError
from .models import LinearParams, LossKind, margin
from .numerics import NormKind
from .optim import SteepestKind, TrainConfig, _descent

GRID = "grid"
BISECT = "bisect"


@dataclass
class RobustReport:
    norm: NormKind
    grid: np.ndarray
    accuracy: np.ndarray
    max_eps: float
    margin: Optional[float] = None
    slack: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def grid_step(self):
        return float(np.max(np.diff(self.grid))) if self.grid.size > 1 else 0.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "robust_accuracy"])
            for e, a in zip(self.grid, self.accuracy):
                if np.isfinite(a):
                    writer.writerow([repr(float(e)), repr(float(a))])
        return Path(path)

    def summary(self):
        return {"norm": self.norm.value, "max_eps": self.max_eps, "margin": self.margin,
                "slack": self.slack, "grid_step": self.grid_step}

    def save_summary(self, path):
        Path(path).write_text(json.dumps(self.summary(), indent=2))
        return Path(path)


def robust_accuracy(model, ds, spec, loss_kind="exponential"):
    """Fraction of samples still correctly classified after :func:`maxrobust.attack.attack`."""
    deltas = attack_batch(model, ds.features, ds.labels, spec, loss_kind)
    w = model.effective_weight()
    z = ds.labels * ((ds.features + deltas) @ w)
    return float(np.mean(z > 0))


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise InvalidInputError("epsilon grid is empty")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise InvalidInputError("epsilon grid must be nonnegative and strictly increasing")
    return grid


def robust_report(model, ds, norm, grid, loss_kind="exponential", slack=0.0, steps=1,
                  mode=PROJECTED, method=GRID):
    """Scan ``grid`` and return a :class:`RobustReport`.

    ``method="grid"`` walks the grid upward and stops at the first budget whose
    accuracy drops below ``1 - slack``; accuracy is non-increasing in the
    budget for the attacks here, so later points cannot qualify. Skipped
    points are left as NaN. ``method="bisect"`` evaluates O(log n) points and
    is only exact when accuracy is monotone in the budget.
    """
    norm = NormKind.parse(norm)
    grid = _check_grid(grid)
    if not 0 <= slack < 1:
        raise InvalidInputError("slack must lie in [0, 1)")
    acc = np.full(grid.size, np.nan)

    def ok(i):
        if np.isnan(acc[i]):
            spec = AttackSpec(norm, float(grid[i]), steps=steps, mode=mode)
            acc[i] = robust_accuracy(model, ds, spec, loss_kind)
        return acc[i] >= 1.0 - slack - 1e-12

    best = -1
    if method == GRID:
        for i in range(grid.size):
            if not ok(i):
                break
            best = i
    elif method == BISECT:
        lo, hi = -1, grid.size
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                lo = mid
            else:
                hi = mid
        best = lo
    else:
        raise InvalidInputError(f"unknown search method {method!r}")
    max_eps = float(grid[best]) if best >= 0 else 0.0
    try:
        mu = margin(model, ds, norm)
    except InvalidInputError:
        mu = None
    return RobustReport(norm, grid, acc, max_eps, mu, slack)


def max_robust_eps(model, ds, norm, grid, loss_kind="exponential", slack=0.0, **kw):
    """Largest grid budget with robust accuracy ``>= 1 - slack``; 0 if none."""
    return robust_report(model, ds, norm, grid, loss_kind, slack, **kw).max_eps


def _inner_max(w, x, y, norm, eps, inner_steps, inner_lr, free):
    """Projected steepest ascent on every sample's loss; step size ``inner_lr * eps``.

    The input gradient is zeta'(z) y w and every supported loss has zeta' <= 0,
    so the ascent direction is that of -y w at every iterate, including where
    zeta' underflows or the hinge is flat. Each steepest-ascent vector has
    entries of equal magnitude on its support (or a single one), so every
    iterate stays on the ray through the step and the projected loop reduces
    to one projection of ``inner_steps * step``.
    """
    step = inner_lr * steepest_ascent(-y[:, None] * (w * free)[None, :], norm, eps)
    return project_ball(inner_steps * step, norm, eps)


def adversarial_train(ds, eps, norm, cfg=None, inner_steps=10, inner_lr=0.1, model=None,
                      kind=SteepestKind.GRADIENT_DESCENT):
    """Minimize the adversarial risk by alternating inner attack and outer descent step.

    Returns the trajectory; ``trajectory.final_params`` holds the weights.
    Margins are recorded on clean data under ``norm``.
    """
    norm = NormKind.parse(norm)
    if not eps >= 0:
        raise InvalidInputError("eps must be nonnegative")
    if inner_steps < 1 or not inner_lr > 0:
        raise InvalidInputError("inner_steps must be >= 1 and inner_lr positive")
    cfg = cfg or TrainConfig()
    kind = SteepestKind.parse(kind)
    model = LinearParams.zeros(ds.d) if model is None else model
    # Margins under the attack norm, whatever the outer geometry.
    cfg = replace(cfg, margin_norms=tuple(cfg.margin_norms) + (norm,))
    free = np.ones(ds.d)
    if getattr(model, "augmented_bias", False):
        free[-1] = 0.0
    x, y = ds.features, ds.labels

    def perturbed(m):
        w = m.effective_weight()
        return x + _inner_max(w, x, y, norm, float(eps), inner_steps, inner_lr, free)

    traj = _descent(model, ds, kind, cfg, batch_features=perturbed)
    traj.primary_norm = norm
    return traj


def write_sweep_csv(path, rows):
    """Rows of ``d_over_n, method, seed, max_eps, margin``."""
    cols = ["d_over_n", "method", "seed", "max_eps", "margin"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in cols})
    return Path(path)


__all__ = [
    "RobustReport", "adversarial_train", "margin", "max_robust_eps", "robust_accuracy",
    "robust_report", "write_sweep_csv", "GRID", "BISECT", "LossKind",
]
