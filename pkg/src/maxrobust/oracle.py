"""Certified solutions of the minimum-norm classification problem.

For an attack norm ``||.||`` with dual ``||.||_*`` the oracle solves::

    min_w ||w||_*   s.t.   y_i <w, x_i> >= 1  for all i

whose optimal value ``||w'||_*`` gives the maximal robust radius
``1 / ||w'||_*``. Every solver returns a :class:`Certificate` built from the
same Lagrangian: with ``A[i] = y_i x_i`` and multipliers ``alpha >= 0``,
optimality means ``A.T @ alpha`` lies in the subdifferential of ``||.||_*``
at ``w'`` (``||A.T @ alpha|| <= 1`` and ``<A.T @ alpha, w'> = ||w'||_*``),
complementary slackness holds, and the dual value ``sum(alpha)`` matches.

Solvers: dense simplex for the l_inf and l1 attacks, projected gradient on
the dual QP for l2, and a primal-dual splitting (PDHG) for Fourier-l_inf.
The bias, when wanted, enters as an ordinary augmented coordinate and is
penalized like any other weight.
"""
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import CertificationError, InfeasibleError, InvalidInputError
from .models import margin
from .numerics import NormKind, dft_matrix, dual, norm
from .simplex import linprog_eq

LP_TOL = 1e-8
FIRST_ORDER_TOL = 1e-6
L2_GAP_TOL = 1e-8
FOURIER_GAP_TOL = 1e-6
FEASIBILITY_TOL = 1e-9
MARGIN_TOL = 1e-8
MAX_FIRST_ORDER_ITERS = 1_000_000


@dataclass
class Certificate:
    attack_norm: NormKind
    primal: np.ndarray
    objective: float
    alpha: np.ndarray
    stationarity: float
    complementary_slackness: float
    duality_gap: float
    implied_max_eps: float
    solver: str
    iterations: int
    wall_time: float = 0.0
    residual_tol: float = LP_TOL
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        doc = asdict(self)
        doc["attack_norm"] = self.attack_norm.value
        doc["primal"] = self.primal.tolist()
        doc["alpha"] = self.alpha.tolist()
        return doc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))
        return Path(path)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        doc["attack_norm"] = NormKind.parse(doc["attack_norm"])
        doc["primal"] = np.asarray(doc["primal"], dtype=float)
        doc["alpha"] = np.asarray(doc["alpha"], dtype=float)
        return cls(**doc)


@dataclass
class CheckResult:
    passed: bool
    feasibility: float
    stationarity: float
    complementary_slackness: float
    duality_gap: float
    margin_error: float
    failures: list


def _residuals(a, w, alpha, attack):
    """Feasibility, stationarity, complementary slackness and gap of ``(w, alpha)``."""
    pen = dual(attack)
    v = a.T @ alpha
    slack = a @ w - 1.0
    n_w = norm(w, pen)
    return {
        "feasibility": float(max(0.0, -slack.min())),
        "stationarity": float(max(0.0, norm(v, attack) - 1.0) + abs(v @ w - n_w)),
        "complementary_slackness": float(np.max(np.abs(alpha * slack))),
        "duality_gap": float(n_w - alpha.sum()),
    }


def check_certificate(cert, ds, attack_norm=None, tol=None):
    """Recompute every optimality condition of ``cert`` on ``ds``."""
    attack = cert.attack_norm if attack_norm is None else NormKind.parse(attack_norm)
    tol = cert.residual_tol if tol is None else tol
    a = ds.signed_features
    w = np.asarray(cert.primal, dtype=float)
    alpha = np.asarray(cert.alpha, dtype=float)
    failures = []
    if w.shape != (ds.d,) or alpha.shape != (ds.n,):
        return CheckResult(False, np.inf, np.inf, np.inf, np.inf, np.inf, ["shape mismatch"])
    res = _residuals(a, w, alpha, attack)
    if np.any(alpha < -tol):
        failures.append("negative multipliers")
    if res["feasibility"] > FEASIBILITY_TOL:
        failures.append(f"constraint violation {res['feasibility']:.3g}")
    for key in ("stationarity", "complementary_slackness"):
        if res[key] > tol:
            failures.append(f"{key} {res[key]:.3g}")
    if abs(res["duality_gap"]) > tol:
        failures.append(f"duality gap {res['duality_gap']:.3g}")
    try:
        m_err = abs(margin(w, ds, attack) - cert.implied_max_eps)
    except InvalidInputError:
        m_err = np.inf
    if m_err > MARGIN_TOL:
        failures.append(f"margin identity off by {m_err:.3g}")
    return CheckResult(not failures, res["feasibility"], res["stationarity"],
                       res["complementary_slackness"], res["duality_gap"], m_err, failures)


def separability_ray(ds):
    """Return ``None`` if ``{w : A w >= 1}`` is nonempty, else a Farkas ray.

    The ray ``alpha >= 0`` has ``sum(alpha) = 1`` and ``A.T @ alpha = 0``.
    """
    a = ds.signed_features
    n, d = a.shape
    res = linprog_eq(np.zeros(2 * d + n), np.hstack([a, -a, -np.eye(n)]), np.ones(n))
    if res.status != "infeasible":
        return None
    ray = np.maximum(res.farkas, 0.0)
    return ray / ray.sum()


def _certificate(ds, attack, w, alpha, solver, iterations, t0, tol, **extra):
    a = ds.signed_features
    w = w / np.min(a @ w)  # tight: the smallest functional margin is exactly 1
    res = _residuals(a, w, alpha, attack)
    n_w = norm(w, dual(attack))
    return Certificate(attack, w, n_w, alpha, res["stationarity"], res["complementary_slackness"],
                       res["duality_gap"], 1.0 / n_w, solver, int(iterations), time.perf_counter() - t0,
                       tol, dict(extra))


def _solve_min_l1(ds):
    a = ds.signed_features
    n, d = a.shape
    c = np.concatenate([np.ones(2 * d), np.zeros(n)])
    res = linprog_eq(c, np.hstack([a, -a, -np.eye(n)]), np.ones(n))
    return res.x[:d] - res.x[d:2 * d], res.y, res


def _solve_min_linf(ds):
    a = ds.signed_features
    n, d = a.shape
    # Columns: p (d), q (d), t (1), s (n), r (d), u (d);  w = p - q.
    eye_d = np.eye(d)
    rows_margin = np.hstack([a, -a, np.zeros((n, 1)), -np.eye(n), np.zeros((n, 2 * d))])
    rows_upper = np.hstack([-eye_d, eye_d, np.ones((d, 1)), np.zeros((d, n)), -eye_d, np.zeros((d, d))])
    rows_lower = np.hstack([eye_d, -eye_d, np.ones((d, 1)), np.zeros((d, n)), np.zeros((d, d)), -eye_d])
    a_eq = np.vstack([rows_margin, rows_upper, rows_lower])
    b_eq = np.concatenate([np.ones(n), np.zeros(2 * d)])
    c = np.zeros(a_eq.shape[1])
    c[2 * d] = 1.0
    res = linprog_eq(c, a_eq, b_eq)
    return res.x[:d] - res.x[d:2 * d], res.y[:n], res


def _gap_l2(a, alpha):
    w = a.T @ alpha
    m = np.min(a @ w)
    nv = np.linalg.norm(w)
    if m <= 0 or nv == 0:
        return np.inf
    return nv / m - alpha.sum() / nv


def _polish_l2(a, alpha):
    """Exact solve on the current support; returns None if it is not optimal."""
    support = alpha > 1e-12
    if not np.any(support):
        return None
    a_s = a[support]
    try:
        coef = np.linalg.lstsq(a_s @ a_s.T, np.ones(a_s.shape[0]), rcond=None)[0]
    except np.linalg.LinAlgError:
        return None
    if np.any(coef < 0):
        return None
    out = np.zeros_like(alpha)
    out[support] = coef
    return out


def _solve_min_l2(ds, tol=L2_GAP_TOL, max_iter=MAX_FIRST_ORDER_ITERS):
    """Accelerated projected gradient on ``max 1@alpha - 0.5||A.T alpha||^2, alpha >= 0``."""
    a = ds.signed_features
    q = a @ a.T
    lip = np.linalg.eigvalsh(q)[-1]
    alpha = np.zeros(ds.n)
    z = alpha.copy()
    t = 1.0
    for it in range(1, max_iter + 1):
        grad = 1.0 - q @ z
        new = np.maximum(z + grad / lip, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        # Gradient-based restart keeps the momentum from overshooting.
        if (new - alpha) @ (z - new) > 0:
            t_new, z = 1.0, new
        else:
            z = new + (t - 1) / t_new * (new - alpha)
        alpha, t = new, t_new
        if it % 50 == 0:
            if _gap_l2(a, alpha) <= tol:
                break
            polished = _polish_l2(a, alpha)
            if polished is not None and _gap_l2(a, polished) <= tol:
                alpha = polished
                break
    else:
        raise CertificationError(f"l2 oracle hit {max_iter} iterations without certifying")
    w = a.T @ alpha
    # Convert QP multipliers to the norm-form dual: ||A.T alpha||_2 <= 1.
    return w, alpha / np.linalg.norm(w), it


def _fourier_gap(a, f, w, alpha):
    m = np.min(a @ w)
    if m <= 0:
        return np.inf, None
    scale = max(np.max(np.abs(f @ (a.T @ alpha))), 1e-300)
    return np.sum(np.abs(f @ w)) / m - alpha.sum() / scale, alpha / scale


def _solve_min_fourier_l1(ds, tol=FOURIER_GAP_TOL, max_iter=MAX_FIRST_ORDER_ITERS):
    """PDHG on ``min ||F w||_1 + I(A w >= 1)`` splitting ``K = [F; A]``.

    Dual blocks: ``z`` (complex, projected onto unit moduli) for the spectrum
    term and ``b <= 0`` for the margin constraints, with ``alpha = -b``.
    """
    a = ds.signed_features
    f = dft_matrix(ds.d)
    fh = f.conj().T
    k_norm = np.sqrt(1.0 + np.linalg.norm(a, 2) ** 2)
    tau = sigma = 0.99 / k_norm
    w = np.zeros(ds.d)
    w_bar = w.copy()
    z = np.zeros(ds.d, dtype=complex)
    b = np.zeros(ds.n)
    best = (np.inf, None, None)
    for it in range(1, max_iter + 1):
        z = z + sigma * (f @ w_bar)
        mod = np.abs(z)
        z = np.where(mod > 1.0, z / np.where(mod > 0, mod, 1.0), z)
        b = np.minimum(0.0, b + sigma * (a @ w_bar) - sigma)
        w_new = w - tau * ((fh @ z).real + a.T @ b)
        w_bar = 2 * w_new - w
        w = w_new
        if it % 100 == 0:
            gap, alpha = _fourier_gap(a, f, w, -b)
            if gap < best[0]:
                best = (gap, w.copy(), alpha)
            if gap <= tol:
                break
    else:
        raise CertificationError(
            f"Fourier oracle hit {max_iter} iterations without certifying (best gap {best[0]:.3g})")
    return best[1], best[2], it


def min_norm(ds, attack_norm):
    """Solve the min-norm problem for ``attack_norm`` and return a :class:`Certificate`.

    Raises :class:`InfeasibleError` (carrying a Farkas ray) when the data
    are not linearly separable.
    """
    attack = NormKind.parse(attack_norm)
    t0 = time.perf_counter()
    ray = separability_ray(ds)
    if ray is not None:
        raise InfeasibleError("dataset is not linearly separable", ray=ray)
    if attack is NormKind.LINF:
        w, alpha, res = _solve_min_l1(ds)
        return _certificate(ds, attack, w, alpha, "simplex-bland", res.iterations, t0, LP_TOL,
                            active=int(np.sum(np.abs(ds.signed_features @ w - 1) < 1e-9)))
    if attack is NormKind.L1:
        w, alpha, res = _solve_min_linf(ds)
        return _certificate(ds, attack, w, alpha, "simplex-bland", res.iterations, t0, LP_TOL)
    if attack is NormKind.L2:
        w, alpha, it = _solve_min_l2(ds)
        return _certificate(ds, attack, w, alpha, "dual-projected-gradient", it, t0, FIRST_ORDER_TOL)
    if attack is NormKind.FOURIER_LINF:
        w, alpha, it = _solve_min_fourier_l1(ds)
        return _certificate(ds, attack, w, alpha, "pdhg", it, t0, FIRST_ORDER_TOL)
    raise InvalidInputError(f"no min-norm oracle for attack norm {attack}")
