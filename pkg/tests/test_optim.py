import itertools

import numpy as np
import pytest

from maxrobust import oracle
from maxrobust.errors import InvalidInputError, StepSizeError
from maxrobust.models import ConvParams, LinearParams, margin
from maxrobust.numerics import NormKind, dual, norm
from maxrobust.optim import (
    LineSearch,
    RegKind,
    SteepestKind,
    TrainConfig,
    auto_max_step,
    project_l1_ball,
    prox,
    regularization_path,
    steepest_step,
    train_proximal,
    train_steepest,
)
from maxrobust.synthdata import generate


def test_steepest_step_examples():
    np.testing.assert_array_equal(steepest_step([3, -4], "signgd"), [-7, 7])
    np.testing.assert_array_equal(steepest_step([3, -4], "cd"), [0, 4])
    np.testing.assert_array_equal(steepest_step([3, -4], "gd"), [-3, 4])
    np.testing.assert_array_equal(steepest_step([2, -2, 1], "cd"), [-2, 0, 0])  # lowest index on ties
    np.testing.assert_array_equal(steepest_step([0, 0], "signgd"), [0, 0])
    with pytest.raises(InvalidInputError):
        steepest_step([np.nan, 1], "gd")


def test_kind_pairings():
    assert SteepestKind.COORDINATE_DESCENT.robust_against is NormKind.LINF
    assert SteepestKind.GRADIENT_DESCENT.robust_against is NormKind.L2
    assert SteepestKind.SIGN_GRADIENT_DESCENT.robust_against is NormKind.L1


@pytest.mark.parametrize("kind", list(SteepestKind))
def test_steepest_step_grid_oracle(kind, rng):
    geom = kind.geometry
    for d in (1, 2, 3, 4):
        pts = {1: 401, 2: 201, 3: 61, 4: 25}[d]
        for _ in range(3):
            g = rng.standard_normal(d)
            r = 1.2 * norm(g, dual(geom))
            axis = np.linspace(-r, r, pts)
            grid = np.array(list(itertools.product(axis, repeat=d)))
            if geom is NormKind.L1:
                sq = np.sum(np.abs(grid), axis=1) ** 2
            elif geom is NormKind.L2:
                sq = np.sum(grid**2, axis=1)
            else:
                sq = np.max(np.abs(grid), axis=1) ** 2
            grid_best = np.min(grid @ g + 0.5 * sq)
            v = steepest_step(g, kind)
            ours = g @ v + 0.5 * norm(v, geom) ** 2
            h = 2 * r / (pts - 1)
            assert ours <= grid_best + 1e-12
            assert ours >= grid_best - 2 * d * h * (np.abs(g).sum() + r)


def test_project_l1_ball_examples(rng):
    np.testing.assert_allclose(project_l1_ball([3.0, 1.0], 1.0), [1.0, 0.0])
    v = np.array([0.1, -0.2])
    np.testing.assert_array_equal(project_l1_ball(v, 1.0), v)
    for _ in range(50):
        v = rng.standard_normal(int(rng.integers(1, 10))) * 3
        r = float(rng.uniform(0.1, 5))
        assert norm(project_l1_ball(v, r), "l1") == pytest.approx(min(r, norm(v, "l1")), abs=1e-12)
    with pytest.raises(InvalidInputError):
        project_l1_ball([1.0], 0.0)


def test_prox_examples():
    np.testing.assert_allclose(prox("l1", 1.0, [3.0, -0.5]), [2.0, 0.0])
    np.testing.assert_allclose(prox("linf", 1.0, [3.0, 1.0]), [2.0, 1.0])
    np.testing.assert_allclose(prox("l2", 1.0, [3.0, 4.0]), [2.4, 3.2])
    out = prox("fourier_l1", 0.3, np.arange(6.0))
    assert out.dtype == float and out.shape == (6,)


def test_fourier_prox_is_real(rng):
    from maxrobust.numerics import dft, dft_matrix

    for d in (2, 5, 8):
        v = rng.standard_normal(d)
        spec = dft(v)
        mod = np.abs(spec)
        shrunk = spec * np.where(mod > 0.2, 1 - 0.2 / np.where(mod > 0, mod, 1), 0)
        raw = dft_matrix(d).conj() @ shrunk
        assert np.max(np.abs(raw.imag)) <= 1e-10
        np.testing.assert_allclose(prox("fourier_l1", 0.2, v), raw.real, atol=1e-12)


@pytest.mark.parametrize("kind", ["l1", "l2", "linf", "fourier_l1"])
def test_prox_beats_random_candidates(kind, rng):
    for d in (1, 2, 3):
        v = rng.standard_normal(d) * 2
        t = float(rng.uniform(0.1, 1.5))
        u = prox(kind, t, v)

        def obj(c):
            from maxrobust.numerics import dft_matrix

            c = np.atleast_2d(c)
            if kind == "l1":
                pen = np.sum(np.abs(c), axis=1)
            elif kind == "l2":
                pen = np.linalg.norm(c, axis=1)
            elif kind == "linf":
                pen = np.max(np.abs(c), axis=1)
            else:
                pen = np.sum(np.abs(c @ dft_matrix(d).T), axis=1)
            return t * pen + 0.5 * np.sum((c - v) ** 2, axis=1)

        cands = np.vstack([
            u + rng.standard_normal((50_000, d)) * 10.0 ** rng.uniform(-6, 0, (50_000, 1)),
            rng.uniform(-4, 4, (50_000, d)),
        ])
        assert obj(u)[0] <= np.min(obj(cands)) + 1e-12


def test_auto_max_step():
    x = np.array([[3.0, -4.0], [1.0, 0.0]])
    assert auto_max_step(x, NormKind.L2) == pytest.approx(1 / 25)
    assert auto_max_step(x, NormKind.L1) == pytest.approx(1 / 16)  # dual l_inf
    assert auto_max_step(x, NormKind.LINF) == pytest.approx(1 / 49)  # dual l1
    assert LineSearch(10.0).resolve(x, NormKind.L2) == 10.0


def test_first_gd_step_direction():
    ds = generate(8, 5, 0)
    traj = train_steepest(LinearParams.zeros(8), ds, "gd", TrainConfig(steps=1, record_every=1))
    w = traj.final_params.w
    target = ds.labels @ ds.features
    assert w @ target / (np.linalg.norm(w) * np.linalg.norm(target)) == pytest.approx(1.0)


def test_cd_support_grows_by_one():
    ds = generate(30, 6, 1)
    traj = train_steepest(LinearParams.zeros(30), ds, "cd", TrainConfig(steps=12, record_every=1))
    for p in traj.points:
        assert np.count_nonzero(p.params.w) <= p.step


def test_trajectory_invariants(tmp_path):
    ds = generate(10, 5, 2)
    cfg = TrainConfig(steps=300, record_every=50, margin_norms=("l1", "l2"))
    traj = train_steepest(LinearParams.zeros(10), ds, "signgd", cfg)
    steps = traj.steps()
    assert np.all(np.diff(steps) > 0) and steps[-1] == 300
    for p in traj.points:
        for k, mu in p.margins.items():
            assert mu == margin(p.params, ds, k)
        assert np.linalg.norm(p.direction) == pytest.approx(1.0)
    path = traj.to_csv(tmp_path / "t.csv")
    assert path.read_text().splitlines()[0] == "step,risk,margin,norm_of_w"


def test_train_determinism():
    ds = generate(12, 4, 0)
    a = train_steepest(LinearParams.zeros(12), ds, "gd", TrainConfig(steps=200))
    b = train_steepest(LinearParams.zeros(12), ds, "gd", TrainConfig(steps=200))
    assert a.final_params.w.tobytes() == b.final_params.w.tobytes()


def test_conv_requires_gd():
    ds = generate(6, 3, 0)
    with pytest.raises(InvalidInputError):
        train_steepest(ConvParams.random(6), ds, "cd", TrainConfig(steps=2))


def test_divergence_raises_step_size_error():
    ds = generate(10, 5, 0)
    with pytest.raises(StepSizeError) as exc:
        train_steepest(LinearParams.zeros(10), ds, "gd", TrainConfig(steps=50, step_size=1e300, normalized=False))
    assert exc.value.last_finite_step == 0


def test_gd_d100_reaches_oracle_margin():
    ds = generate(100, 25, 0)
    traj = train_steepest(LinearParams.zeros(100), ds, "gd", TrainConfig(record_every=1000))
    target = oracle.min_norm(ds, "l2").implied_max_eps
    assert traj.margins()[-1] >= 0.95 * target


def test_margin_eventually_non_decreasing():
    ds = generate(32, 8, 1)
    traj = train_steepest(LinearParams.zeros(32), ds, "gd", TrainConfig(steps=3000, record_every=100))
    tail = traj.margins()[10:]
    assert np.all(np.diff(tail) >= -1e-6)


def test_prox_huge_lambda_gives_zero():
    ds = generate(10, 5, 0)
    g0 = np.abs(ds.labels @ ds.features) / ds.n  # risk gradient at 0 for exponential loss
    for kind, lam in (("l1", 1.01 * g0.max()), ("l2", 1.01 * np.linalg.norm(g0)), ("linf", 1.01 * g0.sum())):
        res = train_proximal(ds, RegKind(kind, lam), TrainConfig(steps=200))
        assert not np.any(res.params.w)


def test_prox_objective_monotone():
    ds = generate(20, 6, 3)
    for kind in ("l1", "l2", "linf", "fourier_l1"):
        res = train_proximal(ds, RegKind(kind, 1e-2), TrainConfig(steps=500))
        assert np.all(np.diff(res.history) <= 1e-15 * np.abs(res.history[:-1]))


def test_prox_matches_independent_convex_solver():
    cp = pytest.importorskip("cvxpy")
    ds = generate(100, 25, 0)
    a = ds.signed_features
    w = cp.Variable(100)
    prob = cp.Problem(cp.Minimize(cp.sum(cp.exp(-a @ w)) / 25 + 1e-4 * cp.norm1(w)))
    prob.solve(solver="CLARABEL")
    res = train_proximal(ds, RegKind("l1", 1e-4))
    assert res.objective <= prob.value * (1 + 1e-6)
    assert margin(res.params.w, ds, "linf") == pytest.approx(margin(w.value, ds, "linf"), rel=1e-3)


@pytest.mark.xfail(strict=True, reason="the exact l1-regularized solution at lambda=1e-4 has only 0.926 of "
                   "the maximal l_inf margin on this instance; see the decisions ledger")
def test_prox_l1_d100_within_five_percent():
    ds = generate(100, 25, 0)
    res = train_proximal(ds, RegKind("l1", 1e-4))
    target = oracle.min_norm(ds, "linf").implied_max_eps
    assert margin(res.params.w, ds, "linf") >= 0.95 * target


def test_regularization_path_properties():
    ds = generate(32, 8, 0)
    path = regularization_path(ds, "l1", [1e-1, 1e-2, 1e-3, 1e-4])
    mus = [p.margin for p in path if np.isfinite(p.margin)]
    assert np.all(np.diff(mus) >= -1e-6)
    assert all(p.margin > 0 for p in path[1:])
    with pytest.raises(InvalidInputError):
        regularization_path(ds, "l1", [1e-3, 1e-2])
    with pytest.raises(InvalidInputError):
        RegKind("fourier_linf", 1.0)
