import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maxrobust.errors import DatasetFormatError, InvalidInputError
from maxrobust.models import (
    ConvParams,
    LinearParams,
    LossKind,
    effective_weight,
    forward,
    forward_conv,
    forward_linear,
    load_model,
    loss,
    loss_deriv,
    margin,
    risk,
    risk_grad,
    risk_grad_x,
    save_model,
)
from maxrobust.numerics import dft
from maxrobust.synthdata import Dataset, generate

from conftest import toy_dataset


def fd_grad(f, theta):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        h = 1e-5 * (1 + abs(theta[i]))
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


def test_forward_examples(rng):
    assert forward_linear(LinearParams([1.0, 0.0]), [2.0, 3.0]) == 2.0
    assert forward_linear(LinearParams.zeros(3), rng.standard_normal(3)) == 0.0
    w = rng.standard_normal(5)
    x, y = rng.standard_normal(5), rng.standard_normal(5)
    p = LinearParams(w)
    assert forward(p, 2 * x - 3 * y) == pytest.approx(2 * forward(p, x) - 3 * forward(p, y))
    with pytest.raises(InvalidInputError):
        forward_linear(p, np.ones(4))


def brute_conv_forward(w1, w2, x):
    d = len(x)
    return sum(w2[i] * sum(w1[(-k) % d] * x[(i + k) % d] for k in range(d)) for i in range(d)) / np.sqrt(d)


def test_conv_identity_kernel_and_zero(rng):
    d = 6
    w2, x = rng.standard_normal(d), rng.standard_normal(d)
    e0 = np.zeros(d)
    e0[0] = np.sqrt(d)
    p = ConvParams(e0, w2)
    assert forward_conv(p, x) == pytest.approx(w2 @ x)
    np.testing.assert_allclose(effective_weight(p), w2, atol=1e-14)
    assert forward_conv(ConvParams(rng.standard_normal(d), np.zeros(d)), x) == 0.0


def test_effective_weight_probe_oracle(rng):
    for d in (1, 2, 5, 8, 16):
        p = ConvParams(rng.standard_normal(d), rng.standard_normal(d))
        w = effective_weight(p)
        for _ in range(20):
            x = rng.standard_normal(d)
            assert abs(w @ x - forward_conv(p, x)) <= 1e-10
            assert abs(forward_conv(p, x) - brute_conv_forward(p.w1, p.w2, x)) <= 1e-10
        np.testing.assert_allclose(np.abs(dft(w)), np.abs(dft(p.w1)) * np.abs(dft(p.w2)), atol=1e-12)


def test_loss_examples():
    assert loss("exponential", 0.0) == 1.0 and loss_deriv("exponential", 0.0) == -1.0
    assert loss("logistic", 0.0) == pytest.approx(np.log(2)) and loss_deriv("logistic", 0.0) == -0.5
    assert loss("hinge", 2.0) == 0.0 and loss("hinge", 0.0) == 1.0


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_losses_non_increasing(z1, z2):
    lo, hi = min(z1, z2), max(z1, z2)
    for k in LossKind:
        assert loss(k, lo) >= loss(k, hi)


def test_risk_examples():
    ds = Dataset(np.array([[100.0, 0.0], [-100.0, 0.0]]), np.array([1.0, -1.0]))
    assert risk(LinearParams([10.0, 0.0]), ds, "exponential") < 1e-300
    ds = generate(7, 5, 0)
    assert risk(LinearParams.zeros(7), ds, "logistic") == pytest.approx(np.log(2))


def test_exponential_risk_no_overflow():
    ds = generate(5, 4, 1)
    w = 1e4 * ds.ground_truth
    r = risk(LinearParams(w), ds, "exponential")
    g = risk_grad(LinearParams(w), ds, "exponential")
    assert np.isfinite(r) and np.all(np.isfinite(g))
    r_neg = risk(LinearParams(-w), ds, "exponential")
    assert r_neg == np.inf or r_neg > 1e300


@pytest.mark.parametrize("kind", list(LossKind))
def test_linear_risk_grad_finite_differences(kind, rng):
    for _ in range(10):
        d, n = int(rng.integers(1, 17)), int(rng.integers(1, 9))
        ds = generate(d, n, int(rng.integers(1000)))
        w = rng.standard_normal(d) * 0.3
        if kind is LossKind.HINGE:
            z = ds.labels * (ds.features @ w)
            if np.min(np.abs(z - 1)) < 1e-3:  # kink
                continue
        g = risk_grad(LinearParams(w), ds, kind)
        g_fd = fd_grad(lambda t: risk(LinearParams(t), ds, kind), w)
        assert rel_err(g, g_fd) <= 1e-6


@pytest.mark.parametrize("kind", [LossKind.EXPONENTIAL, LossKind.LOGISTIC])
def test_conv_risk_grad_finite_differences(kind, rng):
    for _ in range(10):
        d, n = int(rng.integers(1, 17)), int(rng.integers(1, 9))
        ds = generate(d, n, int(rng.integers(1000)))
        p = ConvParams.random(d, int(rng.integers(1000)))
        g = risk_grad(p, ds, kind)
        g_fd = fd_grad(lambda t: risk(p.with_flat(t), ds, kind), p.to_flat())
        assert rel_err(g, g_fd) <= 1e-6


def test_risk_grad_x(rng):
    g = risk_grad_x(LinearParams([1.0, 0.0]), [0.0, 0.0], 1, "exponential")
    np.testing.assert_array_equal(g, [-1.0, 0.0])
    for model in (LinearParams(rng.standard_normal(6)), ConvParams.random(6, 3, scale=1.0)):
        for kind in LossKind:
            x, y = rng.standard_normal(6), float(rng.choice([-1, 1]))
            if kind is LossKind.HINGE and abs(y * forward(model, x) - 1) < 1e-3:
                continue
            g = risk_grad_x(model, x, y, kind)
            g_fd = fd_grad(lambda t: loss(kind, y * forward(model, t)), x)
            assert rel_err(g, g_fd) <= 1e-6
    w = rng.standard_normal(4)
    g1 = risk_grad_x(LinearParams(w), np.zeros(4), 1, "exponential")
    g2 = risk_grad_x(LinearParams(3 * w), np.zeros(4), 1, "exponential")
    np.testing.assert_array_equal(np.sign(g1), np.sign(g2))


def test_positive_homogeneity(rng):
    w, x = rng.standard_normal(5), rng.standard_normal(5)
    for c in (1e-3, 0.5, 7.0):
        assert np.sign(forward(LinearParams(c * w), x)) == np.sign(forward(LinearParams(w), x))


def test_margin_examples(rng):
    ds = toy_dataset()
    assert margin([1.0, 0.0], ds, "l2") == 1.0
    assert margin([1.0, 0.0], ds, "linf") == 1.0
    with pytest.raises(InvalidInputError):
        margin([0.0, 0.0], ds, "l2")
    ds = generate(6, 4, 2)
    w = rng.standard_normal(6)
    for k in ("l1", "l2", "linf", "fourier_linf"):
        assert margin(3.7 * w, ds, k) == pytest.approx(margin(w, ds, k))


def test_conv_margin_uses_effective_weight():
    ds = generate(8, 4, 0)
    p = ConvParams.random(8, 1)
    assert margin(p, ds, "fourier_linf") == margin(effective_weight(p), ds, "fourier_linf")


def test_checkpoint_round_trip(tmp_path):
    p = ConvParams.random(5, 2)
    back = load_model(save_model(p, tmp_path / "c.json"))
    np.testing.assert_array_equal(back.w1, p.w1)
    np.testing.assert_array_equal(back.w2, p.w2)
    q = LinearParams([1.0, -2.0, 0.5], augmented_bias=True)
    back = load_model(save_model(q, tmp_path / "l.json"))
    assert back.augmented_bias and np.array_equal(back.w, q.w)
    (tmp_path / "bad.json").write_text('{"kind": "mlp", "d": 1}')
    with pytest.raises(DatasetFormatError):
        load_model(tmp_path / "bad.json")
