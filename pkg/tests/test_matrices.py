import numpy as np
import pytest

from tabprior.matrices import (
    FIXED_ACTIVATIONS,
    MATRIX_KINDS,
    ActivationSpec,
    apply_activation,
    random_activation,
    sample_base_points,
    sample_matrix,
)
from tabprior.rng import RngStream, new_sampler_context


def _ctx_stream(seed=0):
    return new_sampler_context(RngStream(seed)), RngStream(seed + 1000)


def test_fixed_activation_count():
    assert len(FIXED_ACTIVATIONS) == 27


def test_fixed_activations_finite_on_wide_range():
    x = np.linspace(-50.0, 50.0, 401).reshape(1, -1)
    for name, fn in FIXED_ACTIVATIONS.items():
        out = fn(x)
        assert out.shape == x.shape, name
        assert np.all(np.isfinite(out)), name


def test_known_activation_values():
    x = np.array([[-2.0, 0.0, 3.0]])
    assert np.allclose(FIXED_ACTIVATIONS["relu"](x), [[0.0, 0.0, 3.0]])
    assert np.allclose(FIXED_ACTIVATIONS["hardtanh"](x), [[-1.0, 0.0, 1.0]])
    assert np.allclose(FIXED_ACTIVATIONS["heaviside"](x), [[0.0, 1.0, 1.0]])
    assert np.allclose(FIXED_ACTIVATIONS["abs"](x), [[2.0, 0.0, 3.0]])
    assert np.allclose(FIXED_ACTIVATIONS["softmax"](np.zeros((2, 4))), 0.25)
    row = FIXED_ACTIVATIONS["softmax"](np.array([[1.0, 5.0, -2.0]]))
    assert abs(row.sum() - 1.0) < 1e-12
    oh = FIXED_ACTIVATIONS["onehot_argmax"](np.array([[1.0, 5.0, -2.0]]))
    assert np.array_equal(oh, [[0.0, 1.0, 0.0]])
    ranks = FIXED_ACTIVATIONS["rank"](np.array([[0.3, -1.0, 2.0]]))
    assert np.array_equal(ranks, [[1.0, 0.0, 2.0]])


def test_parametric_activations():
    x = np.array([[-2.0, 0.5, 3.0]])
    assert np.allclose(
        ActivationSpec("relu_pow", 2.0).apply_raw(x), [[0.0, 0.25, 9.0]]
    )
    assert np.allclose(
        ActivationSpec("signed_pow", 2.0).apply_raw(x), [[-4.0, 0.25, 9.0]]
    )
    assert np.allclose(ActivationSpec("int_pow", 3).apply_raw(x), [[-8.0, 0.125, 27.0]])
    out = ActivationSpec("inv_pow", 1.0).apply_raw(np.array([[0.0]]))
    assert np.isfinite(out).all()
    with pytest.raises(ValueError):
        ActivationSpec("nope").apply_raw(x)


def test_random_activation_mix():
    ctx, s = _ctx_stream(1)
    names = [random_activation(ctx, s).name for _ in range(400)]
    fixed = sum(n in FIXED_ACTIVATIONS for n in names)
    assert 0.5 < fixed / len(names) < 0.85  # 2/3 fixed on average


def test_wrapped_activation_standardizes():
    ctx, s = _ctx_stream(2)
    X = RngStream(3).standard_normal((256, 4)) * 7.0 + 2.0
    out = apply_activation(ActivationSpec("relu"), X, ctx, s, wrapped=True)
    assert out.shape == X.shape
    assert np.allclose(out.mean(axis=0), 0.0, atol=1e-9)
    stds = out.std(axis=0)
    assert np.all((np.abs(stds - 1.0) < 1e-9) | (stds == 0.0))


def test_unwrapped_activation_is_raw():
    ctx, s = _ctx_stream(4)
    X = np.array([[-1.0, 2.0]])
    assert np.allclose(
        apply_activation(ActivationSpec("relu"), X, ctx, s, wrapped=False), [[0.0, 2.0]]
    )


def test_wrapped_constant_column_no_nan():
    ctx, s = _ctx_stream(5)
    X = np.ones((64, 3))
    out = apply_activation(ActivationSpec("tanh"), X, ctx, s, wrapped=True)
    assert np.all(np.isfinite(out))


def test_base_points_shapes_and_ball():
    ctx, s = _ctx_stream(6)
    for base in ("normal", "cube", "ball", "random_cov"):
        pts = sample_base_points(200, 5, ctx, s, base=base)
        assert pts.shape == (200, 5)
        assert np.all(np.isfinite(pts))
    ball = sample_base_points(500, 3, ctx, s, base="ball")
    assert np.all(np.linalg.norm(ball, axis=1) <= 1.0 + 1e-12)
    cube = sample_base_points(500, 3, ctx, s, base="cube")
    assert np.all(np.abs(cube) <= 1.0)


def test_sample_matrix_rows_normalized_all_kinds():
    for kind in MATRIX_KINDS:
        ctx, s = _ctx_stream(hash(kind) % 1000)
        M = sample_matrix(kind, 12, 7, ctx, s)
        assert M.shape == (12, 7)
        assert np.allclose(np.linalg.norm(M, axis=1), 1.0, atol=1e-9)
        assert np.all(np.isfinite(M))


def test_sample_matrix_deterministic():
    def draw():
        ctx, s = _ctx_stream(77)
        return sample_matrix("kernel", 6, 4, ctx, s)

    assert np.array_equal(draw(), draw())


def test_sample_matrix_validation():
    ctx, s = _ctx_stream(8)
    with pytest.raises(ValueError):
        sample_matrix("gaussian", 0, 3, ctx, s)
