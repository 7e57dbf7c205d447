import numpy as np
import pytest

from kerfscope.lib import Arch
from kerfscope.lib.error import ConfigError, DataError, ShapeError
from kerfscope.lib.nn.archs import border_network, chip_network, network_for, street_network
from kerfscope.lib.nn.augment import AugmentParams, AugmentSpec, apply, augment
from kerfscope.lib.nn.checkpoint import load_network, save_network
from kerfscope.lib.nn.network import (
    NetworkSpec,
    build,
    conv,
    cross_entropy,
    dense,
    dropout,
    infer_shapes,
    maxpool,
    softmax,
    softmax_layer,
)
from kerfscope.lib.nn.optim import SGD, train_step


def tiny_spec(rate: float = 0.0) -> NetworkSpec:
    return NetworkSpec(
        name="tiny",
        input_shape=(6, 7, 1),
        layers=(
            conv("c1", 3, 2),
            maxpool("p1", 2, 2),
            dropout("d1", rate),
            dense("f1", 4),
            dense("f2", 3),
            softmax_layer(),
        ),
        num_classes=3,
    )


def toy_batch(n: int, rng: np.random.Generator):
    y = np.arange(n) % 2
    x = rng.normal(0.0, 0.1, (n, 6, 7, 1))
    x[y == 1, :, :3] += 1.0
    x[y == 0, :, 4:] += 1.0
    return x, y


# ------
# Shapes
# ------


def test_street_network_shapes():
    shapes = dict(infer_shapes(street_network(2)))
    assert shapes["input"] == (60, 192, 1)
    assert shapes["conv1_1"] == (56, 188, 32)
    assert shapes["conv1_2"] == (54, 186, 48)
    assert shapes["pool1"] == (18, 62, 48)
    assert shapes["conv2_1"] == (16, 60, 64)
    assert shapes["conv2_2"] == (14, 58, 96)
    assert shapes["pool2"] == (7, 29, 96)
    assert shapes["conv3_1"] == (5, 27, 144)
    assert shapes["conv3_2"] == (3, 25, 192)
    assert shapes["pool3"] == (3, 8, 192)
    assert shapes["dense1"] == (192,)
    assert shapes["dense2"] == (2,)


def test_chip_network_shapes():
    shapes = dict(infer_shapes(chip_network()))
    assert shapes["conv1_1"] == (92, 92, 32)
    assert shapes["pool1"] == (30, 30, 48)
    assert shapes["pool2"] == (13, 13, 96)
    assert shapes["pool3"] == (4, 4, 192)
    assert shapes["dense2"] == (3,)


def test_border_network_is_binary():
    net = build(border_network())
    assert net.num_classes == 2
    assert network_for(Arch.BORDER).name == "border"
    assert network_for(Arch.STREET, 2).num_classes == 2


def test_identity_spec():
    spec = NetworkSpec(name="identity", input_shape=(5, 4, 1))
    assert infer_shapes(spec) == [("input", (5, 4, 1))]


def test_kernel_too_large():
    spec = NetworkSpec(name="bad", input_shape=(4, 4, 1), layers=(conv("c1", 5, 8),))
    with pytest.raises(ShapeError) as excinfo:
        infer_shapes(spec)
    assert excinfo.value.layer == "c1"


def test_class_count_mismatch():
    spec = NetworkSpec(
        name="bad", input_shape=(4, 4, 1), layers=(dense("f1", 5), softmax_layer()), num_classes=3
    )
    with pytest.raises(ShapeError):
        infer_shapes(spec)


def test_input_shape_checked():
    net = build(tiny_spec())
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 7, 6, 1)))


# ----------
# Layer math
# ----------


def test_softmax_rows_sum_to_one():
    p = softmax(np.random.default_rng(0).normal(0, 5, (10, 3)))
    assert np.allclose(p.sum(axis=1), 1.0)


def test_zero_weights_give_uniform_output():
    net = build(tiny_spec())
    for name in net.params:
        net.params[name][...] = 0
    p = net.predict_proba(np.random.default_rng(0).random((4, 6, 7, 1)))
    assert np.allclose(p, 1 / 3)


def test_confident_logits_have_vanishing_loss():
    labels = np.array([0, 2, 1])
    logits = 10.0 * np.eye(3)[labels] * 10
    loss, _ = cross_entropy(logits, labels)
    assert loss < 1e-6


def test_gradient_check():
    rng = np.random.default_rng(42)
    net = build(tiny_spec(), seed=3, dtype=np.float64)
    x = rng.normal(0, 1, (3, 6, 7, 1))
    y = np.array([0, 1, 2])
    _, dlogits = cross_entropy(net.forward(x, training=True), y)
    grads = net.backward(dlogits)
    eps = 1e-6
    for name, param in net.params.items():
        flat = param.reshape(-1)
        for i in rng.choice(flat.size, size=min(6, flat.size), replace=False):
            saved = flat[i]
            flat[i] = saved + eps
            plus, _ = cross_entropy(net.forward(x), y)
            flat[i] = saved - eps
            minus, _ = cross_entropy(net.forward(x), y)
            flat[i] = saved
            numeric = (plus - minus) / (2 * eps)
            analytic = grads[name].reshape(-1)[i]
            assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-7), name


def test_dropout_is_off_at_inference():
    net = build(tiny_spec(rate=0.5), seed=1)
    x = np.random.default_rng(0).random((4, 6, 7, 1))
    assert np.array_equal(net.forward(x), net.forward(x))
    a = net.forward(x, training=True, rng=np.random.default_rng(1))
    b = net.forward(x, training=True, rng=np.random.default_rng(2))
    assert not np.array_equal(a, b)


# ---------
# Training
# ---------


def test_zero_learning_rate_keeps_parameters():
    rng = np.random.default_rng(0)
    net = build(tiny_spec(), seed=2)
    before = {k: v.copy() for k, v in net.params.items()}
    x, y = toy_batch(8, rng)
    train_step(net, x, y, SGD(lr=0.0), rng)
    for k, v in net.params.items():
        assert np.array_equal(v, before[k])


def test_overfits_toy_batch():
    rng = np.random.default_rng(0)
    net = build(tiny_spec(), seed=5)
    optimizer = SGD(lr=0.05, momentum=0.9)
    x, y = toy_batch(16, rng)
    for _ in range(150):
        stats = train_step(net, x, y, optimizer, rng)
    assert stats["loss"] < 0.2
    assert np.array_equal(net.predict(x), y)


def test_checkpoint_round_trip(tmp_path):
    net = build(tiny_spec(), seed=9)
    path = str(tmp_path / "tiny.kstc")
    save_network(path, net, {"arch": "street", "best_epoch": 4})
    back, extra = load_network(path)
    x = np.random.default_rng(0).random((3, 6, 7, 1))
    assert np.allclose(back.predict_proba(x), net.predict_proba(x))
    assert extra == {"arch": "street", "best_epoch": 4}
    assert back.spec == net.spec


def test_checkpoint_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_network(str(tmp_path / "none.kstc"))


def test_checkpoint_wrong_kind(tmp_path):
    from kerfscope.lib.tensorio import write_tensors

    path = str(tmp_path / "other.kstc")
    write_tensors(path, {"a": np.zeros(2)}, {"kind": "templates"})
    with pytest.raises(DataError):
        load_network(path)


# ------------
# Augmentation
# ------------


def test_null_augmentation_is_identity():
    img = np.random.default_rng(0).integers(0, 255, (60, 192), dtype=np.uint8)
    out = augment(img, AugmentSpec.identity(), np.random.default_rng(1))
    assert np.array_equal(out, img)


def test_double_flip_is_identity():
    img = np.random.default_rng(0).integers(0, 255, (60, 192), dtype=np.uint8)
    flip = AugmentParams(0.0, 1.0, 0.0, 0.0, flip_x=True, flip_y=False)
    once = apply(img, flip)
    assert np.array_equal(once, img[:, ::-1])
    assert np.array_equal(apply(once, flip), img)


def test_augmentation_keeps_shape_and_is_seeded():
    img = np.random.default_rng(0).random((60, 192)).astype(np.float32)
    a = augment(img, AugmentSpec(), np.random.default_rng(7))
    b = augment(img, AugmentSpec(), np.random.default_rng(7))
    assert a.shape == img.shape
    assert np.array_equal(a, b)


def test_augment_spec_validation():
    with pytest.raises(ValueError):
        AugmentSpec(rotation_deg=-1.0)
