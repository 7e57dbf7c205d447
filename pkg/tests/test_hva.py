import math

import numpy as np
import pytest

from kerfscope.lib import Orientation, Polarity, Resolution
from kerfscope.lib.error import DataError, TemplateError
from kerfscope.lib.attention.earlyvision import FeatureStack, V1Params, v1_pool, v1_simple
from kerfscope.lib.attention.hva import (
    HVAPoolParams,
    ReentrantGains,
    Template,
    TemplateBank,
    draw_street_sketch,
    hva_layer4,
    hva_pool23,
    learn_bank,
    one_shot_learn,
    template_responses,
    write_default_sketches,
)


def layer4(planes: np.ndarray) -> FeatureStack:
    features = [{"kind": "template", "index": i} for i in range(planes.shape[0])]
    return FeatureStack(planes.astype(np.float32), features, Resolution.POOL)


@pytest.fixture(scope="module")
def bank(tmp_path_factory) -> TemplateBank:
    directory = str(tmp_path_factory.mktemp("sketches"))
    write_default_sketches(directory)
    return learn_bank(directory, V1Params())


# ------------------
# One shot learning
# ------------------


def test_learning_is_deterministic():
    sketch = draw_street_sketch(Orientation.H, 2, Polarity.DARK)
    a = one_shot_learn(sketch, Orientation.H, 2, Polarity.DARK, V1Params())
    b = one_shot_learn(sketch, Orientation.H, 2, Polarity.DARK, V1Params())
    assert np.array_equal(a.weights, b.weights)


def test_template_is_unit_norm_and_non_negative():
    sketch = draw_street_sketch(Orientation.V, 1, Polarity.LIGHT)
    t = one_shot_learn(sketch, Orientation.V, 1, Polarity.LIGHT, V1Params())
    assert t.weights.min() >= 0.0
    assert float(np.linalg.norm(t.weights)) == pytest.approx(1.0, rel=1e-5)
    # odd sized, centered crop
    assert t.weights.shape[1] % 2 == 1 and t.weights.shape[2] % 2 == 1


def test_blank_sketch():
    blank = np.full((490, 490), 128, dtype=np.uint8)
    with pytest.raises(TemplateError, match="empty template"):
        one_shot_learn(blank, Orientation.H, 1, Polarity.DARK, V1Params())


def test_default_bank_has_twelve_templates(bank):
    assert len(bank) == 12
    kinds = {(t.orientation, t.width_class, t.polarity) for t in bank.templates}
    assert len(kinds) == 12


def test_bank_round_trip(bank, tmp_path):
    path = str(tmp_path / "templates.kstc")
    bank.save(path)
    back = TemplateBank.load(path)
    assert len(back) == len(bank)
    assert back.v1 == bank.v1
    for a, b in zip(back.templates, bank.templates):
        assert np.array_equal(a.weights, b.weights)
        assert a.describe() == b.describe()


def test_missing_sketch(tmp_path):
    with pytest.raises(TemplateError):
        learn_bank(str(tmp_path), V1Params())


# -------
# Layer 4
# -------


def test_neutral_modulation_is_normalized_correlation(bank):
    sketch = draw_street_sketch(Orientation.H, 2, Polarity.DARK)
    v1 = v1_pool(v1_simple(sketch, bank.v1))
    raw = template_responses(v1, bank).astype(np.float64)
    out = hva_layer4(v1, bank, pfc_gain=[0.0] * len(bank), fef_feedback=None)
    assert np.allclose(out.planes, raw / raw.max(), atol=1e-6)


def test_vertical_template_prefers_vertical_streets(bank):
    index = next(
        i
        for i, t in enumerate(bank.templates)
        if (t.orientation, t.width_class, t.polarity) == (Orientation.V, 2, Polarity.DARK)
    )
    peak = dict()
    for orientation in Orientation:
        sketch = draw_street_sketch(orientation, 2, Polarity.DARK)
        v1 = v1_pool(v1_simple(sketch, bank.v1))
        peak[orientation] = float(template_responses(v1, bank)[index].max())
    assert peak[Orientation.V] > 1.5 * peak[Orientation.H]


def test_pfc_gain_boosts_one_template(bank):
    sketch = draw_street_sketch(Orientation.H, 2, Polarity.DARK)
    v1 = v1_pool(v1_simple(sketch, bank.v1))
    gain = [0.0] * len(bank)
    gain[5] = 1.0
    plain = hva_layer4(v1, bank, normalize=False).planes
    boosted = hva_layer4(v1, bank, pfc_gain=gain, normalize=False).planes
    assert np.allclose(boosted[5], 2.0 * plain[5], rtol=1e-5)
    assert np.allclose(boosted[0], plain[0])


def test_fef_feedback_multiplies_layer4(bank):
    sketch = draw_street_sketch(Orientation.V, 3, Polarity.LIGHT)
    v1 = v1_pool(v1_simple(sketch, bank.v1))
    feedback = np.zeros(v1.shape)
    feedback[10, 20] = 1.0
    gains = ReentrantGains(v_fef_hva4=3.0, v_sp=0.3)
    plain = hva_layer4(v1, bank, normalize=False).planes
    fed = hva_layer4(v1, bank, fef_feedback=feedback, gains=gains, normalize=False).planes
    assert np.allclose(fed[:, 10, 20], 1.9 * plain[:, 10, 20], rtol=1e-5)
    mask = np.ones(v1.shape, dtype=bool)
    mask[10, 20] = False
    assert np.allclose(fed[:, mask], plain[:, mask])


def test_template_larger_than_plane(bank):
    small = v1_pool(v1_simple(np.zeros((40, 40), dtype=np.uint8), bank.v1))
    with pytest.raises(DataError):
        template_responses(small, bank)


def test_feature_count_mismatch():
    t = Template(np.ones((3, 3, 3), dtype=np.float32), Orientation.H, 1, Polarity.DARK)
    v1 = v1_pool(v1_simple(np.zeros((100, 100), dtype=np.uint8), V1Params()))
    with pytest.raises(DataError):
        template_responses(v1, TemplateBank([t]))


# ---------
# Layer 2/3
# ---------


def test_pool23_single_input():
    planes = np.zeros((1, 9, 9))
    planes[0, 4, 4] = 1.0
    out = hva_pool23(layer4(planes), HVAPoolParams(), normalize=False).planes
    assert out[0, 4, 4] == pytest.approx(2.0)


def test_pool23_zero_input():
    out = hva_pool23(layer4(np.zeros((2, 9, 9)))).planes
    assert not out.any()


def test_pool23_higher_power_favours_strong_inputs():
    planes = np.zeros((1, 9, 9))
    planes[0, 4, 4] = 1.0
    planes[0, 4, 5] = 0.5
    alone = np.zeros_like(planes)
    alone[0, 4, 4] = 1.0
    ratios = list()
    for p1 in (4.0, 8.0):
        params = HVAPoolParams(p1=p1)
        both = hva_pool23(layer4(planes), params, normalize=False).planes[0, 4, 4]
        single = hva_pool23(layer4(alone), params, normalize=False).planes[0, 4, 4]
        ratios.append(both / single)
    assert ratios[0] > ratios[1] > 1.0


def test_pool23_matches_brute_force():
    params = HVAPoolParams()
    radius = 3
    weights = {
        (dy, dx): math.exp(-(dx * dx + dy * dy) / 2.0)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
    }
    rng = np.random.default_rng(11)
    for _ in range(100):
        r = rng.random((2, 8, 8)).astype(np.float32).astype(np.float64)
        out = hva_pool23(layer4(r), params, normalize=False).planes
        for f, y, x in np.ndindex(r.shape):
            acc = 0.0
            for (dy, dx), w in weights.items():
                yy, xx = y + dy, x + dx
                if 0 <= yy < 8 and 0 <= xx < 8:
                    acc += w * r[f, yy, xx] ** params.p1
            expected = (params.v_hva4 * acc) ** params.p2
            assert out[f, y, x] == pytest.approx(expected, rel=1e-6)


def test_pool23_soft_max_limit():
    p1 = 64.0
    params = HVAPoolParams(p1=p1, p2=1 / p1)
    r = np.random.default_rng(5).uniform(0.2, 1.0, (3, 12, 12))
    out = hva_pool23(layer4(r), params, normalize=False).planes
    kernel = params.kernel()
    k = kernel.shape[0] // 2
    padded = np.pad(r, ((0, 0), (k, k), (k, k)))
    for f in range(3):
        for y in range(12):
            for x in range(12):
                window = padded[f, y : y + 2 * k + 1, x : x + 2 * k + 1]
                soft_max = params.v_hva4**params.p2 * float((kernel ** (1 / p1) * window).max())
                assert out[f, y, x] == pytest.approx(soft_max, rel=0.05)


def test_pool23_stride():
    out = hva_pool23(layer4(np.random.default_rng(0).random((1, 10, 10))), HVAPoolParams(stride=2))
    assert out.planes.shape == (1, 5, 5)
    assert out.planes.max() == pytest.approx(1.0)


def test_pool_params_validation():
    with pytest.raises(ValueError):
        HVAPoolParams(p1=0.0)
    with pytest.raises(ValueError):
        HVAPoolParams(stride=0)
