import math

import numpy as np
import pytest

import dnefc


def naive_conv(x, k, b, stride, pad):
    h, w, cin = x.shape
    ks, _, _, cout = k.shape
    xp = np.zeros((h + 2 * pad, w + 2 * pad, cin))
    xp[pad:pad + h, pad:pad + w] = x
    oh = (h + 2 * pad - ks) // stride + 1
    ow = (w + 2 * pad - ks) // stride + 1
    out = np.zeros((oh, ow, cout))
    for y in range(oh):
        for x_ in range(ow):
            patch = xp[y * stride:y * stride + ks, x_ * stride:x_ * stride + ks]
            out[y, x_] = np.tensordot(patch, k, axes=([0, 1, 2], [0, 1, 2])) + b
    return out


def test_default_spec_param_count():
    spec = dnefc.default_spec()
    assert spec.param_count == 995874
    assert spec.output_shapes[4] == [1568]
    again = dnefc.NetworkSpec.from_json(spec.to_json())
    assert again.param_count == spec.param_count


def test_conv_matches_numpy():
    rng = np.random.default_rng(0)
    for stride, pad in [(1, 0), (2, 1)]:
        x = rng.standard_normal((9, 7, 3)).astype(np.float32)
        k = rng.standard_normal((3, 3, 3, 5)).astype(np.float32)
        b = rng.standard_normal(5).astype(np.float32)
        got = dnefc.conv2d(x, k, b, stride, pad)
        np.testing.assert_allclose(got, naive_conv(x, k, b, stride, pad), atol=1e-5)


def test_preprocessing():
    assert dnefc.fisher_z(0.5) == pytest.approx(math.atanh(0.5), abs=1e-12)
    out = dnefc.scale_and_threshold(np.array([[0.0, 0.2], [0.6, 1.0]]))
    np.testing.assert_array_equal(out, [[0.0, 0.2], [1.0, 1.0]])
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(100), rng.standard_normal(100)
    assert dnefc.pearson_corr(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)


def test_forward_and_training():
    cfg = dnefc.SynthConfig()
    cfg.n_rois, cfg.n_per_class_train, cfg.n_per_class_test = 16, 6, 4
    cfg.separability = 0.3
    train, test = dnefc.generate_dataset(cfg)
    assert len(train) == 12 and len(test) == 8
    assert train[0].values.shape == (16, 16)

    spec = dnefc.compact_spec(16, 8)
    genome = dnefc.glorot_init(spec, 3)
    p0, p1 = dnefc.forward(spec, genome, train[0])
    assert p0 + p1 == pytest.approx(1.0)
    assert dnefc.predict(0.5, 0.5) == dnefc.Label.LGG

    tc = dnefc.TrainConfig()
    tc.max_generations = 5
    tc.master_seed = 2
    parent, stats = dnefc.train(spec, train, test, tc)
    assert len(stats) == 5
    assert all(s["worst_child"] <= s["mean_child"] <= s["best_child"] for s in stats)
    assert parent.shape == (spec.param_count,)
    _, stats4 = dnefc.train(spec, train, test, tc, threads=4)
    assert stats == stats4

    sal, target = dnefc.occlusion_saliency(spec, parent, test[0])
    assert sal.shape == (16, 16)
    assert sal.min() >= 0.0 and sal.max() <= 1.0


def test_errors_map_to_python_exceptions(tmp_path):
    cfg = dnefc.SynthConfig()
    cfg.separability = 2.0
    with pytest.raises(dnefc._dnefc.ValidationError):
        cfg.validate()
    with pytest.raises(dnefc._dnefc.IoError):
        dnefc.load_checkpoint(tmp_path / "missing.dnec")
