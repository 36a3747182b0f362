import numpy as np
import pytest

from wbdwi.errors import ValidationError
from wbdwi.wbw1 import (
    ActivationLayer,
    BatchNormLayer,
    CHANNELS,
    ConvLayer,
    SegModelWeights,
    load_weights,
    save_weights,
)


def random_weights(seed=0, scale=0.05) -> SegModelWeights:
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(4):
        cin, cout = CHANNELS[i], CHANNELS[i + 1]
        layers.append(ConvLayer(
            f"conv{i + 1}",
            rng.normal(0, scale, size=(cout, cin, 3, 3, 3)).astype(np.float32),
            rng.normal(0, scale, size=cout).astype(np.float32),
        ))
        if i < 3:
            layers.append(BatchNormLayer(
                f"bn{i + 1}",
                rng.uniform(0.5, 1.5, size=cout).astype(np.float32),
                rng.normal(0, 0.1, size=cout).astype(np.float32),
                rng.normal(0, 0.1, size=cout).astype(np.float32),
                rng.uniform(0.5, 2.0, size=cout).astype(np.float32),
                1e-3,
            ))
            layers.append(ActivationLayer(f"act{i + 1}", "relu"))
        else:
            layers.append(ActivationLayer(f"act{i + 1}", "sigmoid"))
    return SegModelWeights(tuple(layers))


def test_round_trip_bitwise(tmp_path):
    weights = random_weights(3)
    path = tmp_path / "model.wbw1"
    save_weights(weights, path)
    back = load_weights(path)
    assert len(back.layers) == len(weights.layers)
    for a, b in zip(weights.layers, back.layers):
        assert a.name == b.name
        if isinstance(a, ConvLayer):
            np.testing.assert_array_equal(a.weight, b.weight)
            np.testing.assert_array_equal(a.bias, b.bias)
        elif isinstance(a, BatchNormLayer):
            np.testing.assert_array_equal(a.gamma, b.gamma)
            np.testing.assert_array_equal(a.running_var, b.running_var)
            assert a.eps == pytest.approx(b.eps)
        else:
            assert a.fn == b.fn


def test_channel_mismatch_names_layer():
    rng = np.random.default_rng(0)
    bad = ConvLayer(
        "conv2",
        rng.normal(size=(48, 16, 3, 3, 3)).astype(np.float32),
        np.zeros(48, np.float32),
    )
    good = random_weights()
    layers = list(good.layers)
    layers[3] = bad
    with pytest.raises(ValidationError, match="conv2"):
        SegModelWeights(tuple(layers))


def test_nonfinite_parameter_rejected():
    good = random_weights()
    layers = list(good.layers)
    weight = np.array(layers[0].weight, copy=True)
    weight[0, 0, 0, 0, 0] = np.inf
    layers[0] = ConvLayer("conv1", weight, layers[0].bias)
    with pytest.raises(ValidationError, match="non-finite"):
        SegModelWeights(tuple(layers))


def test_negative_variance_rejected():
    good = random_weights()
    layers = list(good.layers)
    bn = layers[1]
    var = np.array(bn.running_var, copy=True)
    var[0] = -1.0
    layers[1] = BatchNormLayer(bn.name, bn.gamma, bn.beta, bn.running_mean, var, bn.eps)
    with pytest.raises(ValidationError, match="variance"):
        SegModelWeights(tuple(layers))


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.wbw1"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValidationError, match="magic"):
        load_weights(path)


def test_wrong_kernel_shape_rejected(tmp_path):
    weights = random_weights()
    path = tmp_path / "model.wbw1"
    save_weights(weights, path)
    # corrupt the declared shape in the header
    raw = bytearray(path.read_bytes())
    import json
    import struct

    (hlen,) = struct.unpack_from("<I", raw, 4)
    doc = json.loads(raw[8:8 + hlen].decode())
    doc["layers"][0]["shape"] = [16, 2, 5, 5, 5]
    new_header = json.dumps(doc).encode()
    out = raw[:4] + struct.pack("<I", len(new_header)) + new_header + raw[8 + hlen:]
    path.write_bytes(bytes(out))
    with pytest.raises(ValidationError):
        load_weights(path)


def test_zero_weights_chain_is_valid(tmp_path):
    weights = SegModelWeights.zeros()
    path = tmp_path / "zeros.wbw1"
    save_weights(weights, path)
    back = load_weights(path)
    assert len(back.layers) == 11
