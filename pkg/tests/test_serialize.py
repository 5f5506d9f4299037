import numpy as np
import pytest

from songseg.annotations import BoundarySet, TargetCurve
from songseg.errors import CompatibilityError, FormatError
from songseg.model import BoundaryNet
from songseg.optim import init_adam
from songseg.params import RunConfig
from songseg.serialize import (load_checkpoint, load_matrix, save_checkpoint,
                               save_matrix)
from songseg.spectral import FeatureMatrix
from songseg.training import TrackExample, train


def _roundtrip_matrix(tmp_path, m):
    path = tmp_path / "m.mat"
    save_matrix(m, path)
    return load_matrix(path)


class TestMatrixFile:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        values = rng.standard_normal((2, 3)).astype(np.float32)
        m = FeatureMatrix(values=values, hop_seconds=1024 / 44100 * 6,
                          pool_factor=6, pad_frames=50, kind="net_input")
        back = _roundtrip_matrix(tmp_path, m)
        assert back.values.dtype == np.float32
        np.testing.assert_array_equal(back.values, values)
        assert back.hop_seconds == m.hop_seconds
        assert back.pool_factor == 6
        assert back.pad_frames == 50

    def test_empty_matrix(self, tmp_path):
        m = FeatureMatrix(values=np.zeros((0, 0), dtype=np.float32),
                          hop_seconds=0.1, kind="net_input")
        back = _roundtrip_matrix(tmp_path, m)
        assert back.values.shape == (0, 0)

    def test_double_roundtrip_stable(self, tmp_path, rng):
        m = FeatureMatrix(values=rng.standard_normal((5, 7)).astype(np.float32),
                          hop_seconds=0.25, kind="net_input")
        once = _roundtrip_matrix(tmp_path, m)
        twice = _roundtrip_matrix(tmp_path, once)
        assert once.values.tobytes() == twice.values.tobytes()

    def test_corrupted_magic(self, tmp_path, rng):
        m = FeatureMatrix(values=rng.standard_normal((2, 2)).astype(np.float32),
                          hop_seconds=0.1, kind="net_input")
        path = tmp_path / "m.mat"
        save_matrix(m, path)
        data = bytearray(path.read_bytes())
        data[0] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_matrix(path)

    def test_bad_dtype_code(self, tmp_path, rng):
        m = FeatureMatrix(values=rng.standard_normal((2, 2)).astype(np.float32),
                          hop_seconds=0.1, kind="net_input")
        path = tmp_path / "m.mat"
        save_matrix(m, path)
        data = bytearray(path.read_bytes())
        data[16] = 9  # dtype code field
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_matrix(path)

    def test_truncated_payload(self, tmp_path, rng):
        m = FeatureMatrix(values=rng.standard_normal((4, 4)).astype(np.float32),
                          hop_seconds=0.1, kind="net_input")
        path = tmp_path / "m.mat"
        save_matrix(m, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError):
            load_matrix(path)


def _assert_checkpoint_equal(model, adam, model2, adam2):
    for name in model.params:
        np.testing.assert_array_equal(model.params[name], model2.params[name])
        np.testing.assert_array_equal(adam.m[name], adam2.m[name])
        np.testing.assert_array_equal(adam.v[name], adam2.v[name])
    assert adam.t == adam2.t
    assert (adam.lr, adam.beta1, adam.beta2, adam.eps) == \
        (adam2.lr, adam2.beta1, adam2.beta2, adam2.eps)


class TestCheckpoint:
    def test_fresh_model_roundtrip(self, tmp_path):
        run = RunConfig()
        model = BoundaryNet(input_height=80, seed=4)
        adam = init_adam(model.params)
        path = tmp_path / "c.ckpt"
        save_checkpoint(model, adam, path, run.pipeline_hash(), epoch=0)
        model2, adam2, epoch, stored = load_checkpoint(
            path, expected_hash=run.pipeline_hash())
        assert epoch == 0
        assert stored == run.pipeline_hash()
        assert model2.input_height == 80
        _assert_checkpoint_equal(model, adam, model2, adam2)

    def test_roundtrip_after_one_training_step(self, tmp_path, rng):
        run = RunConfig()
        model = BoundaryNet(input_height=12, seed=5)
        target = TargetCurve(values=np.zeros(30), frame_rate=7.177734375,
                             pad_frames=10)
        ex = TrackExample("t", rng.standard_normal((12, 30)), target,
                          BoundarySet())
        result = train(model, [ex], epochs=1, seed=5)
        path = tmp_path / "c.ckpt"
        save_checkpoint(model, result.adam, path, run.pipeline_hash(), epoch=1)
        model2, adam2, epoch, _ = load_checkpoint(path)
        assert epoch == 1
        assert adam2.t == 1
        _assert_checkpoint_equal(model, result.adam, model2, adam2)

    def test_pooling_mismatch_is_incompatible(self, tmp_path):
        run6 = RunConfig(pooling="pool6", sslm_inputs=("mfcc-cosine",))
        run23 = RunConfig(pooling="pool2_3", sslm_inputs=("mfcc-cosine",))
        model = BoundaryNet(input_height=80)
        adam = init_adam(model.params)
        path = tmp_path / "c.ckpt"
        save_checkpoint(model, adam, path, run6.pipeline_hash(), epoch=3)
        with pytest.raises(CompatibilityError):
            load_checkpoint(path, expected_hash=run23.pipeline_hash())

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\0" * 64)
        with pytest.raises(FormatError):
            load_checkpoint(path)


class TestRunConfigHash:
    def test_training_knobs_do_not_change_hash(self):
        a = RunConfig(epochs=10, seed=1)
        b = RunConfig(epochs=500, seed=99, split_seed=7, threshold=0.4)
        assert a.pipeline_hash() == b.pipeline_hash()

    def test_pipeline_knobs_change_hash(self):
        base = RunConfig()
        assert base.pipeline_hash() != RunConfig(pooling="pool2_3").pipeline_hash()
        assert base.pipeline_hash() != \
            RunConfig(sslm_inputs=("mfcc-cosine",)).pipeline_hash()

    def test_config_file_roundtrip(self, tmp_path):
        run = RunConfig(pooling="pool2_3", include_mls=True,
                        sslm_inputs=("mfcc-euclidean", "chroma-cosine"),
                        epochs=42, seed=3, split_seed=9, threshold=0.24)
        path = tmp_path / "run.cfg"
        run.to_file(path)
        back = RunConfig.from_file(path)
        assert back == run
        assert back.pipeline_hash() == run.pipeline_hash()
