import numpy as np
import pytest

from core.container import MAGIC, ContainerError, TensorContainer, read_container, write_container


class TestTensorContainer:
    @pytest.mark.parametrize("dtype", [np.float32, np.complex64])
    def test_bit_exact_round_trip(self, tmp_path, dtype):
        rng = np.random.default_rng(0)
        array = rng.standard_normal((7, 3, 5)).astype(dtype)
        if np.iscomplexobj(array):
            array += 1j * rng.standard_normal(array.shape).astype(np.float32)
        meta = {"feature": {"kind": "stft", "n_fft": 1024}, "trace": ["a", "b"]}
        write_container(tmp_path / "x.jtz", array, meta)

        loaded = read_container(tmp_path / "x.jtz")
        assert loaded.array.dtype == array.dtype
        assert loaded.array.tobytes() == array.tobytes()
        assert loaded.meta == meta

    def test_float64_is_stored_as_f32(self):
        container = TensorContainer.loads(TensorContainer(np.arange(6.0).reshape(2, 3)).dumps())
        assert container.dtype_name == "f32"
        assert container.array.tolist() == [[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]]

    def test_empty_shape(self):
        assert TensorContainer.loads(TensorContainer(np.zeros((0, 88))).dumps()).array.shape == (0, 88)

    def test_bad_magic(self):
        with pytest.raises(ContainerError, match="magic"):
            TensorContainer.loads(b"NOPE\n{}\n")

    def test_truncated_payload(self):
        data = TensorContainer(np.ones((4, 4), dtype=np.float32)).dumps()
        with pytest.raises(ContainerError, match="expected 64"):
            TensorContainer.loads(data[:-1])

    @pytest.mark.parametrize(
        "header",
        [
            b"{not json}",
            b"[1, 2]",
            b'{"dtype": "f64", "shape": [1], "meta": {}}',
            b'{"dtype": "f32", "shape": [-1], "meta": {}}',
        ],
    )
    def test_bad_header(self, header):
        with pytest.raises(ContainerError):
            TensorContainer.loads(MAGIC + header + b"\n")

    def test_unterminated_header(self):
        with pytest.raises(ContainerError, match="terminated"):
            TensorContainer.loads(MAGIC + b'{"dtype": "f32"')

    def test_unserializable_meta(self):
        with pytest.raises(ContainerError):
            TensorContainer(np.zeros(1), {"bad": object()}).dumps()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ContainerError):
            read_container(tmp_path / "missing.jtz")
