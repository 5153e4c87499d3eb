import numpy as np
import pandas as pd
import pytest

from errors import FieldError, GridError
from snapshots import (MAGIC, decode_snapshot, encode_snapshot, heatmap_plane, read_snapshot,
                       snapshot_frame, write_csv, write_heatmap, write_snapshot)
from spectral_core import Grid, ScalarField, band_limited_field


@pytest.fixture
def field():
    """Random band-limited field on a 2D grid of period 3"""
    return band_limited_field(Grid(2, 16, 3.0), np.random.default_rng(21), 4)


def test_header_layout(field):
    """Test magic, version, dimension, sizes and period in the header"""
    data = encode_snapshot(field)

    assert data[:4] == MAGIC
    assert int.from_bytes(data[4:6], "little") == 1
    assert int.from_bytes(data[6:8], "little") == 2
    assert int.from_bytes(data[8:12], "little") == 16
    assert len(data) == 8 + 4 * 2 + 8 + 8 * 256


def test_file_round_trip_is_bit_exact(tmp_path, field):
    path = write_snapshot(tmp_path / "u.fpde", field)
    restored = read_snapshot(path)

    assert restored.grid == field.grid
    assert np.array_equal(restored.values, field.values)


def test_decode_rejects_bad_magic(field):
    data = bytearray(encode_snapshot(field))
    data[:4] = b"XXXX"
    with pytest.raises(FieldError):
        decode_snapshot(bytes(data))


def test_decode_rejects_truncated_data(field):
    data = encode_snapshot(field)
    with pytest.raises(FieldError):
        decode_snapshot(data[:-8])
    with pytest.raises(FieldError):
        decode_snapshot(data[:3])


def test_decode_rejects_unsupported_version(field):
    data = bytearray(encode_snapshot(field))
    data[4:6] = (2).to_bytes(2, "little")
    with pytest.raises(FieldError):
        decode_snapshot(bytes(data))


def test_decode_rejects_bad_grid(field):
    """Test that a header with a non power-of-two size raises GridError"""
    data = bytearray(encode_snapshot(field))
    data[8:12] = (12).to_bytes(4, "little")
    data[12:16] = (12).to_bytes(4, "little")
    with pytest.raises(GridError):
        decode_snapshot(bytes(data))


def test_read_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_snapshot(tmp_path / "missing.fpde")


def test_snapshot_frame_and_csv(tmp_path, field):
    frame = snapshot_frame(field)

    assert list(frame.columns) == ["x1", "x2", "value"]
    assert len(frame) == 256
    path = write_csv(tmp_path / "u.csv", field)
    restored = pd.read_csv(path, float_precision="round_trip")
    assert np.array_equal(restored["value"].to_numpy(), field.values.ravel())


@pytest.mark.parametrize("dim, shape", [(1, (8, 32)), (2, (32, 32)), (3, (16, 16))])
def test_heatmap_plane_shape(dim, shape):
    n = 32 if dim < 3 else 16
    plane = heatmap_plane(ScalarField.constant(Grid(dim, n), 1.0))

    assert plane.shape == shape


def test_write_heatmap(tmp_path, field):
    """Test the P6 header, pixel count and returned normalization"""
    path = tmp_path / "u.ppm"
    low, high = write_heatmap(path, field)
    data = path.read_bytes()
    header = b"P6\n16 16\n255\n"

    assert data.startswith(header)
    assert len(data) == len(header) + 16 * 16 * 3
    assert (low, high) == (field.values.min(), field.values.max())
    pixels = np.frombuffer(data[len(header):], dtype=np.uint8)
    assert pixels.min() == 0 and pixels.max() == 255


def test_write_heatmap_with_fixed_range_and_constant(tmp_path):
    path = tmp_path / "flat.ppm"
    constant = ScalarField.constant(Grid(2, 16), 2.0)

    assert write_heatmap(path, constant, (0.0, 4.0)) == (0.0, 4.0)
    pixels = np.frombuffer(path.read_bytes()[len(b"P6\n16 16\n255\n"):], dtype=np.uint8)
    assert set(pixels.tolist()) == {128}
    write_heatmap(path, constant)
    pixels = np.frombuffer(path.read_bytes()[len(b"P6\n16 16\n255\n"):], dtype=np.uint8)
    assert set(pixels.tolist()) == {0}
