import struct
from pathlib import Path

import numpy as np
import pytest

from src.errors import (
    BadMagicError,
    ModelFormatError,
    TruncatedModelError,
    VersionMismatchError,
)
from src.model.models import DsmModel
from src.signal_io.model_file import load_model, read_model_bytes, save_model


def test_round_trip_is_bit_exact(small_model: DsmModel, tmp_path: Path) -> None:
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    loaded = load_model(path)
    assert loaded.normalization == small_model.normalization
    assert loaded.envelope == small_model.envelope
    assert np.array_equal(loaded.basis.eigenvectors, small_model.basis.eigenvectors)
    assert np.array_equal(loaded.basis.eigenvalues, small_model.basis.eigenvalues)
    assert np.array_equal(loaded.basis.mean, small_model.basis.mean)
    assert (
        loaded.basis.first_weight_magnitude
        == small_model.basis.first_weight_magnitude
    )
    assert np.array_equal(
        loaded.noise.ar_coefficients, small_model.noise.ar_coefficients
    )

    again = tmp_path / "again.dsmb"
    save_model(loaded, again)
    assert again.read_bytes() == path.read_bytes()


def test_model_file_is_small(small_model: DsmModel, tmp_path: Path) -> None:
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    assert path.stat().st_size <= 256 * 1024


def test_every_truncation_is_reported(small_model: DsmModel, tmp_path: Path) -> None:
    """どこで切れても ModelFormatError 系で失敗する (部分的な読み込みはしない)."""
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    data = path.read_bytes()
    cuts = [*range(0, len(data), 61), len(data) - 1]
    for cut in cuts:
        with pytest.raises(ModelFormatError):
            read_model_bytes(data[:cut])


def test_truncation_names_the_block(small_model: DsmModel, tmp_path: Path) -> None:
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    data = path.read_bytes()
    with pytest.raises(TruncatedModelError) as info:
        read_model_bytes(data[:-8])
    assert info.value.block == "ARCF"


def test_bad_magic(small_model: DsmModel, tmp_path: Path) -> None:
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    data = path.read_bytes()
    with pytest.raises(BadMagicError):
        read_model_bytes(b"RIFF" + data[4:])


def test_version_mismatch(small_model: DsmModel, tmp_path: Path) -> None:
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    data = path.read_bytes()
    patched = data[:4] + struct.pack("<H", 2) + data[6:]
    with pytest.raises(VersionMismatchError):
        read_model_bytes(patched)


def test_trailing_bytes(small_model: DsmModel, tmp_path: Path) -> None:
    path = tmp_path / "m.dsmb"
    save_model(small_model, path)
    with pytest.raises(ModelFormatError, match="trailing"):
        read_model_bytes(path.read_bytes() + b"\x00" * 8)


def test_missing_model(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "missing.dsmb")
