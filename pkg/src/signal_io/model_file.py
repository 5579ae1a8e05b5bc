"""DSMB モデルコンテナ.

レイアウト (すべてリトルエンディアン)::

    "DSMB" | version u16 | sample_rate u32
    block* : tag 4 bytes | count u64 | count x f64

ブロックは NORM, ENVC, EIGH, MEAN, EVAL, EVEC, NOIS, ARCF の順に並ぶ.
整数値も f64 で保存する (2^53 未満なので値は厳密に戻る).
"""

import struct
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import ValidationError

from src.errors import (
    BadMagicError,
    ModelFormatError,
    TruncatedModelError,
    VersionMismatchError,
)
from src.model.config import EnvelopeConfig, NormalizationConfig
from src.model.models import DsmModel, EigenBasis, NoiseModel

__all__ = ["MAGIC", "MODEL_VERSION", "load_model", "read_model_bytes", "save_model"]

MAGIC = b"DSMB"
MODEL_VERSION = 1

_HEADER = struct.Struct("<4sHI")
_BLOCK_HEADER = struct.Struct("<4sQ")
_BLOCK_ORDER = ("NORM", "ENVC", "EIGH", "MEAN", "EVAL", "EVEC", "NOIS", "ARCF")
_WINDOW_CODES = {"hamming": 0.0, "hanning": 1.0, "blackman": 2.0}


def _block(tag: str, values: NDArray[np.float64] | list[float]) -> bytes:
    payload = np.ascontiguousarray(values, dtype="<f8").ravel()
    return _BLOCK_HEADER.pack(tag.encode("ascii"), payload.size) + payload.tobytes()


def _encode(model: DsmModel) -> bytes:
    norm = model.normalization
    env = model.envelope
    basis = model.basis
    noise = model.noise
    blocks = {
        "NORM": [
            float(norm.sample_rate),
            norm.max_voiced_frequency,
            norm.f0_min,
            norm.f0_max,
            norm.f0_star,
            float(norm.normalized_length),
        ],
        "ENVC": [
            env.alpha,
            env.gamma,
            float(env.order),
            env.frame_shift,
            env.frame_length,
            _WINDOW_CODES[env.window],
        ],
        "EIGH": [
            float(basis.n_components),
            float(basis.length),
            float(basis.training_frame_count),
            1.0 if basis.centered else 0.0,
            basis.first_weight_magnitude,
        ],
        "MEAN": basis.mean,
        "EVAL": basis.eigenvalues,
        "EVEC": basis.eigenvectors,
        "NOIS": [noise.ar_gain, noise.beta, noise.band_gain_ratio],
        "ARCF": noise.ar_coefficients,
    }
    parts = [_HEADER.pack(MAGIC, model.version, model.sample_rate)]
    parts.extend(_block(tag, blocks[tag]) for tag in _BLOCK_ORDER)
    return b"".join(parts)


def save_model(model: DsmModel, path: str | Path) -> None:
    Path(path).write_bytes(_encode(model))


def _read_blocks(data: bytes) -> dict[str, NDArray[np.float64]]:
    offset = _HEADER.size
    blocks: dict[str, NDArray[np.float64]] = {}
    for expected in _BLOCK_ORDER:
        if len(data) < offset + _BLOCK_HEADER.size:
            raise TruncatedModelError(expected)
        tag_raw, count = _BLOCK_HEADER.unpack_from(data, offset)
        tag = tag_raw.decode("ascii", errors="replace")
        if tag != expected:
            msg = f"unexpected block {tag!r}, expected {expected}"
            raise ModelFormatError(msg)
        offset += _BLOCK_HEADER.size
        end = offset + 8 * count
        if len(data) < end:
            raise TruncatedModelError(expected)
        blocks[expected] = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset = end
    if offset != len(data):
        msg = f"{len(data) - offset} trailing bytes after the last block"
        raise ModelFormatError(msg)
    return blocks


def _expect(blocks: dict[str, NDArray[np.float64]], tag: str, size: int) -> None:
    if blocks[tag].size != size:
        msg = f"block {tag} holds {blocks[tag].size} values, expected {size}"
        raise ModelFormatError(msg)


def read_model_bytes(data: bytes) -> DsmModel:
    """バイト列から DsmModel を復元する."""
    if len(data) < len(MAGIC):
        raise TruncatedModelError("file header")
    if data[: len(MAGIC)] != MAGIC:
        msg = f"bad magic {data[: len(MAGIC)]!r}, expected {MAGIC!r}"
        raise BadMagicError(msg)
    if len(data) < _HEADER.size:
        raise TruncatedModelError("file header")
    _, version, sample_rate = _HEADER.unpack_from(data, 0)
    if version != MODEL_VERSION:
        msg = f"model version {version} is not supported (expected {MODEL_VERSION})"
        raise VersionMismatchError(msg)
    blocks = _read_blocks(data)
    try:
        return _decode(blocks, int(sample_rate), int(version))
    except (ValidationError, ValueError) as exc:
        msg = f"inconsistent model payload: {exc}"
        raise ModelFormatError(msg) from exc


def _decode(
    blocks: dict[str, NDArray[np.float64]], sample_rate: int, version: int
) -> DsmModel:
    _expect(blocks, "NORM", 6)
    _expect(blocks, "ENVC", 6)
    _expect(blocks, "EIGH", 5)
    _expect(blocks, "NOIS", 3)
    sr, f_m, f0_min, f0_max, f0_star, length = blocks["NORM"].tolist()
    normalization = NormalizationConfig(
        sample_rate=int(sr),
        max_voiced_frequency=f_m,
        f0_min=f0_min,
        f0_max=f0_max,
        f0_star=f0_star,
        normalized_length=int(length),
    )
    alpha, gamma, order, shift, flen, window_code = blocks["ENVC"].tolist()
    windows = {v: k for k, v in _WINDOW_CODES.items()}
    if window_code not in windows:
        msg = f"unknown analysis window code {window_code}"
        raise ModelFormatError(msg)
    envelope = EnvelopeConfig(
        alpha=alpha,
        gamma=gamma,
        order=int(order),
        frame_shift=shift,
        frame_length=flen,
        window=windows[window_code],  # pyright: ignore[reportArgumentType]
    )
    n_comp, n_len, n_frames, centered, first_mag = blocks["EIGH"].tolist()
    _expect(blocks, "MEAN", int(n_len))
    _expect(blocks, "EVEC", int(n_comp) * int(n_len))
    basis = EigenBasis(
        mean=blocks["MEAN"],
        eigenvectors=blocks["EVEC"].reshape(int(n_comp), int(n_len)),
        eigenvalues=blocks["EVAL"],
        training_frame_count=int(n_frames),
        centered=bool(centered),
        first_weight_magnitude=first_mag,
    )
    ar_gain, beta, ratio = blocks["NOIS"].tolist()
    noise = NoiseModel(
        ar_coefficients=blocks["ARCF"],
        ar_gain=ar_gain,
        beta=beta,
        band_gain_ratio=ratio,
    )
    return DsmModel(
        sample_rate=sample_rate,
        normalization=normalization,
        envelope=envelope,
        basis=basis,
        noise=noise,
        version=version,
    )


def load_model(path: str | Path) -> DsmModel:
    p = Path(path)
    if not p.is_file():
        msg = f"model file not found: {p}"
        raise FileNotFoundError(msg)
    return read_model_bytes(p.read_bytes())
