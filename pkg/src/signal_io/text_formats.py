"""テキスト系ファイル形式 (ピッチ, パラメータ, 包絡ダンプ, CSV) とデータセットダンプ."""

import csv
import struct
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from src.errors import ParamsFormatError, PitchFileError
from src.model.models import DsmParams, EnvelopeTrack, PitchTrack

__all__ = [
    "read_dataset",
    "read_params",
    "read_pitch",
    "write_csv",
    "write_dataset",
    "write_envelope_dump",
    "write_params",
    "write_pitch",
]

_DATASET_HEADER = struct.Struct("<QQ")
_PARAMS_HEADER_KEYS = ("k", "order", "alpha", "gamma", "seed", "shift")


def _fmt(value: float) -> str:
    # repr は locale に依存せず, float を厳密に往復できる
    return repr(float(value))


def write_pitch(track: PitchTrack, path: str | Path) -> None:
    """1 行 1 フレーム `time_s f0_hz voiced{0|1}`."""
    lines = [
        f"{_fmt(t)} {_fmt(f)} {int(v)}"
        for t, f, v in zip(track.times, track.f0, track.voiced, strict=True)
    ]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_pitch(
    path: str | Path, f0_min: float, f0_max: float, hop: float | None = None
) -> PitchTrack:
    """外部ピッチファイル (Snack 互換の `time f0 voiced` 行) を読む.

    有声フレームの f0 は [f0_min, f0_max] にクリップする.
    """
    p = Path(path)
    times: list[float] = []
    f0s: list[float] = []
    flags: list[bool] = []
    for number, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 3:  # noqa: PLR2004
            raise PitchFileError(str(p), number, "expected `time f0 voiced`")
        try:
            t, f, v = float(fields[0]), float(fields[1]), int(fields[2])
        except ValueError as exc:
            raise PitchFileError(str(p), number, str(exc)) from exc
        if v not in (0, 1):
            raise PitchFileError(str(p), number, "voiced flag must be 0 or 1")
        voiced = v == 1 and f > 0.0
        times.append(t)
        f0s.append(min(max(f, f0_min), f0_max) if voiced else 0.0)
        flags.append(voiced)
    if hop is None:
        hop = float(np.median(np.diff(times))) if len(times) > 1 else 0.01
    try:
        return PitchTrack(
            times=np.array(times),
            f0=np.array(f0s),
            voiced=np.array(flags, dtype=bool),
            hop=hop,
            f0_min=f0_min,
            f0_max=f0_max,
        )
    except ValueError as exc:
        raise PitchFileError(str(p), 0, str(exc)) from exc


def write_params(params: DsmParams, path: str | Path) -> None:
    """パラメータファイルを書く.

    先頭行は `# k=.. order=.. alpha=.. gamma=.. seed=.. shift=..`,
    以降 1 行 1 フレーム `time voiced f0 w1..wk c0..c_order`.
    """
    header = (
        f"# k={params.k} order={params.order} alpha={_fmt(params.alpha)} "
        f"gamma={_fmt(params.gamma)} seed={params.seed} "
        f"shift={_fmt(params.frame_shift)}"
    )
    lines = [header]
    for i in range(len(params)):
        fields = [_fmt(params.times[i]), str(int(params.voiced[i])), _fmt(params.f0[i])]
        fields.extend(_fmt(w) for w in params.weights[i])
        fields.extend(_fmt(c) for c in params.envelope[i])
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_header(path: str, number: int, line: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for token in line.lstrip("#").split():
        key, sep, value = token.partition("=")
        if not sep or key not in _PARAMS_HEADER_KEYS:
            raise ParamsFormatError(path, number, f"unknown header field {token!r}")
        try:
            values[key] = float(value)
        except ValueError as exc:
            raise ParamsFormatError(path, number, str(exc)) from exc
    for key in ("k", "order"):
        if key not in values:
            raise ParamsFormatError(path, number, f"header lacks `{key}=`")
    return values


def read_params(path: str | Path) -> DsmParams:
    """パラメータファイルを読む. 空ファイルは 0 フレームとして扱う."""
    p = Path(path)
    name = str(p)
    header: dict[str, float] | None = None
    rows: list[list[float]] = []
    for number, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header is None and not rows:
                header = _parse_header(name, number, line)
            continue
        if header is None:
            raise ParamsFormatError(name, number, "frame line before the header")
        k, order = int(header["k"]), int(header["order"])
        expected = 3 + k + order + 1
        fields = line.split()
        if len(fields) != expected:
            msg = f"expected {expected} fields, got {len(fields)}"
            raise ParamsFormatError(name, number, msg)
        try:
            row = [float(x) for x in fields]
        except ValueError as exc:
            raise ParamsFormatError(name, number, str(exc)) from exc
        if row[1] not in (0.0, 1.0):
            raise ParamsFormatError(name, number, "voiced flag must be 0 or 1")
        if row[1] == 1.0 and row[2] <= 0.0:
            raise ParamsFormatError(name, number, "voiced frame needs f0 > 0")
        if not all(np.isfinite(row)):
            raise ParamsFormatError(name, number, "non-finite value")
        if rows and row[0] <= rows[-1][0]:
            raise ParamsFormatError(name, number, "time must increase")
        rows.append(row)

    header = header or {"k": 0.0, "order": 0.0}
    k, order = int(header["k"]), int(header["order"])
    table = np.array(rows, dtype=np.float64).reshape(len(rows), 3 + k + order + 1)
    voiced = table[:, 1] == 1.0
    return DsmParams(
        times=table[:, 0],
        voiced=voiced,
        f0=np.where(voiced, table[:, 2], 0.0),
        weights=table[:, 3 : 3 + k],
        envelope=table[:, 3 + k :],
        frame_shift=header.get("shift", 0.005),
        alpha=header.get("alpha", 0.42),
        gamma=header.get("gamma", 0.0),
        seed=int(header.get("seed", 0)),
    )


def write_envelope_dump(track: EnvelopeTrack, path: str | Path) -> None:
    """1 行 1 フレーム, c0..c_order を空白区切りで書く."""
    text = "".join(" ".join(_fmt(c) for c in row) + "\n" for row in track.frames)
    Path(path).write_text(text, encoding="utf-8")


def write_dataset(matrix: NDArray[np.float64], path: str | Path) -> None:
    """正規化フレーム行列を u64 行数, u64 長さ + 行優先 f64 で書く."""
    m = np.ascontiguousarray(matrix, dtype="<f8")
    rows, length = m.shape
    Path(path).write_bytes(_DATASET_HEADER.pack(rows, length) + m.tobytes())


def read_dataset(path: str | Path) -> NDArray[np.float64]:
    data = Path(path).read_bytes()
    rows, length = _DATASET_HEADER.unpack_from(data, 0)
    return np.frombuffer(
        data, dtype="<f8", count=rows * length, offset=_DATASET_HEADER.size
    ).reshape(rows, length)


def write_csv(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float | int]]
) -> int:
    """ヘッダ付き CSV を書き, データ行数を返す."""
    count = 0
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
            count += 1
    return count
