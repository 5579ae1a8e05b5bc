"""ピッチ同期残差フレームの切り出しとピッチ・エネルギー正規化."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.signal import windows

from src.analysis.resample import resample_to_length
from src.errors import ZeroEnergyFrameError
from src.logger import logger
from src.model.config import NormalizationConfig
from src.model.models import GciSequence, PitchTrack, ResidualFrame, SpeechSignal

__all__ = [
    "IRREGULAR_RATIO",
    "FrameDataset",
    "build_dataset",
    "compute_normalization",
    "count_irregular_periods",
    "extract_frames",
    "frame_length",
    "normalize_frame",
    "pitch_window",
]

# GCI 間隔が局所周期の [1/1.5, 1.5] 倍から外れたら不規則周期として数える
IRREGULAR_RATIO = 1.5
_ZERO_ENERGY = 1e-20


def compute_normalization(
    sample_rate: int,
    max_voiced_frequency: float,
    f0_min: float,
    f0_max: float | None = None,
    f0_star: float | None = None,
) -> NormalizationConfig:
    """F0* = F_N / F_m * F0_min (等号) で正規化設定を作る.

    Args:
        sample_rate: サンプリング周波数
        max_voiced_frequency: 最大有声周波数 F_m
        f0_min: 話者の最低ピッチ
        f0_max: 話者の最高ピッチ (省略時は f0_min の 4 倍)
        f0_star: F0* を明示する場合 (上限以下であること)

    Raises:
        ValueError: F_m がナイキスト周波数を超える, または f0_star が上限を超える

    """
    nyquist = sample_rate / 2.0
    if max_voiced_frequency > nyquist:
        msg = (
            f"max voiced frequency {max_voiced_frequency} Hz "
            f"exceeds Nyquist {nyquist} Hz"
        )
        raise ValueError(msg)
    if f0_min <= 0.0:
        msg = "f0_min must be positive"
        raise ValueError(msg)
    bound = nyquist / max_voiced_frequency * f0_min
    star = bound if f0_star is None else f0_star
    if star > bound * (1.0 + 1e-12):
        msg = f"f0_star={star} Hz exceeds F_N/F_m*F0_min = {bound} Hz"
        raise ValueError(msg)
    return NormalizationConfig(
        sample_rate=sample_rate,
        max_voiced_frequency=max_voiced_frequency,
        f0_min=f0_min,
        f0_max=f0_max if f0_max is not None else 4.0 * f0_min,
        f0_star=star,
        normalized_length=round(2.0 * sample_rate / star),
    )


def frame_length(sample_rate: int, f0: float) -> int:
    """2 周期長 (GCI がちょうど中央に来るよう偶数)."""
    return 2 * max(1, round(sample_rate / f0))


def pitch_window(length: int) -> NDArray[np.float64]:
    """周期 Blackman 窓. index length//2 が頂点 (GCI) になる."""
    return windows.blackman(length, sym=False)


def extract_frames(
    residual: SpeechSignal, gci: GciSequence, pitch: PitchTrack
) -> list[ResidualFrame]:
    """GCI 中心・2 周期長の Blackman 窓フレームを切り出す.

    2 周期の台が信号の外にはみ出す GCI は捨てる (件数はログに出す).
    """
    sr = residual.sample_rate
    x = residual.samples
    n = x.shape[0]
    frames: list[ResidualFrame] = []
    skipped = 0
    for g in gci.instants.tolist():
        f0 = float(pitch.f0_at(g / sr))
        if f0 <= 0.0:
            skipped += 1
            continue
        length = frame_length(sr, f0)
        half = length // 2
        if g - half < 0 or g + half > n:
            skipped += 1
            continue
        frames.append(
            ResidualFrame(
                samples=x[g - half : g + half] * pitch_window(length),
                center_gci=g,
                source_f0=f0,
            )
        )
    if skipped:
        logger.info("skipped %d boundary GCIs", skipped)
    return frames


def normalize_frame(frame: ResidualFrame, cfg: NormalizationConfig) -> ResidualFrame:
    """normalized_length にリサンプルし, L2 ノルム 1 にする.

    Raises:
        ZeroEnergyFrameError: エネルギー 0 のフレーム
        ValueError: 正規化済みのフレームを渡した

    """
    if frame.normalized:
        msg = "frame is already normalized"
        raise ValueError(msg)
    resampled = resample_to_length(frame.samples, cfg.normalized_length)
    norm = float(np.linalg.norm(resampled))
    if norm <= _ZERO_ENERGY:
        msg = f"frame at GCI {frame.center_gci} has zero energy"
        raise ZeroEnergyFrameError(msg)
    return ResidualFrame(
        samples=resampled / norm,
        center_gci=frame.center_gci,
        source_f0=frame.source_f0,
        normalized=True,
    )


def count_irregular_periods(
    gci: GciSequence, pitch: PitchTrack, sample_rate: int
) -> int:
    """GCI 間隔が局所周期から大きく外れる箇所 (半/倍ピッチ) を数える."""
    if len(gci) < 2:  # noqa: PLR2004
        return 0
    g = gci.instants.astype(np.float64)
    spacing = np.diff(g)
    f0 = pitch.f0_at(g[:-1] / sample_rate)
    period = np.divide(sample_rate, f0, out=np.full_like(f0, np.inf), where=f0 > 0)
    ratio = spacing / period
    # 有声区間をまたぐ間隔は数えない
    within = ratio < 2.0 * IRREGULAR_RATIO
    irregular = (ratio > IRREGULAR_RATIO) | (ratio < 1.0 / IRREGULAR_RATIO)
    return int(np.count_nonzero(irregular & within))


@dataclass(frozen=True)
class FrameDataset:
    """正規化フレームの行列と除外件数."""

    matrix: NDArray[np.float64]
    rejected: int

    def __len__(self) -> int:
        return int(self.matrix.shape[0])


def build_dataset(
    frames: list[ResidualFrame], cfg: NormalizationConfig
) -> FrameDataset:
    """フレームを正規化して (n, normalized_length) の行列にまとめる."""
    rows: list[NDArray[np.float64]] = []
    rejected = 0
    for frame in frames:
        try:
            rows.append(normalize_frame(frame, cfg).samples)
        except ZeroEnergyFrameError:
            rejected += 1
    if rejected:
        logger.info("rejected %d zero-energy frames", rejected)
    matrix = (
        np.stack(rows) if rows else np.zeros((0, cfg.normalized_length), np.float64)
    )
    return FrameDataset(matrix=matrix, rejected=rejected)
