__all__ = [
    "CopySynthReport",
    "DispersionCurve",
    "DsmModel",
    "DsmParams",
    "EigenBasis",
    "EnvelopeTrack",
    "GciSequence",
    "NoiseModel",
    "PitchTrack",
    "ResidualFrame",
    "SpeechSignal",
    "SynthesisPlan",
    "TrainReport",
    "TriangularEnvelope",
    "as_rows",
    "frozen_array",
    "is_minimum_phase",
]

from dataclasses import dataclass, field
from typing import TypedDict

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.model.config import EnvelopeConfig, NormalizationConfig

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]
# 単位円にこれ以上近い根は不安定とみなす
_ROOT_MARGIN = 1.0 - 1e-9


def as_rows(values: ArrayLike, n: int) -> FloatArray:
    """n 行の 2 次元配列にそろえる (n=0 や列数 0 も許す)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2:  # noqa: PLR2004
        if arr.shape[0] != n:
            msg = f"expected {n} rows, got {arr.shape[0]}"
            raise ValueError(msg)
        return arr
    if arr.size == 0:
        return arr.reshape(n, 0)
    return arr.reshape(n, -1)


def is_minimum_phase(a: ArrayLike) -> bool:
    """AR 多項式 a の根がすべて単位円の内側にあるか."""
    coefs = np.asarray(a, dtype=np.float64)
    if coefs.shape[0] <= 1:
        return True
    return bool(np.all(np.abs(np.roots(coefs)) < _ROOT_MARGIN))


def frozen_array(values: ArrayLike, dtype: type = np.float64) -> NDArray[np.generic]:
    """読み取り専用の連続配列を作る. スレッド間で共有しても書き換わらない."""
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpeechSignal:
    """音声信号 (振幅は [-1, 1] を想定)."""

    samples: FloatArray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = frozen_array(self.samples)
        if samples.ndim != 1:
            msg = "samples must be one-dimensional"
            raise ValueError(msg)
        if self.sample_rate <= 0:
            msg = "sample_rate must be positive"
            raise ValueError(msg)
        if not np.all(np.isfinite(samples)):
            msg = "samples must be finite"
            raise ValueError(msg)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class EnvelopeTrack:
    """フレームごとのスペクトル包絡係数 c0..c_order."""

    frames: FloatArray
    config: EnvelopeConfig
    flagged: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        frames = frozen_array(self.frames)
        width = self.config.order + 1
        if frames.ndim != 2 or frames.shape[1] != width:  # noqa: PLR2004
            msg = f"envelope frames must have shape (T, {self.config.order + 1})"
            raise ValueError(msg)
        if not np.all(np.isfinite(frames)):
            msg = "envelope coefficients must be finite"
            raise ValueError(msg)
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def frame_shift(self) -> float:
        return self.config.frame_shift


@dataclass(frozen=True)
class PitchTrack:
    """ピッチ系列. 無声フレームの f0 は 0."""

    times: FloatArray
    f0: FloatArray
    voiced: NDArray[np.bool_]
    hop: float
    f0_min: float
    f0_max: float

    def __post_init__(self) -> None:
        times = frozen_array(self.times)
        f0 = frozen_array(self.f0)
        voiced = frozen_array(self.voiced, dtype=np.bool_)
        if not times.shape == f0.shape == voiced.shape:
            msg = "times, f0 and voiced must have the same length"
            raise ValueError(msg)
        if times.size > 1 and np.any(np.diff(times) <= 0.0):
            msg = "pitch times must be strictly increasing"
            raise ValueError(msg)
        if np.any(f0[~voiced] != 0.0):
            msg = "unvoiced frames must store f0 = 0"
            raise ValueError(msg)
        vf = f0[voiced]
        if vf.size and (vf.min() < self.f0_min - 1e-9 or vf.max() > self.f0_max + 1e-9):
            msg = "voiced f0 outside [f0_min, f0_max]"
            raise ValueError(msg)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "voiced", voiced)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def any_voiced(self) -> bool:
        return bool(np.any(self.voiced))

    def f0_at(self, times: ArrayLike) -> FloatArray:
        """有声フレームの f0 を線形補間する (範囲外は端の値)."""
        t = np.asarray(times, dtype=np.float64)
        if not self.any_voiced:
            return np.zeros_like(t)
        return np.interp(t, self.times[self.voiced], self.f0[self.voiced])

    def voiced_at(self, times: ArrayLike) -> NDArray[np.bool_]:
        """最も近いフレームの有声判定."""
        t = np.asarray(times, dtype=np.float64)
        if len(self) == 0:
            return np.zeros(t.shape, dtype=np.bool_)
        idx = np.clip(np.rint(t / self.hop).astype(np.int64), 0, len(self) - 1)
        return self.voiced[idx]

    def voiced_runs(self, sample_rate: int, n_samples: int) -> list[tuple[int, int]]:
        """有声区間を [start, end) のサンプル範囲で返す."""
        runs: list[tuple[int, int]] = []
        half = self.hop / 2.0
        i = 0
        n = len(self)
        while i < n:
            if not self.voiced[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and self.voiced[j + 1]:
                j += 1
            start = max(0, round((self.times[i] - half) * sample_rate))
            end = min(n_samples, round((self.times[j] + half) * sample_rate))
            if end > start:
                runs.append((start, end))
            i = j + 1
        return runs


@dataclass(frozen=True)
class GciSequence:
    """声門閉鎖時刻 (サンプル番号, 狭義単調増加)."""

    instants: IntArray

    def __post_init__(self) -> None:
        instants = frozen_array(self.instants, dtype=np.int64)
        if instants.ndim != 1:
            msg = "instants must be one-dimensional"
            raise ValueError(msg)
        if instants.size > 1 and np.any(np.diff(instants) <= 0):
            msg = "GCI instants must be strictly increasing"
            raise ValueError(msg)
        object.__setattr__(self, "instants", instants)

    def __len__(self) -> int:
        return int(self.instants.shape[0])


@dataclass(frozen=True)
class ResidualFrame:
    """GCI 中心・2 周期長・Blackman 窓の残差フレーム."""

    samples: FloatArray
    center_gci: int
    source_f0: float
    normalized: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", frozen_array(self.samples))

    def __len__(self) -> int:
        return int(self.samples.shape[0])


@dataclass(frozen=True)
class EigenBasis:
    """正規化残差フレームの主成分基底 (決定論的成分のモデル).

    eigenvalues は全スペクトル (ランクまで), eigenvectors は先頭の一部のみ保持する.
    """

    mean: FloatArray
    eigenvectors: FloatArray
    eigenvalues: FloatArray
    training_frame_count: int
    centered: bool = True
    first_weight_magnitude: float = 0.0

    def __post_init__(self) -> None:
        mean = frozen_array(self.mean)
        vectors = frozen_array(np.atleast_2d(self.eigenvectors))
        values = frozen_array(self.eigenvalues)
        if vectors.shape[1] != mean.shape[0]:
            msg = "eigenvectors must have the mean's length"
            raise ValueError(msg)
        if vectors.shape[0] > values.shape[0]:
            msg = "more eigenvectors than eigenvalues"
            raise ValueError(msg)
        if values.size > 1 and np.any(np.diff(values) > 0.0):
            msg = "eigenvalues must be sorted in descending order"
            raise ValueError(msg)
        if values.size and values.min() < 0.0:
            msg = "eigenvalues must be non-negative"
            raise ValueError(msg)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "eigenvectors", vectors)
        object.__setattr__(self, "eigenvalues", values)

    @property
    def length(self) -> int:
        return int(self.mean.shape[0])

    @property
    def n_components(self) -> int:
        return int(self.eigenvectors.shape[0])


@dataclass(frozen=True)
class DispersionCurve:
    """先頭 k 個の固有ベクトルが説明する分散の累積割合 (index 0 が k=1)."""

    cumulative_fraction: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "cumulative_fraction", frozen_array(self.cumulative_fraction)
        )

    def __len__(self) -> int:
        return int(self.cumulative_fraction.shape[0])


@dataclass(frozen=True)
class NoiseModel:
    """高域雑音のモデル: AR 整形フィルタ, 三角包絡の床値, 帯域ゲイン比."""

    ar_coefficients: FloatArray
    ar_gain: float
    beta: float
    band_gain_ratio: float

    def __post_init__(self) -> None:
        coefs = frozen_array(self.ar_coefficients)
        if coefs.ndim != 1 or coefs.size == 0 or coefs[0] != 1.0:
            msg = "ar_coefficients must be monic (a[0] == 1)"
            raise ValueError(msg)
        if not 0.0 < self.beta <= 1.0:
            msg = "beta must lie in (0, 1]"
            raise ValueError(msg)
        if not self.band_gain_ratio > 0.0:
            msg = "band_gain_ratio must be positive"
            raise ValueError(msg)
        if not is_minimum_phase(coefs):
            msg = "ar_coefficients must be minimum phase (roots inside the unit circle)"
            raise ValueError(msg)
        object.__setattr__(self, "ar_coefficients", coefs)

    @property
    def order(self) -> int:
        return int(self.ar_coefficients.shape[0] - 1)


@dataclass(frozen=True)
class TriangularEnvelope:
    """GCI を頂点とする区分線形の時間包絡."""

    values: FloatArray
    apex_index: int
    floor: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", frozen_array(self.values))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class DsmParams:
    """合成の入力パラメータ (フレームごとの有声判定, f0, PCA 重み, 包絡係数).

    k == 0 は第1固有ベクトルのみのモードで, weights は (n, 0) になる.
    """

    times: FloatArray
    voiced: NDArray[np.bool_]
    f0: FloatArray
    weights: FloatArray
    envelope: FloatArray
    frame_shift: float = 0.005
    alpha: float = 0.42
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        times = frozen_array(self.times)
        n = times.shape[0]
        voiced = frozen_array(self.voiced, dtype=np.bool_)
        f0 = frozen_array(self.f0)
        weights = frozen_array(as_rows(self.weights, n))
        envelope = frozen_array(as_rows(self.envelope, n))
        if not voiced.shape[0] == f0.shape[0] == n:
            msg = "voiced, f0 and times must have the same length"
            raise ValueError(msg)
        if np.any(f0[voiced] <= 0.0):
            msg = "voiced frames need a positive f0"
            raise ValueError(msg)
        if not np.all(np.isfinite(f0)):
            msg = "f0 must be finite"
            raise ValueError(msg)
        if np.any(np.diff(times) <= 0.0):
            msg = "times must be strictly increasing"
            raise ValueError(msg)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "voiced", voiced)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "envelope", envelope)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def k(self) -> int:
        return int(self.weights.shape[1])

    @property
    def order(self) -> int:
        return int(self.envelope.shape[1]) - 1

    def duration_samples(self, sample_rate: int) -> int:
        return round(len(self) * self.frame_shift * sample_rate)


@dataclass(frozen=True)
class SynthesisPlan:
    """合成用 GCI グリッド (位置は小数サンプル)."""

    positions: FloatArray
    f0: FloatArray
    weights: FloatArray
    frame_indices: IntArray = field(default_factory=lambda: np.zeros(0, np.int64))

    def __post_init__(self) -> None:
        positions = frozen_array(self.positions)
        n = positions.shape[0]
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "f0", frozen_array(self.f0))
        object.__setattr__(
            self,
            "weights",
            frozen_array(as_rows(self.weights, n)),
        )
        object.__setattr__(
            self, "frame_indices", frozen_array(self.frame_indices, dtype=np.int64)
        )

    def __len__(self) -> int:
        return int(self.positions.shape[0])

    @property
    def gci_targets(self) -> IntArray:
        return np.rint(self.positions).astype(np.int64)


@dataclass(frozen=True)
class DsmModel:
    """学習済みモデル一式 (DSMB ファイルの中身)."""

    sample_rate: int
    normalization: NormalizationConfig
    envelope: EnvelopeConfig
    basis: EigenBasis
    noise: NoiseModel
    version: int = 1


class TrainReport(TypedDict):
    """学習レポート (key=value 形式で出力する)."""

    utterances: int
    corpus_minutes: float
    voiced_frames: int
    rejected_frames: int
    skipped_boundary_frames: int
    irregular_periods: int
    normalized_length: int
    f0_star: float
    stored_components: int
    k_at_coverage: int
    coverage: float
    first_eigenvector_share: float
    dispersion: list[float]
    ar_order: int
    ar_stopband_db: float
    band_gain_ratio: float
    flagged_envelope_frames: int
    peak_rss_mb: float
    subspace_similarity: float | None


class CopySynthReport(TypedDict):
    """コピー合成の客観評価."""

    duration_s: float
    voiced_frames: int
    gci_count: int
    k: int
    f0_deviation_median: float
    log_spectral_distortion_db: float
    segmental_snr_db: float
    energy_hole_frames: int
    first_weight_share: float
    clipped_samples: int
