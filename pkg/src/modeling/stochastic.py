"""確率的成分: 固定 AR 整形フィルタ, 三角時間包絡, 帯域ゲイン比.

r_s(t) = e(t) * [h * n](t). h は学習時に一度だけ推定する.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import butter, freqz, lfilter, sosfiltfilt

from src.analysis.residual import extract_frames
from src.errors import ArFitError
from src.logger import logger
from src.model.models import (
    GciSequence,
    NoiseModel,
    PitchTrack,
    SpeechSignal,
    TriangularEnvelope,
    is_minimum_phase,
)
from src.modeling.noise_source import gaussian_noise

__all__ = [
    "MIN_AR_ORDER",
    "PERIODOGRAM_SIZE",
    "ArFit",
    "BandStatistics",
    "accumulate_band_statistics",
    "ar_from_periodogram",
    "ar_response",
    "ar_stopband_attenuation",
    "band_energy_ratio",
    "build_envelope",
    "estimate_ar_filter",
    "generate_noise_frame",
    "is_minimum_phase",
    "levinson_durbin",
]

MIN_AR_ORDER = 2
MIN_ENVELOPE_PERIOD = 8
PERIODOGRAM_SIZE = 2048
PREFILTER_ORDER = 8
STOPBAND_OFFSET_HZ = 500.0
_DIAGONAL_LOAD = 1e-9
_WARMUP = 512


def levinson_durbin(
    r: ArrayLike, order: int
) -> tuple[NDArray[np.float64], float]:
    """自己相関 r から AR(order) 係数 (a[0] = 1) と予測誤差を求める.

    Raises:
        ArFitError: r[0] <= 0, または途中で予測誤差が 0 以下になった

    """
    rr = np.asarray(r, dtype=np.float64)
    if rr.shape[0] <= order:
        msg = f"need {order + 1} autocorrelation lags, got {rr.shape[0]}"
        raise ValueError(msg)
    if rr[0] <= 0.0:
        msg = "autocorrelation at lag 0 must be positive"
        raise ArFitError(msg)
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = float(rr[0])
    for i in range(1, order + 1):
        acc = rr[i] + np.dot(a[1:i], rr[i - 1 : 0 : -1])
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][:i]
        err *= 1.0 - k * k
        if err <= 0.0:
            msg = f"prediction error vanished at order {i}"
            raise ArFitError(msg)
    return a, err


@dataclass(frozen=True)
class ArFit:
    coefficients: NDArray[np.float64]
    gain: float

    @property
    def order(self) -> int:
        return int(self.coefficients.shape[0] - 1)


def ar_from_periodogram(power: ArrayLike, order: int) -> ArFit:
    """平均ピリオドグラムに AR(order) を当てはめる.

    不安定なら次数を 1 ずつ下げ, 最小次数 2 でも不安定なら失敗とする.
    ゲインは sqrt(err / r0) (単位分散の白色雑音を入れると出力がほぼ単位分散).
    """
    if order < MIN_AR_ORDER:
        msg = f"AR order must be >= {MIN_AR_ORDER}"
        raise ValueError(msg)
    r = np.fft.irfft(np.asarray(power, dtype=np.float64))
    r[0] *= 1.0 + _DIAGONAL_LOAD
    for p in range(order, MIN_AR_ORDER - 1, -1):
        try:
            a, err = levinson_durbin(r, p)
        except ArFitError as exc:
            logger.warning("AR(%d) fit failed (%s), reducing the order", p, exc)
            continue
        if is_minimum_phase(a):
            if p < order:
                logger.warning("AR order reduced from %d to %d", order, p)
            return ArFit(coefficients=a, gain=float(np.sqrt(err / r[0])))
        logger.warning("AR(%d) fit is not minimum phase, reducing the order", p)
    msg = f"no stable AR filter down to order {MIN_AR_ORDER}"
    raise ArFitError(msg)


@dataclass
class BandStatistics:
    """学習中に発話をまたいで積算する統計量."""

    power_sum: NDArray[np.float64]
    frame_count: int = 0
    ratio_sum: float = 0.0
    ratio_count: int = 0

    @classmethod
    def empty(cls) -> "BandStatistics":
        return cls(power_sum=np.zeros(PERIODOGRAM_SIZE // 2 + 1))

    def merge(self, other: "BandStatistics") -> None:
        self.power_sum += other.power_sum
        self.frame_count += other.frame_count
        self.ratio_sum += other.ratio_sum
        self.ratio_count += other.ratio_count

    @property
    def mean_power(self) -> NDArray[np.float64]:
        return self.power_sum / max(self.frame_count, 1)

    @property
    def band_gain_ratio(self) -> float:
        return self.ratio_sum / self.ratio_count if self.ratio_count else 0.0


def highpass(
    samples: NDArray[np.float64], sample_rate: int, cutoff: float
) -> NDArray[np.float64]:
    """F_m での Butterworth 高域通過 (ゼロ位相)."""
    if cutoff >= sample_rate / 2.0:
        return np.zeros_like(samples)
    sos = butter(
        PREFILTER_ORDER, cutoff, btype="highpass", fs=sample_rate, output="sos"
    )
    padlen = min(samples.shape[0] - 1, 3 * (2 * sos.shape[0] + 1))
    if padlen < 1:
        return samples.copy()
    return sosfiltfilt(sos, samples, padlen=padlen)


def band_energy_ratio(
    frame: NDArray[np.float64], sample_rate: int, max_voiced_frequency: float
) -> float | None:
    """sqrt(E[F_m, F_N] / E[0, F_m]). 低域エネルギーが 0 なら None."""
    spec = np.abs(np.fft.rfft(frame, n=PERIODOGRAM_SIZE)) ** 2
    freqs = np.fft.rfftfreq(PERIODOGRAM_SIZE, 1.0 / sample_rate)
    low = float(spec[freqs < max_voiced_frequency].sum())
    high = float(spec[freqs >= max_voiced_frequency].sum())
    if low <= 0.0:
        return None
    return float(np.sqrt(high / low))


def accumulate_band_statistics(
    residual: SpeechSignal,
    gci: GciSequence,
    pitch: PitchTrack,
    max_voiced_frequency: float,
    *,
    prefilter: bool = True,
) -> BandStatistics:
    """1 発話分のピッチ同期フレームから周期グラムと帯域比を積算する."""
    stats = BandStatistics.empty()
    sr = residual.sample_rate
    for frame in extract_frames(residual, gci, pitch):
        ratio = band_energy_ratio(frame.samples, sr, max_voiced_frequency)
        if ratio is not None:
            stats.ratio_sum += ratio
            stats.ratio_count += 1
    source = residual
    if prefilter:
        source = SpeechSignal(
            highpass(residual.samples, sr, max_voiced_frequency), sr
        )
    for frame in extract_frames(source, gci, pitch):
        x = frame.samples[:PERIODOGRAM_SIZE]
        stats.power_sum += np.abs(np.fft.rfft(x, n=PERIODOGRAM_SIZE)) ** 2 / x.shape[0]
        stats.frame_count += 1
    return stats


def estimate_ar_filter(
    residuals: Sequence[SpeechSignal],
    gcis: Sequence[GciSequence],
    pitches: Sequence[PitchTrack],
    order: int,
    max_voiced_frequency: float,
    *,
    prefilter: bool = True,
) -> ArFit:
    """学習残差のピッチ同期フレームの平均ピリオドグラムから h を推定する.

    Raises:
        ArFitError: フレームが 1 つも無い, または安定な AR が得られない

    """
    stats = BandStatistics.empty()
    for residual, gci, pitch in zip(residuals, gcis, pitches, strict=True):
        stats.merge(
            accumulate_band_statistics(
                residual, gci, pitch, max_voiced_frequency, prefilter=prefilter
            )
        )
    if stats.frame_count == 0:
        msg = "no residual frames to fit the AR filter"
        raise ArFitError(msg)
    return ar_from_periodogram(stats.mean_power, order)


def ar_response(
    coefficients: ArrayLike,
    gain: float,
    sample_rate: int,
    freqs: ArrayLike,
) -> NDArray[np.float64]:
    """gain / A(z) の振幅応答 (dB)."""
    _, h = freqz(
        [gain], np.asarray(coefficients), worN=np.asarray(freqs), fs=sample_rate
    )
    return 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))


def ar_stopband_attenuation(
    coefficients: ArrayLike, gain: float, sample_rate: int, max_voiced_frequency: float
) -> float:
    """[F_m, F_N] の最大値に対する F_m - 500 Hz での減衰量 (dB, 正が減衰)."""
    band = np.linspace(max_voiced_frequency, sample_rate / 2.0, 512)
    passband = float(ar_response(coefficients, gain, sample_rate, band).max())
    stop_freq = max(max_voiced_frequency - STOPBAND_OFFSET_HZ, 0.0)
    stop = float(ar_response(coefficients, gain, sample_rate, [stop_freq])[0])
    return passband - stop


def build_envelope(target_period: int, beta: float) -> TriangularEnvelope:
    """長さ 2T, index T で 1, 両端で beta の三角包絡.

    Raises:
        ValueError: T < 8, または beta が (0, 1] の外

    """
    if target_period < MIN_ENVELOPE_PERIOD:
        msg = f"target period {target_period} is shorter than {MIN_ENVELOPE_PERIOD}"
        raise ValueError(msg)
    if not 0.0 < beta <= 1.0:
        msg = "beta must lie in (0, 1]"
        raise ValueError(msg)
    t = target_period
    rising = beta + (1.0 - beta) * np.arange(t) / t
    falling = 1.0 - (1.0 - beta) * np.arange(t) / (t - 1)
    return TriangularEnvelope(
        values=np.concatenate([rising, falling]), apex_index=t, floor=beta
    )


def generate_noise_frame(
    length: int,
    noise: NoiseModel,
    envelope: TriangularEnvelope | ArrayLike,
    seed: int,
    *,
    gain: float | None = None,
) -> NDArray[np.float64]:
    """e(t) * gain * [h * n](t).

    gain は省略時 band_gain_ratio. 包絡に依存しない倍率なので,
    同じシードなら包絡 e と全 1 包絡の出力比は e に一致する.
    """
    env = np.asarray(
        envelope.values if isinstance(envelope, TriangularEnvelope) else envelope,
        dtype=np.float64,
    )
    if env.shape != (length,):
        msg = f"envelope length {env.shape} does not match frame length {length}"
        raise ValueError(msg)
    scale = noise.band_gain_ratio if gain is None else gain
    if noise.order == 0:
        shaped = noise.ar_gain * gaussian_noise(length, seed)
    else:
        n = gaussian_noise(length + _WARMUP, seed)
        shaped = lfilter([noise.ar_gain], noise.ar_coefficients, n)[_WARMUP:]
    return env * (scale * shaped)
