"""客観評価の指標."""

import librosa
import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.model.models import PitchTrack, SpeechSignal

__all__ = [
    "HOLE_DEPTH_DB",
    "HOLE_WIDTH_HZ",
    "band_edge",
    "f0_deviation",
    "find_energy_holes",
    "log_spectral_distortion",
    "segmental_snr",
    "spectral_flatness",
]

SNR_FLOOR_DB = -10.0
SNR_CEILING_DB = 35.0
HOLE_WIDTH_HZ = 500.0
HOLE_DEPTH_DB = 30.0
_PERIODOGRAM_SIZE = 2048
_SILENCE_DB = -60.0
_EPS = 1e-12


def _frames(x: NDArray[np.float64], length: int, hop: int) -> NDArray[np.float64]:
    if x.shape[0] < length:
        return np.zeros((0, length))
    return np.lib.stride_tricks.sliding_window_view(x, length)[::hop]


def segmental_snr(
    reference: SpeechSignal, estimate: SpeechSignal, frame_length: float = 0.02
) -> float:
    """フレームごとの SNR を [-10, 35] dB にクリップして平均する.

    参照信号の無音フレーム (最大フレームより 60 dB 以上小さい) は除く.
    """
    n = min(len(reference), len(estimate))
    length = round(frame_length * reference.sample_rate)
    ref = _frames(reference.samples[:n], length, length)
    err = ref - _frames(estimate.samples[:n], length, length)
    if ref.shape[0] == 0:
        return float("nan")
    signal_energy = np.sum(ref**2, axis=1)
    active = signal_energy > signal_energy.max() * 10.0 ** (_SILENCE_DB / 10.0)
    if not np.any(active):
        return float("nan")
    snr = 10.0 * np.log10(
        (signal_energy[active] + _EPS) / (np.sum(err[active] ** 2, axis=1) + _EPS)
    )
    return float(np.mean(np.clip(snr, SNR_FLOOR_DB, SNR_CEILING_DB)))


def log_spectral_distortion(
    reference: SpeechSignal,
    estimate: SpeechSignal,
    max_frequency: float,
    n_mels: int = 40,
    n_fft: int = 512,
) -> float:
    """max_frequency 以下のメル帯域の対数スペクトル歪み (dB, フレームの中央値)."""
    sr = reference.sample_rate
    n = min(len(reference), len(estimate))
    if n < n_fft:
        return float("nan")
    mel = librosa.filters.mel(sr=sr, n_fft=n_fft, n_mels=n_mels, fmax=max_frequency)

    def _mel_db(x: NDArray[np.float64]) -> NDArray[np.float64]:
        spec = np.abs(librosa.stft(x[:n], n_fft=n_fft, hop_length=n_fft // 4)) ** 2
        return 10.0 * np.log10(mel @ spec + _EPS)

    ref_db = _mel_db(reference.samples)
    est_db = _mel_db(estimate.samples)
    level = ref_db.max(axis=0)
    active = level > level.max() + _SILENCE_DB
    if not np.any(active):
        return float("nan")
    diff = ref_db[:, active] - est_db[:, active]
    return float(np.median(np.sqrt(np.mean(diff**2, axis=0))))


def f0_deviation(reference: PitchTrack, estimate: PitchTrack) -> float:
    """両方で有声のフレームの相対 f0 誤差 |f - f_ref| / f_ref の中央値."""
    n = min(len(reference), len(estimate))
    both = reference.voiced[:n] & estimate.voiced[:n]
    if not np.any(both):
        return float("nan")
    ref = reference.f0[:n][both]
    return float(np.median(np.abs(estimate.f0[:n][both] - ref) / ref))


def spectral_flatness(frame: ArrayLike) -> float:
    """ピリオドグラムの幾何平均 / 算術平均 (0..1)."""
    x = np.asarray(frame, dtype=np.float64)
    flatness = librosa.feature.spectral_flatness(
        y=x, n_fft=x.shape[0], hop_length=x.shape[0], center=False, power=2.0
    )
    return float(flatness[0, 0])


def _periodogram_db(
    frame: ArrayLike, sample_rate: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x = np.asarray(frame, dtype=np.float64)
    power = np.abs(np.fft.rfft(x, n=max(_PERIODOGRAM_SIZE, x.shape[0]))) ** 2
    freqs = np.fft.rfftfreq(max(_PERIODOGRAM_SIZE, x.shape[0]), 1.0 / sample_rate)
    return freqs, 10.0 * np.log10(power + _EPS)


def find_energy_holes(
    frame: ArrayLike,
    sample_rate: int,
    max_voiced_frequency: float,
    *,
    width: float = HOLE_WIDTH_HZ,
    depth: float = HOLE_DEPTH_DB,
) -> list[tuple[float, float]]:
    """F_m 以下で, 低域平均より depth dB 以上低い幅 width Hz 超の帯域を返す."""
    freqs, db = _periodogram_db(frame, sample_rate)
    low = freqs < max_voiced_frequency
    mean_power = np.mean(10.0 ** (db[low] / 10.0))
    threshold = 10.0 * np.log10(mean_power + _EPS) - depth
    below = (db < threshold) & low
    holes: list[tuple[float, float]] = []
    i = 0
    while i < below.shape[0]:
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < below.shape[0] and below[j + 1]:
            j += 1
        if freqs[j] - freqs[i] > width:
            holes.append((float(freqs[i]), float(freqs[j])))
        i = j + 1
    return holes


def band_edge(frame: ArrayLike, sample_rate: int, drop_db: float = 40.0) -> float:
    """最大値から drop_db 以内にある最も高い周波数 (Hz)."""
    freqs, db = _periodogram_db(frame, sample_rate)
    within = np.flatnonzero(db >= db.max() - drop_db)
    return float(freqs[within[-1]])
