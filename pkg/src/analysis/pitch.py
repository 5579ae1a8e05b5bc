"""正規化自己相関によるピッチ推定.

40 ms 窓, 10 ms シフト. 自己相関ピーク (> 0.30) と
フレームエネルギー (発話 RMS の 2% 超) で有声判定し, 長さ 5 のメディアンで平滑化する.
"""

import math

import numpy as np
from numpy.typing import NDArray
from scipy.signal import medfilt

from src.logger import logger
from src.model.config import PitchConfig
from src.model.models import PitchTrack, SpeechSignal

__all__ = ["OCTAVE_TOLERANCE", "estimate_pitch", "normalized_autocorrelation"]

# 最大ピークのこの割合以上の最初の極大を採用する (倍周期誤りの抑制)
OCTAVE_TOLERANCE = 0.9


def _framed(x: NDArray[np.float64], win: int, hop: int) -> NDArray[np.float64]:
    n_frames = -(-x.shape[0] // hop)
    padded = np.pad(x, (win // 2, win // 2 + hop))
    frames = np.lib.stride_tricks.sliding_window_view(padded, win)[::hop][:n_frames]
    return frames - frames.mean(axis=1, keepdims=True)


def normalized_autocorrelation(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    """フレームごとの正規化相互相関 r[l] / sqrt(E_head[l] * E_tail[l]).

    Args:
        frames: (T, W) のフレーム行列

    Returns:
        NDArray[np.float64]: (T, W), lag 0 は 1 (無音フレームは 0)

    """
    n_frames, win = frames.shape
    nfft = 1 << (2 * win - 1).bit_length()
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    r = np.fft.irfft(np.abs(spec) ** 2, n=nfft, axis=1)[:, :win]
    cs = np.concatenate(
        [np.zeros((n_frames, 1)), np.cumsum(frames**2, axis=1)], axis=1
    )
    lags = np.arange(win)
    head = cs[:, win - lags]
    tail = cs[:, [win]] - cs[:, lags]
    denom = np.sqrt(head * tail)
    out = np.zeros_like(r)
    np.divide(r, denom, out=out, where=denom > 1e-20)
    return out


def _pick_lag(
    nccf: NDArray[np.float64], lag_min: int, lag_max: int
) -> tuple[float, float]:
    """最初の十分高い極大のラグ (放物線補間) とその値."""
    seg = nccf[lag_min : lag_max + 1]
    peak = float(seg.max())
    if peak <= 0.0:
        return 0.0, 0.0
    best = int(np.argmax(seg))
    for i in range(1, seg.shape[0] - 1):
        if seg[i] >= OCTAVE_TOLERANCE * peak and seg[i - 1] <= seg[i] >= seg[i + 1]:
            best = i
            break
    lag = best + lag_min
    value = float(nccf[lag])
    delta = 0.0
    if 0 < lag < nccf.shape[0] - 1:
        left, right = nccf[lag - 1], nccf[lag + 1]
        curvature = left - 2.0 * value + right
        if curvature < 0.0:
            delta = float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))
    return lag + delta, value


def estimate_pitch(
    signal: SpeechSignal,
    f0_min: float,
    f0_max: float,
    cfg: PitchConfig | None = None,
) -> PitchTrack:
    """ピッチ系列を推定する. 無音は全フレーム無声になる.

    Raises:
        ValueError: 0 < f0_min < f0_max < sample_rate/4 を満たさない

    """
    sr = signal.sample_rate
    if not 0.0 < f0_min < f0_max < sr / 4.0:
        msg = f"pitch range must satisfy 0 < f0_min < f0_max < {sr / 4.0}"
        raise ValueError(msg)
    cfg = (cfg or PitchConfig()).model_copy(update={"f0_min": f0_min, "f0_max": f0_max})
    win = round(cfg.window * sr)
    hop = round(cfg.hop * sr)
    lag_min = max(2, math.floor(sr / f0_max))
    lag_max = min(win - 2, math.ceil(sr / f0_min))

    x = signal.samples
    n_frames = -(-x.shape[0] // hop)
    times = np.arange(n_frames) * hop / sr
    if n_frames == 0:
        empty = np.zeros(0)
        return PitchTrack(times, empty, empty.astype(bool), cfg.hop, f0_min, f0_max)

    frames = _framed(x, win, hop)
    utterance_rms = float(np.sqrt(np.mean(x**2)))
    frame_rms = np.sqrt(np.mean(frames**2, axis=1))
    nccf = normalized_autocorrelation(frames)

    raw = np.zeros(n_frames)
    for i in range(n_frames):
        if utterance_rms <= 0.0 or frame_rms[i] <= cfg.energy_gate * utterance_rms:
            continue
        lag, value = _pick_lag(nccf[i], lag_min, lag_max)
        if value > cfg.voicing_threshold and lag > 0.0:
            raw[i] = sr / lag

    smoothed = medfilt(raw, cfg.median_length) if n_frames >= cfg.median_length else raw
    voiced = smoothed > 0.0
    f0 = np.where(voiced, np.clip(smoothed, f0_min, f0_max), 0.0)
    logger.debug(
        "pitch: %d frames, %d voiced, range %.1f-%.1f Hz",
        n_frames,
        int(voiced.sum()),
        f0_min,
        f0_max,
    )
    return PitchTrack(
        times=times, f0=f0, voiced=voiced, hop=cfg.hop, f0_min=f0_min, f0_max=f0_max
    )
