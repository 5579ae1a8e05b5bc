"""残差上の声門閉鎖時刻 (GCI) 検出.

残差の極性を発話全体で決めてから, 有声区間ごとにピッチ周期で窓を
進め, 窓内の最大値を GCI とする.
"""

import numpy as np
from numpy.typing import NDArray

from src.model.models import GciSequence, PitchTrack, SpeechSignal

__all__ = ["MIN_SPACING", "detect_gci", "residual_polarity"]

# 直前の GCI から局所周期のこの割合より近い候補は取らない
MIN_SPACING = 0.5


def _period(pitch: PitchTrack, position: float, sample_rate: int) -> float:
    f0 = float(pitch.f0_at(position / sample_rate))
    return sample_rate / f0


def residual_polarity(
    x: NDArray[np.float64], runs: list[tuple[int, int]], period: int
) -> float:
    """周期ごとの極大の平均と |極小| の平均を比べ, 大きい方の符号を返す."""
    peaks: list[float] = []
    troughs: list[float] = []
    for start, end in runs:
        for s in range(start, end, period):
            seg = x[s : min(s + period, end)]
            if seg.size:
                peaks.append(float(seg.max()))
                troughs.append(float(-seg.min()))
    if not peaks:
        return 1.0
    return 1.0 if np.mean(peaks) >= np.mean(troughs) else -1.0


def detect_gci(residual: SpeechSignal, pitch: PitchTrack) -> GciSequence:
    """有声区間の各ピッチ周期に 1 つずつ GCI を置く. 無声のみなら空を返す."""
    sr = residual.sample_rate
    n = len(residual)
    runs = pitch.voiced_runs(sr, n)
    if not runs:
        return GciSequence(np.zeros(0, dtype=np.int64))

    voiced_f0 = pitch.f0[pitch.voiced]
    typical = max(2, round(sr / float(np.median(voiced_f0))))
    x = residual_polarity(residual.samples, runs, typical) * residual.samples

    instants: list[int] = []
    for start, end in runs:
        period = _period(pitch, start, sr)
        first_end = min(end, start + max(1, round(period)))
        current = start + int(np.argmax(x[start:first_end]))
        if instants and current - instants[-1] < MIN_SPACING * period:
            current = instants[-1]
        else:
            instants.append(current)
        while True:
            period = _period(pitch, current, sr)
            center = current + period
            if center >= end:
                break
            lo = max(current + int(np.ceil(MIN_SPACING * period)), start)
            hi = min(end, round(center + period / 2.0))
            if lo >= hi:
                break
            current = lo + int(np.argmax(x[lo:hi]))
            instants.append(current)
    return GciSequence(np.asarray(instants, dtype=np.int64))
