"""帯域制限付き有理数比リサンプリング (Kaiser 窓 sinc, ポリフェーズ)."""

from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.signal import firwin, resample_poly

__all__ = ["KAISER_BETA", "TAPS_PER_PHASE", "resample_to_length", "resampling_ratio"]

KAISER_BETA = 8.0
TAPS_PER_PHASE = 32
# 周期長同士の比なので分母はフレーム長程度に収まる
_MAX_DENOMINATOR = 4096


def resampling_ratio(source_length: int, target_length: int) -> Fraction:
    """target/source を既約分数で返す."""
    if source_length <= 0 or target_length <= 0:
        msg = "lengths must be positive"
        raise ValueError(msg)
    return Fraction(target_length, source_length).limit_denominator(_MAX_DENOMINATOR)


def _prototype(up: int, down: int) -> NDArray[np.float64]:
    max_rate = max(up, down)
    half = TAPS_PER_PHASE // 2 * max_rate
    return firwin(2 * half + 1, 1.0 / max_rate, window=("kaiser", KAISER_BETA))


def resample_to_length(samples: ArrayLike, target_length: int) -> NDArray[np.float64]:
    """フレームを target_length サンプルに伸縮する.

    ゼロ位相の低域通過フィルタを使うので, 中心 (GCI) の位置は保たれる.
    出力長は resample_poly の丸めに関係なく target_length にそろえる.
    """
    x = np.asarray(samples, dtype=np.float64)
    ratio = resampling_ratio(x.shape[0], target_length)
    up, down = ratio.numerator, ratio.denominator
    if up == down:
        return x.copy()
    y = resample_poly(x, up, down, window=_prototype(up, down))
    if y.shape[0] >= target_length:
        return y[:target_length]
    return np.pad(y, (0, target_length - y.shape[0]))
