"""シード指定のガウス雑音源 (Philox カウンタ方式 + Box-Muller)."""

import numpy as np
from numpy.typing import NDArray

__all__ = ["UNVOICED_STREAM", "VOICED_STREAM", "frame_seed", "gaussian_noise"]

VOICED_STREAM = 0
UNVOICED_STREAM = 1


def frame_seed(master: int, index: int, stream: int = VOICED_STREAM) -> int:
    """マスターシードとフレーム番号からフレームごとのシードを導く.

    stream で有声フレームと無声区間の系列を分ける.
    """
    entropy = [master, stream, index]
    state = np.random.SeedSequence(entropy).generate_state(1, np.uint64)
    return int(state[0])


def gaussian_noise(length: int, seed: int) -> NDArray[np.float64]:
    """N(0, 1) の系列. 同じシードなら同じ系列を返す."""
    if length < 0:
        msg = "length must be non-negative"
        raise ValueError(msg)
    bitgen = np.random.Philox(np.random.SeedSequence(seed))
    pairs = (length + 1) // 2
    u = np.random.Generator(bitgen).random(2 * pairs)
    # 1 - u は (0, 1] なので log(0) にならない
    radius = np.sqrt(-2.0 * np.log1p(-u[:pairs]))
    angle = 2.0 * np.pi * u[pairs:]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:length]
