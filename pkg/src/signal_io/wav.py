"""16 bit PCM モノラル WAV の読み書き."""

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from src.errors import WavFormatError
from src.logger import logger
from src.model.config import SAMPLE_RATE
from src.model.models import SpeechSignal

__all__ = ["PCM_SCALE", "read_wav", "require_sample_rate", "wav_duration", "write_wav"]

PCM_SCALE = 32768.0
_MAX_AMPLITUDE = 1.0 - 1.0 / PCM_SCALE


def read_wav(path: str | Path) -> SpeechSignal:
    """WAV を読み込み, 振幅を 1/32768 倍して返す.

    Args:
        path: RIFF/WAVE, PCM 16 bit, モノラルのファイル

    Raises:
        FileNotFoundError: ファイルが無い
        WavFormatError: PCM16 モノラル以外 (ダウンミックスはしない)

    """
    p = Path(path)
    if not p.is_file():
        msg = f"WAV file not found: {p}"
        raise FileNotFoundError(msg)
    try:
        rate, data = wavfile.read(p)
    except ValueError as exc:
        msg = f"{p}: not a readable RIFF/WAVE file ({exc})"
        raise WavFormatError(msg) from exc
    if data.dtype != np.int16:
        msg = f"{p}: only 16-bit PCM is supported, got {data.dtype}"
        raise WavFormatError(msg)
    if data.ndim != 1:
        msg = f"{p}: only mono is supported, got {data.shape[1]} channels"
        raise WavFormatError(msg)
    return SpeechSignal(data.astype(np.float64) / PCM_SCALE, int(rate))


def write_wav(signal: SpeechSignal, path: str | Path) -> int:
    """16 bit PCM モノラルで書き出す.

    [-1, 1 - 1/32768] にクリップしてから量子化する.

    Returns:
        int: クリップしたサンプル数

    """
    x = signal.samples
    clipped = int(np.count_nonzero((x < -1.0) | (x > _MAX_AMPLITUDE)))
    if clipped:
        logger.warning("clipped %d samples while writing %s", clipped, path)
    pcm = np.rint(np.clip(x, -1.0, _MAX_AMPLITUDE) * PCM_SCALE).astype(np.int16)
    wavfile.write(Path(path), signal.sample_rate, pcm)
    return clipped


def require_sample_rate(signal: SpeechSignal, source: str = "input") -> None:
    """学習とコピー合成は 16 kHz のみ受け付ける (リサンプルはしない)."""
    if signal.sample_rate != SAMPLE_RATE:
        msg = (
            f"{source}: sample rate {signal.sample_rate} Hz is not supported, "
            f"expected {SAMPLE_RATE} Hz"
        )
        raise WavFormatError(msg)


def wav_duration(path: str | Path) -> float:
    """サンプルを読み込まずに長さ (秒) を返す."""
    p = Path(path)
    try:
        rate, data = wavfile.read(p, mmap=True)
    except ValueError as exc:
        msg = f"{p}: not a readable RIFF/WAVE file ({exc})"
        raise WavFormatError(msg) from exc
    return data.shape[0] / rate
