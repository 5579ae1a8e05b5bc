import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest
from scipy.signal import lfilter

# リポジトリルートを sys.path に入れる (src をパッケージとして import するため)
ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.analysis.residual import compute_normalization, pitch_window  # noqa: E402
from src.model.config import EnvelopeConfig  # noqa: E402
from src.model.models import (  # noqa: E402
    DsmModel,
    NoiseModel,
    PitchTrack,
    SpeechSignal,
)
from src.modeling.eigenbasis import fit_pca  # noqa: E402
from src.modeling.stochastic import (  # noqa: E402
    PERIODOGRAM_SIZE,
    ar_from_periodogram,
    highpass,
)
from src.signal_io.wav import write_wav  # noqa: E402

SR = 16000
# 声道の代わりに使う 2 つの共振 (Hz, 帯域幅 Hz)
FORMANTS = ((500.0, 150.0), (1500.0, 200.0))


def _resonators(x: np.ndarray) -> np.ndarray:
    y = x
    for freq, bw in FORMANTS:
        r = np.exp(-np.pi * bw / SR)
        theta = 2.0 * np.pi * freq / SR
        y = lfilter([1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r], y)
    return y


def make_pulse_train(
    f0: float, duration: float, sample_rate: int = SR
) -> np.ndarray:
    n = round(duration * sample_rate)
    x = np.zeros(n)
    period = sample_rate / f0
    pos = period / 2.0
    while pos < n:
        x[round(pos) % n] = 1.0
        pos += period
    return x


def make_speech(
    f0: float = 120.0, duration: float = 1.0, noise: float = 1e-3, seed: int = 0
) -> SpeechSignal:
    """パルス列を 2 共振のフィルタに通した有声音 (ピーク 0.5 程度)."""
    rng = np.random.default_rng(seed)
    y = _resonators(make_pulse_train(f0, duration))
    y = 0.5 * y / np.max(np.abs(y))
    return SpeechSignal(y + noise * rng.standard_normal(y.shape[0]), SR)


@pytest.fixture
def speech_factory() -> Callable[..., SpeechSignal]:
    return make_speech


@pytest.fixture
def voiced_speech() -> SpeechSignal:
    return make_speech(120.0, 1.0)


@pytest.fixture
def impulse_residual() -> tuple[SpeechSignal, PitchTrack]:
    """100 Hz のインパルス列残差と, それに合うピッチ系列 (全フレーム有声)."""
    x = make_pulse_train(100.0, 1.0)
    times = np.arange(100) * 0.01
    pitch = PitchTrack(
        times=times,
        f0=np.full(100, 100.0),
        voiced=np.ones(100, dtype=bool),
        hop=0.01,
        f0_min=60.0,
        f0_max=240.0,
    )
    return SpeechSignal(x, SR), pitch


def _training_frames(length: int, count: int, seed: int) -> np.ndarray:
    """中央にインパルスを持つ正規化フレームの人工データ (広帯域)."""
    rng = np.random.default_rng(seed)
    n = np.arange(length) - length // 2
    window = pitch_window(length)
    rows = []
    for _ in range(count):
        width = rng.uniform(1.0, 3.0)
        frame = np.where(n == 0, 1.0, 0.0)
        frame += rng.uniform(0.2, 0.6) * (-n / width) * np.exp(-0.5 * (n / width) ** 2)
        frame = (frame + 0.05 * rng.standard_normal(length)) * window
        rows.append(frame / np.linalg.norm(frame))
    return np.stack(rows)


def make_model(
    seed: int = 0, *, frames: int = 120, components: int = 16
) -> DsmModel:
    normalization = compute_normalization(SR, 4000.0, 60.0, 240.0)
    data = _training_frames(normalization.normalized_length, frames, seed)
    basis = fit_pca(data, max_components=components)
    rng = np.random.default_rng(seed + 1)
    noise = highpass(rng.standard_normal(40 * PERIODOGRAM_SIZE), SR, 4000.0)
    segments = noise.reshape(40, PERIODOGRAM_SIZE)
    power = np.mean(np.abs(np.fft.rfft(segments, axis=1)) ** 2, axis=0)
    fit = ar_from_periodogram(power / PERIODOGRAM_SIZE, 18)
    return DsmModel(
        sample_rate=SR,
        normalization=normalization,
        envelope=EnvelopeConfig(),
        basis=basis,
        noise=NoiseModel(
            ar_coefficients=fit.coefficients,
            ar_gain=fit.gain,
            beta=0.5,
            band_gain_ratio=0.3,
        ),
    )


@pytest.fixture(scope="session")
def small_model() -> DsmModel:
    return make_model()


@pytest.fixture
def wav_corpus(tmp_path: Path) -> Path:
    """2 発話 (各 1 秒, 110 Hz / 130 Hz) の WAV コーパス."""
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for i, f0 in enumerate((110.0, 130.0)):
        write_wav(make_speech(f0, 1.0, seed=i), corpus / f"utt{i:02d}.wav")
    return corpus
