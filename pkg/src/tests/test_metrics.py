import math

import numpy as np
import pytest
from scipy.signal import butter, sosfilt

from src.evaluation.metrics import (
    band_edge,
    f0_deviation,
    find_energy_holes,
    log_spectral_distortion,
    segmental_snr,
    spectral_flatness,
)
from src.model.models import PitchTrack, SpeechSignal


def track(f0: float, voiced: np.ndarray) -> PitchTrack:
    n = voiced.shape[0]
    return PitchTrack(
        times=np.arange(n) * 0.01,
        f0=np.where(voiced, f0, 0.0),
        voiced=voiced,
        hop=0.01,
        f0_min=60.0,
        f0_max=240.0,
    )


def test_segmental_snr_limits(voiced_speech: SpeechSignal) -> None:
    assert segmental_snr(voiced_speech, voiced_speech) == pytest.approx(35.0)
    silent = SpeechSignal(np.zeros(len(voiced_speech)), 16000)
    assert segmental_snr(voiced_speech, silent) == pytest.approx(0.0, abs=1e-6)


def test_segmental_snr_of_silence_is_undefined() -> None:
    silent = SpeechSignal(np.zeros(1600), 16000)
    assert math.isnan(segmental_snr(silent, silent))


def test_log_spectral_distortion(voiced_speech: SpeechSignal) -> None:
    assert log_spectral_distortion(voiced_speech, voiced_speech, 4000.0) == 0.0
    louder = SpeechSignal(voiced_speech.samples * 10.0, 16000)
    lsd = log_spectral_distortion(voiced_speech, louder, 4000.0)
    assert lsd == pytest.approx(20.0, abs=0.1)


def test_f0_deviation() -> None:
    voiced = np.ones(50, dtype=bool)
    assert f0_deviation(track(100.0, voiced), track(102.0, voiced)) == pytest.approx(
        0.02
    )
    unvoiced = np.zeros(50, dtype=bool)
    assert math.isnan(f0_deviation(track(100.0, voiced), track(100.0, unvoiced)))


def test_spectral_flatness() -> None:
    noise = np.random.default_rng(0).standard_normal(2048)
    sine = np.sin(2.0 * np.pi * 64.0 * np.arange(2048) / 2048)
    assert spectral_flatness(noise) > 0.3
    assert spectral_flatness(sine) < 0.01


def test_white_noise_has_no_energy_holes() -> None:
    noise = np.random.default_rng(1).standard_normal(2048)
    assert find_energy_holes(noise, 16000, 4000.0) == []


def test_lowpassed_noise_has_a_hole_below_fm() -> None:
    noise = np.random.default_rng(2).standard_normal(8192)
    sos = butter(12, 1500.0, fs=16000, output="sos")
    frame = sosfilt(sos, noise)[4096:6144]
    holes = find_energy_holes(frame, 16000, 4000.0)
    assert holes
    low, high = holes[-1]
    assert 1500.0 < low < 3000.0
    assert high == pytest.approx(4000.0, abs=20.0)


def test_band_edge_of_a_windowed_sine() -> None:
    n = np.arange(512)
    frame = np.hanning(512) * np.sin(2.0 * np.pi * 1000.0 * n / 16000)
    assert 1000.0 <= band_edge(frame, 16000) < 1200.0
