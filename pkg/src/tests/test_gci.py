import numpy as np
import pytest

from src.analysis.envelope import analyze_envelope, inverse_filter
from src.analysis.gci import MIN_SPACING, detect_gci, residual_polarity
from src.analysis.pitch import estimate_pitch
from src.model.config import EnvelopeConfig
from src.model.models import GciSequence, PitchTrack, SpeechSignal
from src.tests.conftest import make_speech

PULSES = np.arange(80, 16000, 160)
# 0.25 ms at 16 kHz
TOLERANCE = 4


def gci_from_speech(speech: SpeechSignal) -> GciSequence:
    """包絡解析 -> 逆フィルタ -> ピッチ推定 -> GCI 検出を通しで行う."""
    residual = inverse_filter(speech, analyze_envelope(speech, EnvelopeConfig()))
    return detect_gci(residual, estimate_pitch(speech, 60.0, 240.0))


def test_impulse_train_gives_exact_instants(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    gci = detect_gci(residual, pitch)
    # 有声区間は [0, 15920) なので最後のパルスは含まない
    assert np.array_equal(gci.instants, PULSES[PULSES < 15920])


def test_negative_polarity_is_detected(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    flipped = SpeechSignal(-residual.samples, residual.sample_rate)
    gci = detect_gci(flipped, pitch)
    assert np.array_equal(gci.instants, PULSES[PULSES < 15920])


def test_spacing_respects_the_local_period(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    noisy = residual.samples + 0.05 * np.random.default_rng(0).standard_normal(
        len(residual)
    )
    gci = detect_gci(SpeechSignal(noisy, 16000), pitch)
    spacing = np.diff(gci.instants)
    assert np.all(spacing >= MIN_SPACING * 160)
    assert np.all(spacing <= 1.5 * 160)


def test_unvoiced_track_gives_no_instants(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    silent = PitchTrack(
        times=pitch.times,
        f0=np.zeros(len(pitch)),
        voiced=np.zeros(len(pitch), dtype=bool),
        hop=pitch.hop,
        f0_min=pitch.f0_min,
        f0_max=pitch.f0_max,
    )
    assert len(detect_gci(residual, silent)) == 0


def test_gcis_stay_inside_voiced_runs(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    voiced = pitch.voiced.copy()
    voiced[40:60] = False
    f0 = np.where(voiced, 100.0, 0.0)
    gapped = PitchTrack(pitch.times, f0, voiced, 0.01, 60.0, 240.0)
    gci = detect_gci(residual, gapped)
    # フレーム 40..59 (0.395 s - 0.595 s) には GCI を置かない
    inside_gap = (gci.instants >= 6320) & (gci.instants < 9520)
    assert not np.any(inside_gap)
    assert len(gci) > 0


def test_polarity() -> None:
    x = np.zeros(400)
    x[50::100] = -1.0
    x[20::100] = 0.3
    assert residual_polarity(x, [(0, 400)], 100) == -1.0
    assert residual_polarity(-x, [(0, 400)], 100) == 1.0


@pytest.mark.parametrize("f0", [100.0, 160.0])
def test_pipeline_finds_the_pulse_instants(f0: float) -> None:
    speech = make_speech(f0, 1.0)
    period = 16000 / f0
    truth = np.array(
        [round(period / 2.0 + i * period) for i in range(int(16000 / period))]
    )
    gci = gci_from_speech(speech)
    assert len(gci) > 0
    # 推定の有声区間に入っている真のパルスだけを数える
    covered = truth[(truth >= gci.instants[0] - 2) & (truth <= gci.instants[-1] + 2)]
    nearest = np.min(np.abs(covered[:, None] - gci.instants[None, :]), axis=1)
    assert np.mean(nearest <= TOLERANCE) >= 0.95
    assert covered.size >= 0.8 * truth.size


def test_pipeline_is_polarity_invariant() -> None:
    speech = make_speech(120.0, 1.0)
    flipped = SpeechSignal(-speech.samples, speech.sample_rate)
    a = gci_from_speech(speech).instants
    b = gci_from_speech(flipped).instants
    assert a.shape == b.shape
    assert np.max(np.abs(a - b)) < TOLERANCE
