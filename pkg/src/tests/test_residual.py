import numpy as np
import pytest
from pydantic import ValidationError

from src.analysis.gci import detect_gci
from src.analysis.residual import (
    build_dataset,
    compute_normalization,
    count_irregular_periods,
    extract_frames,
    frame_length,
    normalize_frame,
    pitch_window,
)
from src.errors import ZeroEnergyFrameError
from src.model.config import NormalizationConfig
from src.model.models import GciSequence, PitchTrack, ResidualFrame, SpeechSignal


def test_default_normalization() -> None:
    cfg = compute_normalization(16000, 4000.0, 60.0)
    assert cfg.f0_star == pytest.approx(120.0)
    assert cfg.normalized_length == 267
    assert cfg.f0_max == 240.0


def test_smaller_f0_star_is_allowed() -> None:
    cfg = compute_normalization(16000, 4000.0, 60.0, 240.0, f0_star=100.0)
    assert cfg.normalized_length == 320


def test_f0_star_above_the_bound_is_rejected() -> None:
    with pytest.raises(ValueError, match="f0_star"):
        compute_normalization(16000, 4000.0, 60.0, 240.0, f0_star=130.0)


def test_max_voiced_frequency_above_nyquist() -> None:
    with pytest.raises(ValueError, match="Nyquist"):
        compute_normalization(16000, 9000.0, 60.0)


def test_config_rejects_inconsistent_length() -> None:
    with pytest.raises(ValidationError):
        NormalizationConfig(
            sample_rate=16000,
            max_voiced_frequency=4000.0,
            f0_min=60.0,
            f0_max=240.0,
            f0_star=120.0,
            normalized_length=300,
        )


def test_frame_length_is_two_periods() -> None:
    assert frame_length(16000, 100.0) == 320
    assert frame_length(16000, 150.0) % 2 == 0


def test_window_apex_is_at_the_center() -> None:
    w = pitch_window(320)
    assert int(np.argmax(w)) == 160
    assert w[160] == pytest.approx(1.0)


def test_extract_frames_centers_the_gci(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    gci = detect_gci(residual, pitch)
    frames = extract_frames(residual, gci, pitch)
    # 先頭の GCI (80) は 2 周期の台が信号の外にはみ出す
    assert len(frames) == len(gci) - 1
    for frame in frames:
        assert len(frame) == 320
        assert frame.samples[160] == pytest.approx(1.0)
        assert not frame.normalized


def test_normalize_frame_has_unit_norm_and_centered_peak(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    frames = extract_frames(residual, detect_gci(residual, pitch), pitch)
    cfg = compute_normalization(16000, 4000.0, 60.0)
    normalized = normalize_frame(frames[0], cfg)
    assert len(normalized) == 267
    assert np.linalg.norm(normalized.samples) == pytest.approx(1.0)
    assert abs(int(np.argmax(normalized.samples)) - 133.5) <= 1.0
    assert normalized.normalized


def test_zero_frame_is_rejected() -> None:
    cfg = compute_normalization(16000, 4000.0, 60.0)
    frame = ResidualFrame(samples=np.zeros(320), center_gci=500, source_f0=100.0)
    with pytest.raises(ZeroEnergyFrameError):
        normalize_frame(frame, cfg)


def test_normalizing_twice_is_an_error() -> None:
    cfg = compute_normalization(16000, 4000.0, 60.0)
    frame = ResidualFrame(
        samples=np.ones(267), center_gci=0, source_f0=100.0, normalized=True
    )
    with pytest.raises(ValueError, match="already normalized"):
        normalize_frame(frame, cfg)


def test_build_dataset_counts_rejections(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    residual, pitch = impulse_residual
    frames = extract_frames(residual, detect_gci(residual, pitch), pitch)
    frames.append(ResidualFrame(samples=np.zeros(320), center_gci=1, source_f0=100.0))
    cfg = compute_normalization(16000, 4000.0, 60.0)
    dataset = build_dataset(frames, cfg)
    assert dataset.rejected == 1
    assert dataset.matrix.shape == (len(frames) - 1, 267)
    assert np.allclose(np.linalg.norm(dataset.matrix, axis=1), 1.0)


def test_irregular_periods(
    impulse_residual: tuple[SpeechSignal, PitchTrack],
) -> None:
    _, pitch = impulse_residual
    regular = GciSequence(np.array([80, 240, 400, 560]))
    assert count_irregular_periods(regular, pitch, 16000) == 0
    halved = GciSequence(np.array([80, 240, 400, 480, 640]))
    assert count_irregular_periods(halved, pitch, 16000) == 1
