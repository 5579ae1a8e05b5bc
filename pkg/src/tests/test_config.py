import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.config import load_settings
from src.logger import logger, set_verbosity
from src.model.config import (
    GENERALIZED_GAMMA,
    EnvelopeConfig,
    NormalizationConfig,
    SynthesisOptions,
    TrainConfig,
)
from src.model.models import DsmParams, PitchTrack, SpeechSignal


@pytest.fixture
def restore_level() -> Iterator[None]:
    level = logger.level
    yield
    logger.setLevel(level)


def test_settings_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("DSM_JOBS", "4")
    monkeypatch.setenv("DSM_MODEL_PATH", "/tmp/voice.dsmb")
    settings = load_settings()
    assert settings.jobs == 4
    assert settings.model_path == Path("/tmp/voice.dsmb")


def test_negative_jobs_are_rejected(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("DSM_JOBS", "-1")
    with pytest.raises(ValidationError, match="DSM_JOBS"):
        load_settings()


@pytest.mark.usefixtures("restore_level")
def test_set_verbosity() -> None:
    set_verbosity(1)
    assert logger.level == logging.INFO
    set_verbosity(2)
    assert logger.level == logging.DEBUG


def test_envelope_gamma_is_snapped() -> None:
    assert EnvelopeConfig(gamma=-0.3333333333333).gamma == GENERALIZED_GAMMA
    assert EnvelopeConfig().fft_length(16000) == 512
    with pytest.raises(ValidationError, match="gamma"):
        EnvelopeConfig(gamma=-0.5)
    with pytest.raises(ValidationError, match="frame_shift"):
        EnvelopeConfig(frame_shift=0.03)


def test_normalization_band_condition() -> None:
    with pytest.raises(ValidationError, match="f0_star"):
        NormalizationConfig(
            f0_min=60.0, f0_max=240.0, f0_star=150.0, normalized_length=213
        )
    cfg = NormalizationConfig(
        f0_min=60.0, f0_max=240.0, f0_star=120.0, normalized_length=267
    )
    assert cfg.f0_star_bound == pytest.approx(120.0)


@pytest.mark.parametrize(
    "kwargs",
    [{"coverage": 0.0}, {"f0_min": 300.0}, {"max_voiced_frequency": 9000.0}],
)
def test_train_config_validation(kwargs: dict[str, float], tmp_path: Path) -> None:
    with pytest.raises(ValidationError):
        TrainConfig(corpus_dir=tmp_path, output=tmp_path / "m.dsmb", **kwargs)


def test_synthesis_options_validation() -> None:
    with pytest.raises(ValidationError, match="beta"):
        SynthesisOptions(beta=0.0)
    with pytest.raises(ValidationError, match="noise_gain"):
        SynthesisOptions(noise_gain=-1.0)
    with pytest.raises(ValidationError):
        SynthesisOptions(k=-1)


def test_pitch_track_validation() -> None:
    times = np.arange(3) * 0.01
    with pytest.raises(ValueError, match="f0 = 0"):
        PitchTrack(times, np.array([0.0, 100.0, 0.0]), np.zeros(3, bool), 0.01, 60, 240)
    with pytest.raises(ValueError, match="outside"):
        PitchTrack(times, np.full(3, 300.0), np.ones(3, bool), 0.01, 60, 240)
    with pytest.raises(ValueError, match="increasing"):
        PitchTrack(times[::-1], np.zeros(3), np.zeros(3, bool), 0.01, 60, 240)


def test_pitch_track_interpolation() -> None:
    track = PitchTrack(
        np.arange(4) * 0.01,
        np.array([100.0, 0.0, 120.0, 0.0]),
        np.array([True, False, True, False]),
        0.01,
        60.0,
        240.0,
    )
    assert track.f0_at([0.01])[0] == pytest.approx(110.0)
    assert track.voiced_at([0.019, 0.031]).tolist() == [True, False]
    assert track.voiced_runs(16000, 640) == [(0, 80), (240, 400)]


def test_params_validation() -> None:
    with pytest.raises(ValueError, match="positive f0"):
        DsmParams(
            times=[0.0],
            voiced=[True],
            f0=[0.0],
            weights=np.zeros((1, 0)),
            envelope=np.zeros((1, 3)),
        )
    with pytest.raises(ValueError, match="rows"):
        DsmParams(
            times=[0.0, 0.005],
            voiced=[False, False],
            f0=[0.0, 0.0],
            weights=np.zeros((1, 2)),
            envelope=np.zeros((2, 3)),
        )
    with pytest.raises(ValueError, match="strictly increasing"):
        DsmParams(
            times=[0.005, 0.005],
            voiced=[False, False],
            f0=[0.0, 0.0],
            weights=np.zeros((2, 0)),
            envelope=np.zeros((2, 3)),
        )
    with pytest.raises(ValueError, match="finite"):
        DsmParams(
            times=[0.0, 0.005],
            voiced=[True, False],
            f0=[np.inf, 0.0],
            weights=np.zeros((2, 0)),
            envelope=np.zeros((2, 3)),
        )
    params = DsmParams(
        times=[0.0, 0.005],
        voiced=[False, False],
        f0=[0.0, 0.0],
        weights=np.zeros((2, 2)),
        envelope=np.zeros((2, 3)),
    )
    assert (params.k, params.order) == (2, 2)
    assert params.duration_samples(16000) == 160
    assert not params.weights.flags.writeable


def test_speech_signal_validation() -> None:
    with pytest.raises(ValueError, match="finite"):
        SpeechSignal(np.array([0.0, np.nan]), 16000)
    with pytest.raises(ValueError, match="positive"):
        SpeechSignal(np.zeros(4), 0)
    assert SpeechSignal(np.zeros(8000), 16000).duration == 0.5
