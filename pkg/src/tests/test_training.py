import logging
from pathlib import Path

import numpy as np
import pytest
from pytest_mock import MockerFixture

from src.errors import EmptyCorpusError, NoVoicedFramesError
from src.model.config import TrainConfig
from src.model.models import SpeechSignal
from src.modeling.training import list_corpus, resolve_jobs, train_model
from src.signal_io.model_file import save_model
from src.signal_io.text_formats import read_dataset
from src.signal_io.wav import write_wav


def config_for(corpus: Path, **kwargs: object) -> TrainConfig:
    return TrainConfig(corpus_dir=corpus, output=corpus.parent / "model.dsmb", **kwargs)


def test_list_corpus_is_sorted(tmp_path: Path) -> None:
    for name in ("b.wav", "a.WAV", "c.txt"):
        (tmp_path / name).write_bytes(b"")
    sub = tmp_path / "sub"
    sub.mkdir()
    (sub / "d.wav").write_bytes(b"")
    names = [p.relative_to(tmp_path).as_posix() for p in list_corpus(tmp_path)]
    assert names == ["a.WAV", "b.wav", "sub/d.wav"]


def test_list_corpus_errors(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        list_corpus(tmp_path / "missing")
    with pytest.raises(EmptyCorpusError):
        list_corpus(tmp_path)


def test_list_corpus_stops_after_max_minutes(wav_corpus: Path) -> None:
    assert len(list_corpus(wav_corpus, max_minutes=0.01)) == 1
    assert len(list_corpus(wav_corpus, max_minutes=1.0)) == 2


def test_resolve_jobs(mocker: MockerFixture) -> None:
    assert resolve_jobs(3) == 3
    mocker.patch("src.modeling.training.psutil.cpu_count", side_effect=[None, 6])
    assert resolve_jobs(0) == 6


def test_resolve_jobs_without_cpu_info(mocker: MockerFixture) -> None:
    mocker.patch("src.modeling.training.psutil.cpu_count", return_value=None)
    assert resolve_jobs(0) == 1


def test_train_report(
    wav_corpus: Path, caplog: pytest.LogCaptureFixture
) -> None:
    with caplog.at_level(logging.WARNING, logger="dsm_vocoder"):
        model, report = train_model(config_for(wav_corpus))
    assert "may not be stable" in caplog.text
    assert report["utterances"] == 2
    assert report["corpus_minutes"] == pytest.approx(2.0 / 60.0)
    assert report["normalized_length"] == 267
    assert report["f0_star"] == pytest.approx(120.0)
    assert report["voiced_frames"] > 100
    assert report["stored_components"] == model.basis.n_components <= 64
    assert 1 <= report["k_at_coverage"] <= len(report["dispersion"])
    assert report["dispersion"][-1] == pytest.approx(1.0)
    assert 2 <= report["ar_order"] <= 18
    assert report["subspace_similarity"] is None
    assert report["peak_rss_mb"] > 0.0
    assert model.basis.length == 267
    assert model.sample_rate == 16000


def test_training_is_deterministic(wav_corpus: Path, tmp_path: Path) -> None:
    first, _ = train_model(config_for(wav_corpus))
    second, _ = train_model(config_for(wav_corpus, jobs=2))
    save_model(first, tmp_path / "a.dsmb")
    save_model(second, tmp_path / "b.dsmb")
    assert (tmp_path / "a.dsmb").read_bytes() == (tmp_path / "b.dsmb").read_bytes()


def test_silent_corpus_has_no_voiced_frames(tmp_path: Path) -> None:
    corpus = tmp_path / "silence"
    corpus.mkdir()
    write_wav(SpeechSignal(np.zeros(16000), 16000), corpus / "quiet.wav")
    with pytest.raises(NoVoicedFramesError):
        train_model(config_for(corpus))


def test_dataset_dump(wav_corpus: Path, tmp_path: Path) -> None:
    dump = tmp_path / "frames.bin"
    _, report = train_model(config_for(wav_corpus, dataset_dump=dump))
    matrix = read_dataset(dump)
    assert matrix.shape == (report["voiced_frames"], 267)
    assert np.allclose(np.linalg.norm(matrix, axis=1), 1.0)


def _write_constant_pitch(path: Path, f0: float) -> None:
    rows = [f"{i * 0.01!r} {f0!r} 1" for i in range(100)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def test_external_pitch_files(wav_corpus: Path, tmp_path: Path) -> None:
    f0_dir = tmp_path / "f0"
    f0_dir.mkdir()
    _write_constant_pitch(f0_dir / "utt00.f0", 110.0)
    _write_constant_pitch(f0_dir / "utt01.f0", 130.0)
    _, report = train_model(config_for(wav_corpus, f0_dir=f0_dir))
    assert report["voiced_frames"] > 100

    (f0_dir / "utt01.f0").unlink()
    with pytest.raises(FileNotFoundError, match="utt01.f0"):
        train_model(config_for(wav_corpus, f0_dir=f0_dir))


def test_retraining_gives_a_similar_subspace(wav_corpus: Path) -> None:
    first, _ = train_model(config_for(wav_corpus))
    _, report = train_model(config_for(wav_corpus), reference=first.basis)
    assert report["subspace_similarity"] == pytest.approx(1.0)


def test_uncentered_training(wav_corpus: Path) -> None:
    model, _ = train_model(config_for(wav_corpus, center=False))
    assert not model.basis.centered
    assert np.all(model.basis.mean == 0.0)
