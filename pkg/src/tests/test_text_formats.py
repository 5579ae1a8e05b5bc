from pathlib import Path

import numpy as np
import pytest

from src.errors import ParamsFormatError, PitchFileError
from src.model.config import EnvelopeConfig
from src.model.models import DsmParams, EnvelopeTrack, PitchTrack
from src.signal_io.text_formats import (
    read_dataset,
    read_params,
    read_pitch,
    write_csv,
    write_dataset,
    write_envelope_dump,
    write_params,
    write_pitch,
)


def _params(n: int = 4, k: int = 2, order: int = 3) -> DsmParams:
    rng = np.random.default_rng(1)
    voiced = np.array([True, True, False, True])[:n]
    return DsmParams(
        times=np.arange(n) * 0.005,
        voiced=voiced,
        f0=np.where(voiced, 123.456, 0.0),
        weights=rng.standard_normal((n, k)),
        envelope=rng.standard_normal((n, order + 1)),
        alpha=0.42,
        seed=7,
    )


def test_pitch_round_trip(tmp_path: Path) -> None:
    track = PitchTrack(
        times=np.array([0.0, 0.01, 0.02]),
        f0=np.array([0.0, 101.5, 99.25]),
        voiced=np.array([False, True, True]),
        hop=0.01,
        f0_min=60.0,
        f0_max=240.0,
    )
    write_pitch(track, tmp_path / "p.f0")
    back = read_pitch(tmp_path / "p.f0", 60.0, 240.0)
    assert np.array_equal(back.times, track.times)
    assert np.array_equal(back.f0, track.f0)
    assert np.array_equal(back.voiced, track.voiced)
    assert back.hop == pytest.approx(0.01)


def test_read_pitch_clips_and_drops_zero_f0(tmp_path: Path) -> None:
    path = tmp_path / "snack.f0"
    path.write_text("# comment\n0.00 500 1\n0.01 0 1\n0.02 30 1\n", encoding="utf-8")
    track = read_pitch(path, 60.0, 240.0)
    assert track.f0.tolist() == [240.0, 0.0, 60.0]
    assert track.voiced.tolist() == [True, False, True]


def test_read_pitch_reports_line_number(tmp_path: Path) -> None:
    path = tmp_path / "bad.f0"
    path.write_text("0.00 100 1\n0.01 100\n", encoding="utf-8")
    with pytest.raises(PitchFileError) as info:
        read_pitch(path, 60.0, 240.0)
    assert info.value.line_number == 2


def test_params_round_trip_is_exact(tmp_path: Path) -> None:
    params = _params()
    write_params(params, tmp_path / "p.txt")
    back = read_params(tmp_path / "p.txt")
    assert back.k == 2
    assert back.order == 3
    assert back.seed == 7
    assert back.alpha == 0.42
    assert np.array_equal(back.f0, params.f0)
    assert np.array_equal(back.weights, params.weights)
    assert np.array_equal(back.envelope, params.envelope)
    assert np.array_equal(back.voiced, params.voiced)


def test_params_header_format(tmp_path: Path) -> None:
    write_params(_params(), tmp_path / "p.txt")
    header = (tmp_path / "p.txt").read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("# k=2 order=3 ")
    assert "seed=7" in header


def test_empty_params_file(tmp_path: Path) -> None:
    path = tmp_path / "empty.txt"
    path.write_text("", encoding="utf-8")
    params = read_params(path)
    assert len(params) == 0


@pytest.mark.parametrize(
    ("body", "line"),
    [
        ("# k=0 order=1\n0.0 1 100 0.1 0.2\n0.005 1 100 0.1\n", 3),
        ("0.0 1 100 0.1 0.2\n", 1),
        ("# k=0 order=1\n0.0 1 0 0.1 0.2\n", 2),
        ("# k=0 order=1\n0.0 2 100 0.1 0.2\n", 2),
        ("# k=0 order=1\n0.0 1 abc 0.1 0.2\n", 2),
        ("# k=0 order=1 colour=3\n", 1),
        ("# k=0 order=1\n0.01 0 0 0.1 0.2\n0.01 0 0 0.1 0.2\n", 3),
    ],
)
def test_malformed_params_report_line_number(
    tmp_path: Path, body: str, line: int
) -> None:
    path = tmp_path / "bad.txt"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(ParamsFormatError) as info:
        read_params(path)
    assert info.value.line_number == line
    assert f":{line}:" in str(info.value)


def test_envelope_dump_has_one_line_per_frame(tmp_path: Path) -> None:
    cfg = EnvelopeConfig(order=4)
    track = EnvelopeTrack(frames=np.ones((3, 5)), config=cfg)
    write_envelope_dump(track, tmp_path / "env.txt")
    lines = (tmp_path / "env.txt").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert len(lines[0].split()) == 5


def test_dataset_round_trip(tmp_path: Path) -> None:
    matrix = np.random.default_rng(0).standard_normal((5, 7))
    write_dataset(matrix, tmp_path / "d.bin")
    assert np.array_equal(read_dataset(tmp_path / "d.bin"), matrix)


def test_write_csv_writes_header_first(tmp_path: Path) -> None:
    rows = write_csv(tmp_path / "x.csv", ["k", "value"], [(1, 0.5), (2, 0.75)])
    assert rows == 2
    text = (tmp_path / "x.csv").read_text(encoding="utf-8").splitlines()
    assert text == ["k,value", "1,0.5", "2,0.75"]
