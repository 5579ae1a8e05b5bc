"""コーパスからの DSM モデル学習.

発話ごとに 包絡解析 -> 逆フィルタ -> ピッチ/GCI -> フレーム切り出し・正規化
を行い (並列可), 全フレームで PCA, ピッチ同期フレームの平均ピリオドグラムで
AR フィルタを推定する.
"""

from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import psutil
from numpy.typing import NDArray

from src.analysis.envelope import analyze_envelope, inverse_filter
from src.analysis.gci import detect_gci
from src.analysis.pitch import estimate_pitch
from src.analysis.residual import (
    build_dataset,
    compute_normalization,
    count_irregular_periods,
    extract_frames,
)
from src.errors import EmptyCorpusError, NoVoicedFramesError
from src.logger import logger
from src.model.config import SAMPLE_RATE, NormalizationConfig, TrainConfig
from src.model.models import DsmModel, EigenBasis, NoiseModel, PitchTrack, TrainReport
from src.modeling.eigenbasis import (
    dispersion,
    fit_pca,
    select_components,
    subspace_similarity,
)
from src.modeling.stochastic import (
    BandStatistics,
    accumulate_band_statistics,
    ar_from_periodogram,
    ar_stopband_attenuation,
)
from src.signal_io.text_formats import read_pitch, write_dataset
from src.signal_io.wav import read_wav, require_sample_rate, wav_duration

__all__ = [
    "PITCH_FILE_SUFFIX",
    "SUFFICIENT_MINUTES",
    "UtteranceAnalysis",
    "analyze_utterance",
    "list_corpus",
    "resolve_jobs",
    "train_model",
]

# これ以上の学習データでは固有ベクトルがほぼ変わらない
SUFFICIENT_MINUTES = 10.0
PITCH_FILE_SUFFIX = ".f0"
SIMILARITY_COMPONENTS = 15


@dataclass
class UtteranceAnalysis:
    """1 発話の解析結果 (ワーカープロセスから返す)."""

    name: str
    duration: float
    frames: NDArray[np.float64]
    rejected: int
    skipped: int
    irregular: int
    flagged: int
    bands: BandStatistics


def list_corpus(corpus_dir: Path, max_minutes: float | None = None) -> list[Path]:
    """コーパス内の WAV をパス順に並べる. max_minutes で先頭から打ち切る.

    Raises:
        FileNotFoundError: ディレクトリが無い
        EmptyCorpusError: WAV が 1 つも無い

    """
    if not corpus_dir.is_dir():
        msg = f"corpus directory not found: {corpus_dir}"
        raise FileNotFoundError(msg)
    paths = sorted(p for p in corpus_dir.rglob("*") if p.suffix.lower() == ".wav")
    if not paths:
        msg = f"no WAV files in {corpus_dir}"
        raise EmptyCorpusError(msg)
    if max_minutes is None:
        return paths
    selected: list[Path] = []
    total = 0.0
    for path in paths:
        if total >= max_minutes * 60.0:
            break
        selected.append(path)
        total += wav_duration(path)
    return selected


def resolve_jobs(jobs: int) -> int:
    """0 は物理コア数 (取れなければ論理コア数)."""
    if jobs > 0:
        return jobs
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def _pitch_for(
    path: Path, config: TrainConfig, signal_samples: int
) -> PitchTrack | None:
    if config.f0_dir is None:
        return None
    pitch_path = config.f0_dir / f"{path.stem}{PITCH_FILE_SUFFIX}"
    if not pitch_path.is_file():
        msg = f"pitch file not found: {pitch_path}"
        raise FileNotFoundError(msg)
    track = read_pitch(pitch_path, config.f0_min, config.f0_max)
    logger.debug(
        "%s: %d external pitch frames for %d samples",
        path.name,
        len(track),
        signal_samples,
    )
    return track


def analyze_utterance(
    path: Path, config: TrainConfig, normalization: NormalizationConfig
) -> UtteranceAnalysis:
    """1 発話から正規化フレームと AR 用統計量を取り出す."""
    signal = read_wav(path)
    require_sample_rate(signal, str(path))
    envelope = analyze_envelope(signal, config.envelope)
    residual = inverse_filter(signal, envelope)
    pitch = _pitch_for(path, config, len(signal))
    if pitch is None:
        pitch = estimate_pitch(signal, config.f0_min, config.f0_max, config.pitch)
    gci = detect_gci(residual, pitch)
    frames = extract_frames(residual, gci, pitch)
    dataset = build_dataset(frames, normalization)
    bands = accumulate_band_statistics(
        residual,
        gci,
        pitch,
        normalization.max_voiced_frequency,
        prefilter=config.noise.prefilter,
    )
    logger.info(
        "%s: %.2f s, %d GCIs, %d frames",
        path.name,
        signal.duration,
        len(gci),
        len(dataset),
    )
    return UtteranceAnalysis(
        name=path.name,
        duration=signal.duration,
        frames=dataset.matrix,
        rejected=dataset.rejected,
        skipped=len(gci) - len(frames),
        irregular=count_irregular_periods(gci, pitch, signal.sample_rate),
        flagged=len(envelope.flagged),
        bands=bands,
    )


def _analyze_all(
    paths: list[Path], config: TrainConfig, normalization: NormalizationConfig
) -> Iterator[UtteranceAnalysis]:
    jobs = resolve_jobs(config.jobs)
    if jobs == 1 or len(paths) == 1:
        for path in paths:
            yield analyze_utterance(path, config, normalization)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map は入力順に結果を返すので, 並列でもモデルは同一になる
        yield from pool.map(
            analyze_utterance,
            paths,
            [config] * len(paths),
            [normalization] * len(paths),
        )


def _rss_mb() -> float:
    return psutil.Process().memory_info().rss / 2**20


def train_model(
    config: TrainConfig, reference: EigenBasis | None = None
) -> tuple[DsmModel, TrainReport]:
    """コーパスからモデルを学習し, 学習レポートと一緒に返す.

    Args:
        config: 学習設定
        reference: 固有ベクトルの安定性を比べる既存モデルの基底

    Raises:
        EmptyCorpusError: WAV が無い
        NoVoicedFramesError: 有声フレームが 2 つ未満

    """
    normalization = compute_normalization(
        SAMPLE_RATE,
        config.max_voiced_frequency,
        config.f0_min,
        config.f0_max,
        config.f0_star,
    )
    paths = list_corpus(config.corpus_dir, config.max_minutes)
    logger.info("training on %d utterances from %s", len(paths), config.corpus_dir)

    chunks: list[NDArray[np.float64]] = []
    bands = BandStatistics.empty()
    duration = 0.0
    rejected = skipped = irregular = flagged = 0
    peak_rss = _rss_mb()
    for result in _analyze_all(paths, config, normalization):
        chunks.append(result.frames)
        bands.merge(result.bands)
        duration += result.duration
        rejected += result.rejected
        skipped += result.skipped
        irregular += result.irregular
        flagged += result.flagged
        peak_rss = max(peak_rss, _rss_mb())

    matrix = np.concatenate(chunks, axis=0)
    if matrix.shape[0] < 2:  # noqa: PLR2004
        msg = f"no voiced frames in {config.corpus_dir} ({matrix.shape[0]} found)"
        raise NoVoicedFramesError(msg)
    if config.dataset_dump is not None:
        write_dataset(matrix, config.dataset_dump)

    minutes = duration / 60.0
    if minutes < SUFFICIENT_MINUTES:
        logger.warning(
            "corpus holds %.1f minutes; eigenvectors may not be stable below %.0f",
            minutes,
            SUFFICIENT_MINUTES,
        )

    basis = fit_pca(matrix, center=config.center, max_components=config.max_components)
    curve = dispersion(basis)
    fit = ar_from_periodogram(bands.mean_power, config.noise.ar_order)
    noise = NoiseModel(
        ar_coefficients=fit.coefficients,
        ar_gain=fit.gain,
        beta=config.noise.beta,
        band_gain_ratio=bands.band_gain_ratio,
    )
    model = DsmModel(
        sample_rate=SAMPLE_RATE,
        normalization=normalization,
        envelope=config.envelope,
        basis=basis,
        noise=noise,
    )
    peak_rss = max(peak_rss, _rss_mb())

    total = float(basis.eigenvalues.sum())
    first_share = float(basis.eigenvalues[0]) / total if total else 1.0
    report: TrainReport = {
        "utterances": len(paths),
        "corpus_minutes": minutes,
        "voiced_frames": int(matrix.shape[0]),
        "rejected_frames": rejected,
        "skipped_boundary_frames": skipped,
        "irregular_periods": irregular,
        "normalized_length": normalization.normalized_length,
        "f0_star": normalization.f0_star,
        "stored_components": basis.n_components,
        "k_at_coverage": select_components(curve, config.coverage),
        "coverage": config.coverage,
        "first_eigenvector_share": first_share,
        "dispersion": curve.cumulative_fraction.tolist(),
        "ar_order": fit.order,
        "ar_stopband_db": ar_stopband_attenuation(
            fit.coefficients, fit.gain, SAMPLE_RATE, normalization.max_voiced_frequency
        ),
        "band_gain_ratio": noise.band_gain_ratio,
        "flagged_envelope_frames": flagged,
        "peak_rss_mb": peak_rss,
        "subspace_similarity": (
            subspace_similarity(basis, reference, SIMILARITY_COMPONENTS)
            if reference is not None
            else None
        ),
    }
    return model, report
