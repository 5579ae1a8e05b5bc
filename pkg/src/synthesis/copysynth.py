"""コピー合成: 音声を解析して DSM パラメータを作り, そのまま合成し直す."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.analysis.envelope import analyze_envelope, inverse_filter
from src.analysis.gci import detect_gci
from src.analysis.pitch import estimate_pitch
from src.analysis.residual import extract_frames, normalize_frame
from src.errors import WavFormatError, ZeroEnergyFrameError
from src.evaluation.metrics import (
    f0_deviation,
    find_energy_holes,
    log_spectral_distortion,
    segmental_snr,
)
from src.logger import logger
from src.model.config import SynthesisOptions
from src.model.models import (
    CopySynthReport,
    DsmModel,
    DsmParams,
    EnvelopeTrack,
    PitchTrack,
    SpeechSignal,
)
from src.modeling.eigenbasis import project
from src.modeling.noise_source import VOICED_STREAM, frame_seed
from src.synthesis.vocoder import plan_gci_grid, synth_voiced_frame, vocode

__all__ = [
    "CopySynthesisResult",
    "ParamAnalysis",
    "analyze_params",
    "copy_synthesis",
    "count_energy_hole_frames",
]


@dataclass(frozen=True)
class CopySynthesisResult:
    audio: SpeechSignal
    params: DsmParams
    envelope: EnvelopeTrack
    pitch: PitchTrack
    report: CopySynthReport


@dataclass(frozen=True)
class ParamAnalysis:
    """解析で得たパラメータと途中結果."""

    params: DsmParams
    envelope: EnvelopeTrack
    pitch: PitchTrack
    gci_count: int
    first_weight_share: float


def _frame_weights(
    centers: NDArray[np.int64],
    weights: NDArray[np.float64],
    times: NDArray[np.float64],
    sample_rate: int,
    k: int,
) -> NDArray[np.float64]:
    """包絡フレームごとに, 最も近い GCI フレームの重みを割り当てる."""
    if centers.size == 0:
        return np.zeros((times.shape[0], k))
    if centers.size == 1:
        return np.repeat(weights[:1, :k], times.shape[0], axis=0)
    pos = times * sample_rate
    right = np.clip(np.searchsorted(centers, pos), 1, centers.size - 1)
    left = right - 1
    nearest = np.where(pos - centers[left] <= centers[right] - pos, left, right)
    return weights[nearest, :k]


def analyze_params(
    signal: SpeechSignal,
    model: DsmModel,
    k: int = 0,
    seed: int = 0,
    pitch: PitchTrack | None = None,
) -> ParamAnalysis:
    """音声から DsmParams (5 ms 刻み) を求める.

    Raises:
        WavFormatError: サンプリング周波数がモデルと異なる
        ValueError: k が保存済み固有ベクトル数を超える

    """
    if signal.sample_rate != model.sample_rate:
        msg = (
            f"input sample rate {signal.sample_rate} Hz does not match the model "
            f"({model.sample_rate} Hz)"
        )
        raise WavFormatError(msg)
    basis = model.basis
    if k > basis.n_components:
        msg = f"k={k} exceeds the {basis.n_components} stored eigenvectors"
        raise ValueError(msg)
    sr = signal.sample_rate
    norm = model.normalization
    envelope = analyze_envelope(signal, model.envelope)
    residual = inverse_filter(signal, envelope)
    if pitch is None:
        pitch = estimate_pitch(signal, norm.f0_min, norm.f0_max)
    gci = detect_gci(residual, pitch)

    centers: list[int] = []
    rows: list[NDArray[np.float64]] = []
    for frame in extract_frames(residual, gci, pitch):
        try:
            normalized = normalize_frame(frame, norm)
        except ZeroEnergyFrameError:
            continue
        centers.append(frame.center_gci)
        rows.append(project(normalized.samples, basis, basis.n_components))
    weights = np.asarray(rows).reshape(len(rows), basis.n_components)

    energy = np.sum(weights**2)
    share = float(np.sum(weights[:, :1] ** 2) / energy) if energy > 0.0 else 1.0

    times = np.arange(len(envelope)) * model.envelope.frame_shift
    voiced = pitch.voiced_at(times)
    f0 = np.where(voiced, np.clip(pitch.f0_at(times), norm.f0_min, norm.f0_max), 0.0)
    params = DsmParams(
        times=times,
        voiced=voiced,
        f0=f0,
        weights=_frame_weights(
            np.asarray(centers, dtype=np.int64), weights, times, sr, k
        ),
        envelope=envelope.frames,
        frame_shift=model.envelope.frame_shift,
        alpha=model.envelope.alpha,
        gamma=model.envelope.gamma,
        seed=seed,
    )
    return ParamAnalysis(
        params=params,
        envelope=envelope,
        pitch=pitch,
        gci_count=len(gci),
        first_weight_share=share,
    )


def count_energy_hole_frames(
    params: DsmParams, model: DsmModel, options: SynthesisOptions
) -> int:
    """合成する有声フレームのうち, F_m 以下にエネルギーの穴があるものの数."""
    sr = model.sample_rate
    plan = plan_gci_grid(params, sr)
    holes = 0
    for i, f0 in enumerate(plan.f0.tolist()):
        frame = synth_voiced_frame(
            f0,
            plan.weights[i],
            model,
            frame_seed(params.seed, i, VOICED_STREAM),
            beta=options.beta,
            noise_gain=options.noise_gain,
            warn=False,
        )
        if find_energy_holes(frame, sr, model.normalization.max_voiced_frequency):
            holes += 1
    return holes


def copy_synthesis(
    signal: SpeechSignal,
    model: DsmModel,
    options: SynthesisOptions | None = None,
    pitch: PitchTrack | None = None,
) -> CopySynthesisResult:
    """解析 -> 逆フィルタ -> ピッチ/GCI -> 正規化 -> 射影 -> 合成 を通しで行う."""
    options = options or SynthesisOptions()
    analysis = analyze_params(signal, model, options.k, options.seed, pitch)
    params = analysis.params
    audio = vocode(params, model, options)
    norm = model.normalization

    resynth_pitch = estimate_pitch(audio, norm.f0_min, norm.f0_max)
    report: CopySynthReport = {
        "duration_s": signal.duration,
        "voiced_frames": int(np.count_nonzero(params.voiced)),
        "gci_count": analysis.gci_count,
        "k": options.k,
        "f0_deviation_median": f0_deviation(analysis.pitch, resynth_pitch),
        "log_spectral_distortion_db": log_spectral_distortion(
            signal, audio, norm.max_voiced_frequency
        ),
        "segmental_snr_db": segmental_snr(signal, audio),
        "energy_hole_frames": (
            count_energy_hole_frames(params, model, options)
            if options.excitation == "dsm"
            else 0
        ),
        "first_weight_share": analysis.first_weight_share,
        "clipped_samples": 0,
    }
    logger.info(
        "copy synthesis: %.2f s, %d voiced frames, LSD %.2f dB",
        report["duration_s"],
        report["voiced_frames"],
        report["log_spectral_distortion_db"],
    )
    return CopySynthesisResult(
        audio=audio,
        params=params,
        envelope=analysis.envelope,
        pitch=analysis.pitch,
        report=report,
    )
