"""DSM ボコーダ: パラメータから残差 (励振) を作り, 合成フィルタに通す.

有声フレーム = 固有残差の線形結合 (決定論的成分, 低域)
             + 三角包絡で変調した AR 整形雑音 (確率的成分, 高域).
無声区間は白色ガウス雑音.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.analysis.envelope import synthesis_filter
from src.analysis.resample import resample_to_length
from src.analysis.residual import pitch_window
from src.logger import logger
from src.model.config import NormalizationConfig, SynthesisOptions
from src.model.models import (
    DsmModel,
    DsmParams,
    EigenBasis,
    EnvelopeTrack,
    NoiseModel,
    SpeechSignal,
    SynthesisPlan,
)
from src.modeling.eigenbasis import reconstruct
from src.modeling.noise_source import (
    UNVOICED_STREAM,
    VOICED_STREAM,
    frame_seed,
    gaussian_noise,
)
from src.modeling.stochastic import build_envelope, generate_noise_frame

__all__ = [
    "UNVOICED_FADE",
    "FrameDecomposition",
    "build_excitation",
    "decompose_frame",
    "deterministic_band_edge",
    "deterministic_frame",
    "overlap_add",
    "plan_gci_grid",
    "synth_unvoiced",
    "synth_voiced_frame",
    "vocode",
]

# 無声区間の両端のフェード長 (サンプル)
UNVOICED_FADE = 32
_PARAM_TOLERANCE = 1e-9


def plan_gci_grid(params: DsmParams, sample_rate: int) -> SynthesisPlan:
    """有声区間ごとに f0 の逆数を積算して GCI 位置を決める.

    フレーム i は [i * shift, (i + 1) * shift) を受け持つ. 区間の最初の GCI は
    先頭から半周期の位置に置き (位相リセット), f0 は区間内のフレーム時刻で線形補間する.
    """
    n_frames = len(params)
    shift = params.frame_shift * sample_rate
    positions: list[float] = []
    f0s: list[float] = []
    indices: list[int] = []
    i = 0
    while i < n_frames:
        if not params.voiced[i]:
            i += 1
            continue
        j = i
        while j + 1 < n_frames and params.voiced[j + 1]:
            j += 1
        start, end = i * shift, (j + 1) * shift
        times = params.times[i : j + 1]
        contour = params.f0[i : j + 1]
        p = start + 0.5 * sample_rate / float(
            np.interp(start / sample_rate, times, contour)
        )
        while p < end:
            f0 = float(np.interp(p / sample_rate, times, contour))
            positions.append(p)
            f0s.append(f0)
            indices.append(min(j, max(i, int(p // shift))))
            p += sample_rate / f0
        i = j + 1
    idx = np.asarray(indices, dtype=np.int64)
    weights = params.weights[idx] if idx.size else np.zeros((0, params.k))
    return SynthesisPlan(
        positions=np.asarray(positions),
        f0=np.asarray(f0s),
        weights=weights,
        frame_indices=idx,
    )


def deterministic_band_edge(f0: float, cfg: NormalizationConfig) -> float:
    """目標 f0 に伸縮した決定論的成分の帯域上端 (Hz).

    f0 >= F0_min なら F_m 以上になる.
    """
    return min(cfg.nyquist, cfg.nyquist * f0 / cfg.f0_star)


def deterministic_frame(
    weights: ArrayLike, basis: EigenBasis, length: int
) -> NDArray[np.float64]:
    """固有残差の線形結合を length サンプルに伸縮する.

    重みが空なら第 1 固有ベクトルのみのモードで, 学習データの平均 |w1| を使う.
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        w = np.array([basis.first_weight_magnitude])
    return resample_to_length(reconstruct(w, basis), length)


def _unit(x: NDArray[np.float64]) -> NDArray[np.float64]:
    norm = float(np.linalg.norm(x))
    return x / norm if norm > 0.0 else x


def _stochastic_part(
    length: int,
    noise: NoiseModel,
    seed: int,
    beta: float,
    gain: float,
) -> NDArray[np.float64]:
    """単位ノルムの決定論的成分に対して RMS 比 gain の確率的成分."""
    if gain == 0.0:
        return np.zeros(length)
    envelope = build_envelope(length // 2, beta)
    taper = pitch_window(length)
    shaped = generate_noise_frame(length, noise, envelope, seed, gain=gain) * taper
    # 包絡と窓で失われる分を戻し, 期待エネルギーを gain^2 にそろえる
    return shaped / np.sqrt(np.sum((envelope.values * taper) ** 2))


def synth_voiced_frame(
    f0: float,
    weights: ArrayLike,
    model: DsmModel,
    seed: int,
    *,
    beta: float | None = None,
    noise_gain: float | None = None,
    warn: bool = True,
) -> NDArray[np.float64]:
    """目標周期 T = round(fs / f0) の 2T サンプルの励振フレーム (L2 ノルム 1).

    f0 < F0_min のときは決定論的成分の帯域上端が F_m を下回るので警告する.
    """
    cfg = model.normalization
    if f0 <= 0.0:
        msg = "voiced frames need a positive f0"
        raise ValueError(msg)
    if warn and f0 < cfg.f0_min:
        logger.warning(
            "target f0 %.1f Hz is below F0_min %.1f Hz: band edge %.0f Hz < F_m",
            f0,
            cfg.f0_min,
            deterministic_band_edge(f0, cfg),
        )
    period = max(1, round(model.sample_rate / f0))
    length = 2 * period
    det = _unit(deterministic_frame(weights, model.basis, length))
    stoch = _stochastic_part(
        length,
        model.noise,
        seed,
        model.noise.beta if beta is None else beta,
        model.noise.band_gain_ratio if noise_gain is None else noise_gain,
    )
    return _unit(det + stoch)


def synth_unvoiced(length: int, seed: int, sigma: float = 1.0) -> NDArray[np.float64]:
    """無声区間の励振 N(0, sigma^2)."""
    return sigma * gaussian_noise(length, seed)


def overlap_add(
    plan: SynthesisPlan,
    frames: list[NDArray[np.float64]],
    length: int,
    sample_rate: int,
) -> SpeechSignal:
    """各フレームを GCI 位置を中心に足し合わせる (範囲外は切り捨て)."""
    if len(frames) != len(plan):
        msg = f"{len(frames)} frames for {len(plan)} GCIs"
        raise ValueError(msg)
    out = np.zeros(length)
    for center, frame in zip(plan.gci_targets.tolist(), frames, strict=True):
        start = center - frame.shape[0] // 2
        lo, hi = max(start, 0), min(start + frame.shape[0], length)
        if lo < hi:
            out[lo:hi] += frame[lo - start : hi - start]
    return SpeechSignal(out, sample_rate)


def _unvoiced_runs(params: DsmParams) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    i = 0
    while i < len(params):
        if params.voiced[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(params) and not params.voiced[j + 1]:
            j += 1
        runs.append((i, j + 1))
        i = j + 1
    return runs


def _faded(x: NDArray[np.float64]) -> NDArray[np.float64]:
    fade = min(UNVOICED_FADE, x.shape[0] // 2)
    if fade == 0:
        return x
    ramp = np.linspace(0.0, 1.0, fade, endpoint=False)
    x = x.copy()
    x[:fade] *= ramp
    x[-fade:] *= ramp[::-1]
    return x


def _check_consistency(params: DsmParams, model: DsmModel) -> None:
    env = model.envelope
    if params.k > model.basis.n_components:
        msg = (
            f"params carry {params.k} weights but the model stores "
            f"{model.basis.n_components} eigenvectors"
        )
        raise ValueError(msg)
    if len(params) == 0:
        return
    if params.order != env.order:
        msg = f"params envelope order {params.order} != model order {env.order}"
        raise ValueError(msg)
    for name, ours, theirs in (
        ("alpha", params.alpha, env.alpha),
        ("gamma", params.gamma, env.gamma),
        ("frame shift", params.frame_shift, env.frame_shift),
    ):
        if abs(ours - theirs) > _PARAM_TOLERANCE:
            msg = f"params {name} {ours} does not match the model ({theirs})"
            raise ValueError(msg)
    f0_max = model.normalization.f0_max
    too_high = np.flatnonzero(params.voiced & (params.f0 > f0_max))
    if too_high.size:
        first = int(too_high[0])
        msg = (
            f"frame {first} has f0 {params.f0[first]:.1f} Hz above the model "
            f"F0_max {f0_max:.1f} Hz"
        )
        raise ValueError(msg)


def build_excitation(
    params: DsmParams, model: DsmModel, options: SynthesisOptions | None = None
) -> SpeechSignal:
    """合成フィルタを通す前の励振 (ほぼ単位パワー) を作る."""
    options = options or SynthesisOptions()
    _check_consistency(params, model)
    sr = model.sample_rate
    n = params.duration_samples(sr)
    plan = plan_gci_grid(params, sr)
    periods = np.maximum(np.rint(sr / np.maximum(plan.f0, 1e-9)), 1.0)

    if options.excitation == "pulse":
        voiced = np.zeros(n)
        for g, period in zip(plan.gci_targets.tolist(), periods.tolist(), strict=True):
            if 0 <= g < n:
                voiced[g] += np.sqrt(period)
    else:
        low = int(np.count_nonzero(plan.f0 < model.normalization.f0_min))
        if low:
            logger.warning(
                "%d GCIs have a target f0 below F0_min %.1f Hz (energy-hole risk)",
                low,
                model.normalization.f0_min,
            )
        frames = [
            np.sqrt(period)
            * synth_voiced_frame(
                float(f0),
                plan.weights[i],
                model,
                frame_seed(params.seed, i, VOICED_STREAM),
                beta=options.beta,
                noise_gain=options.noise_gain,
                warn=False,
            )
            for i, (f0, period) in enumerate(zip(plan.f0, periods, strict=True))
        ]
        voiced = overlap_add(plan, frames, n, sr).samples

    excitation = voiced.copy()
    shift = params.frame_shift * sr
    for first, stop in _unvoiced_runs(params):
        lo, hi = round(first * shift), min(n, round(stop * shift))
        if hi > lo:
            seed = frame_seed(params.seed, first, UNVOICED_STREAM)
            excitation[lo:hi] += _faded(synth_unvoiced(hi - lo, seed))
    logger.debug("excitation: %d samples, %d GCIs", n, len(plan))
    return SpeechSignal(excitation, sr)


def vocode(
    params: DsmParams, model: DsmModel, options: SynthesisOptions | None = None
) -> SpeechSignal:
    """パラメータから音声を合成する. 同じパラメータ・モデル・シードなら同じ出力."""
    excitation = build_excitation(params, model, options)
    frames = params.envelope if len(params) else np.zeros((0, model.envelope.order + 1))
    envelope = EnvelopeTrack(frames=frames, config=model.envelope)
    return synthesis_filter(excitation, envelope)


@dataclass(frozen=True)
class FrameDecomposition:
    """1 フレームの決定論的成分, 確率的成分, 和."""

    deterministic: NDArray[np.float64]
    stochastic: NDArray[np.float64]
    total: NDArray[np.float64]
    sample_rate: int

    def spectra(
        self, n_fft: int = 1024
    ) -> tuple[NDArray[np.float64], dict[str, NDArray[np.float64]]]:
        """周波数軸と各成分の振幅スペクトル (dB)."""
        freqs = np.fft.rfftfreq(n_fft, 1.0 / self.sample_rate)
        out = {
            name: 20.0
            * np.log10(np.maximum(np.abs(np.fft.rfft(x, n=n_fft)), 1e-12))
            for name, x in (
                ("deterministic", self.deterministic),
                ("stochastic", self.stochastic),
                ("total", self.total),
            )
        }
        return freqs, out


def decompose_frame(
    model: DsmModel,
    f0: float,
    weights: ArrayLike = (),
    seed: int = 0,
    options: SynthesisOptions | None = None,
) -> FrameDecomposition:
    """synth_voiced_frame と同じ手順で, 和を取る前の 2 成分も返す."""
    options = options or SynthesisOptions()
    length = 2 * max(1, round(model.sample_rate / f0))
    det = _unit(deterministic_frame(weights, model.basis, length))
    stoch = _stochastic_part(
        length,
        model.noise,
        seed,
        model.noise.beta if options.beta is None else options.beta,
        model.noise.band_gain_ratio
        if options.noise_gain is None
        else options.noise_gain,
    )
    total = det + stoch
    scale = float(np.linalg.norm(total))
    scale = scale if scale > 0.0 else 1.0
    return FrameDecomposition(
        deterministic=det / scale,
        stochastic=stoch / scale,
        total=total / scale,
        sample_rate=model.sample_rate,
    )
