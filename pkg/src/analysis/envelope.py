"""スペクトル包絡の推定, 逆フィルタ, 合成フィルタ.

gamma=0 はメルケプストラム (UELS) + MLSA フィルタ (Pade 5 次),
gamma=-1/3 はメル一般化ケプストラム + MGLSA フィルタ.
係数はフレーム中心の間をサンプルごとに線形補間する.
合成フィルタのゲインは exp(b0), 逆フィルタは exp(-b0) (gamma=0 で平坦なら b0 = c0).
"""

from collections.abc import Iterator

import numpy as np
import pysptk
from numpy.typing import NDArray
from pysptk.synthesis import MGLSADF, MLSADF

from src.errors import DurationMismatchError, UnstableFilterError
from src.logger import logger
from src.model.config import EnvelopeConfig
from src.model.models import EnvelopeTrack, SpeechSignal

__all__ = [
    "MAX_ITERATIONS",
    "SILENCE_C0",
    "analyze_envelope",
    "envelope_log_amplitude",
    "expected_frame_count",
    "inverse_filter",
    "synthesis_filter",
]

MAX_ITERATIONS = 30
CONVERGENCE_THRESHOLD = 1e-6
SILENCE_RMS = 1e-6
SILENCE_C0 = float(np.log(1e-5))
PADE_ORDER = 5
# 2 段構成の MLSA で許容する c1.. による対数振幅の上限 (neper)
MAX_LOG_AMPLITUDE = 12.4
# etype=1 の初期値 (RMS 1e-6 の白色雑音のパワーより十分小さい)
_PERIODOGRAM_EPS = 1e-14
# c0 がフレームの対数パワーからこれ以上 (neper) 離れたら収束失敗とみなす
MAX_LEVEL_DEVIATION = 6.0
# 隣接フレームのピリオドグラムを平均する重み
TIME_SMOOTHING = (0.25, 0.5, 0.25)


def expected_frame_count(n_samples: int, hop: int) -> int:
    return -(-n_samples // hop)


def _window(cfg: EnvelopeConfig, length: int) -> NDArray[np.float64]:
    # パワー正規化窓: 逆フィルタ後の残差がほぼ単位パワーになる
    if cfg.window == "hamming":
        return pysptk.hamming(length, normalize=1)
    if cfg.window == "hanning":
        return pysptk.hanning(length, normalize=1)
    return pysptk.blackman(length, normalize=1)


def _frames(signal: SpeechSignal, cfg: EnvelopeConfig) -> NDArray[np.float64]:
    """フレーム中心 t*hop の窓掛けフレームを (T, fft_length) で返す."""
    sr = signal.sample_rate
    hop = cfg.hop_samples(sr)
    flen = cfg.frame_samples(sr)
    n_frames = expected_frame_count(len(signal), hop)
    half = flen // 2
    padded = np.pad(signal.samples, (half, half + hop))
    frames = np.lib.stride_tricks.sliding_window_view(padded, flen)[::hop][:n_frames]
    out = np.zeros((n_frames, cfg.fft_length(sr)))
    out[:, :flen] = frames * _window(cfg, flen)
    return out


def _periodograms(frames: NDArray[np.float64]) -> NDArray[np.float64]:
    """窓掛けフレームのピリオドグラムを前後 1 フレームと重み付き平均する.

    Returns:
        (T, fft_length // 2 + 1) のパワースペクトル

    """
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    if power.shape[0] == 0:
        return power
    padded = np.pad(power, ((1, 1), (0, 0)), mode="edge")
    prev_w, center_w, next_w = TIME_SMOOTHING
    return prev_w * padded[:-2] + center_w * padded[1:-1] + next_w * padded[2:]


def _estimate_frame(
    power: NDArray[np.float64], cfg: EnvelopeConfig
) -> NDArray[np.float64]:
    # itype=4: 入力はピリオドグラム (長さ fftlen/2+1)
    if cfg.generalized:
        return pysptk.mgcep(
            power,
            order=cfg.order,
            alpha=cfg.alpha,
            gamma=cfg.gamma,
            maxiter=MAX_ITERATIONS,
            threshold=CONVERGENCE_THRESHOLD,
            etype=1,
            eps=_PERIODOGRAM_EPS,
            itype=4,
        )
    return pysptk.mcep(
        power,
        order=cfg.order,
        alpha=cfg.alpha,
        maxiter=MAX_ITERATIONS,
        threshold=CONVERGENCE_THRESHOLD,
        etype=1,
        eps=_PERIODOGRAM_EPS,
        itype=4,
    )


def _frame_log_level(power: NDArray[np.float64]) -> float:
    """ピリオドグラムから求めたフレームの対数振幅 (neper)."""
    return 0.5 * float(np.log(np.mean(power) + _PERIODOGRAM_EPS))


def _gain_log(c: NDArray[np.float64], cfg: EnvelopeConfig) -> float:
    """合成フィルタのゲイン項 log K (フィルタ係数 b0)."""
    if cfg.generalized:
        b = pysptk.mgc2b(np.ascontiguousarray(c), cfg.alpha, cfg.gamma)
    else:
        b = pysptk.mc2b(np.ascontiguousarray(c), cfg.alpha)
    return float(b[0])


def _rejection_reason(
    c: NDArray[np.float64], power: NDArray[np.float64], cfg: EnvelopeConfig
) -> str | None:
    """推定結果が使えない理由. 使えるなら None.

    pysptk は maxiter 到達を知らせないので, 値そのものから発散を判定する.
    """
    if not np.all(np.isfinite(c)):
        return "non-finite coefficients"
    with np.errstate(all="ignore"):
        gain = _gain_log(c, cfg)
    if not np.isfinite(gain):
        return "non-finite gain"
    deviation = abs(gain - _frame_log_level(power))
    if deviation > MAX_LEVEL_DEVIATION:
        return f"gain is {deviation:.1f} neper away from the frame level"
    return None


def analyze_envelope(signal: SpeechSignal, cfg: EnvelopeConfig) -> EnvelopeTrack:
    """フレームごとに包絡係数 c0..c_order を推定する.

    ピリオドグラムは前後フレームと平均してから当てはめる.
    無音フレーム (RMS < 1e-6) は c0 = ln(1e-5), 残りを 0 にする.
    推定に失敗したフレーム (例外, 非有限値, ゲインの発散) は直前フレームの
    係数を使い, flagged に記録する.
    """
    frames = _frames(signal, cfg)
    flen = cfg.frame_samples(signal.sample_rate)
    window = _window(cfg, flen)
    # 窓掛け前の RMS を窓のエネルギーで割り戻して求める
    rms = np.sqrt(np.sum(frames**2, axis=1) / np.sum(window**2) / flen)
    powers = _periodograms(frames)

    silence = np.zeros(cfg.order + 1)
    silence[0] = SILENCE_C0
    coefs = np.empty((frames.shape[0], cfg.order + 1))
    flagged: list[int] = []
    previous = silence
    for i, power in enumerate(powers):
        if rms[i] < SILENCE_RMS:
            coefs[i] = silence
            previous = silence
            continue
        try:
            c = np.asarray(_estimate_frame(power, cfg), dtype=np.float64)
            reason = _rejection_reason(c, power, cfg)
        except (RuntimeError, ValueError) as exc:
            reason = str(exc)
        if reason is not None:
            logger.warning("envelope frame %d did not converge: %s", i, reason)
            c = previous
            flagged.append(i)
        coefs[i] = c
        previous = c
    return EnvelopeTrack(frames=coefs, config=cfg, flagged=tuple(flagged))


def envelope_log_amplitude(
    coefs: NDArray[np.float64], cfg: EnvelopeConfig, fft_length: int = 1024
) -> NDArray[np.float64]:
    """係数 1 フレーム分の対数振幅 (neper) を線形周波数 0..fs/2 で返す."""
    sp = pysptk.mgc2sp(
        np.ascontiguousarray(coefs, dtype=np.float64),
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        fftlen=fft_length,
    )
    return np.asarray(sp.real, dtype=np.float64)


def _check_duration(n_samples: int, env: EnvelopeTrack, sample_rate: int) -> int:
    hop = env.config.hop_samples(sample_rate)
    expected = expected_frame_count(n_samples, hop)
    if len(env) != expected:
        msg = (
            f"envelope has {len(env)} frames but the signal needs {expected} "
            f"({n_samples} samples, hop {hop})"
        )
        raise DurationMismatchError(msg)
    return hop


def _check_stability(mc: NDArray[np.float64], cfg: EnvelopeConfig) -> None:
    for i, row in enumerate(mc):
        if not np.all(np.isfinite(row)):
            raise UnstableFilterError(i, "non-finite coefficients")
        shape = row.copy()
        shape[0] = 0.0
        peak = float(np.max(np.abs(envelope_log_amplitude(shape, cfg, 256))))
        if peak > MAX_LOG_AMPLITUDE:
            raise UnstableFilterError(
                i, f"log amplitude {peak:.2f} exceeds {MAX_LOG_AMPLITUDE}"
            )


def _mel_cepstrum(env: EnvelopeTrack) -> NDArray[np.float64]:
    """MLSA 用のメルケプストラム (一般化の場合は gamma=0 に変換)."""
    cfg = env.config
    if not cfg.generalized:
        return np.asarray(env.frames)
    return np.stack(
        [
            pysptk.mgc2mgc(
                np.ascontiguousarray(row),
                src_alpha=cfg.alpha,
                src_gamma=cfg.gamma,
                dst_order=cfg.order,
                dst_alpha=cfg.alpha,
                dst_gamma=0.0,
            )
            for row in env.frames
        ]
    )


def _coefficient_path(
    b: NDArray[np.float64], hop: int, n_samples: int
) -> Iterator[tuple[int, NDArray[np.float64]]]:
    """サンプル番号と, フレーム中心間で線形補間した係数を順に返す."""
    last = b.shape[0] - 1
    for t in range(b.shape[0]):
        start = t * hop
        if start >= n_samples:
            return
        nxt = b[min(t + 1, last)]
        step = (nxt - b[t]) / hop
        for i in range(min(hop, n_samples - start)):
            yield start + i, b[t] + step * i


def _run_filter(
    filt: MLSADF | MGLSADF, x: NDArray[np.float64], b: NDArray[np.float64], hop: int
) -> NDArray[np.float64]:
    """係数を補間しながら 1 サンプルずつ通す. 入力には exp(b0) のゲインを掛ける."""
    y = np.zeros_like(x)
    for n, coef in _coefficient_path(b, hop, x.shape[0]):
        y[n] = filt.filt(x[n] * np.exp(coef[0]), coef)
    return y


def _run_mlsa(
    x: NDArray[np.float64], mc: NDArray[np.float64], cfg: EnvelopeConfig, hop: int
) -> NDArray[np.float64]:
    b = np.stack([pysptk.mc2b(np.ascontiguousarray(row), cfg.alpha) for row in mc])
    filt = MLSADF(order=cfg.order, alpha=cfg.alpha, pd=PADE_ORDER)
    return _run_filter(filt, x, b, hop)


def _raise_if_diverged(y: NDArray[np.float64], hop: int) -> None:
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        raise UnstableFilterError(int(bad[0]) // hop, "output diverged")


def inverse_filter(signal: SpeechSignal, env: EnvelopeTrack) -> SpeechSignal:
    """包絡の逆フィルタで残差を求める.

    MLSA に符号反転した係数を与えるので, ゲインも exp(-b0) になり
    残差はほぼ単位パワーになる.
    """
    hop = _check_duration(len(signal), env, signal.sample_rate)
    if len(signal) == 0:
        return signal
    mc = _mel_cepstrum(env)
    _check_stability(mc, env.config)
    residual = _run_mlsa(signal.samples, -mc, env.config, hop)
    _raise_if_diverged(residual, hop)
    return SpeechSignal(residual, signal.sample_rate)


def synthesis_filter(excitation: SpeechSignal, env: EnvelopeTrack) -> SpeechSignal:
    """励振を合成フィルタに通して音声を得る."""
    cfg = env.config
    hop = _check_duration(len(excitation), env, excitation.sample_rate)
    if len(excitation) == 0:
        return excitation
    if not cfg.generalized:
        mc = np.asarray(env.frames)
        _check_stability(mc, cfg)
        y = _run_mlsa(excitation.samples, mc, cfg, hop)
    else:
        _check_stability(_mel_cepstrum(env), cfg)
        stage = round(-1.0 / cfg.gamma)
        b = np.stack(
            [
                pysptk.mgc2b(np.ascontiguousarray(row), cfg.alpha, cfg.gamma)
                for row in env.frames
            ]
        )
        filt = MGLSADF(order=cfg.order, alpha=cfg.alpha, stage=stage)
        y = _run_filter(filt, excitation.samples, b, hop)
    _raise_if_diverged(y, hop)
    return SpeechSignal(y, excitation.sample_rate)
