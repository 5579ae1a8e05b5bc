"""図データ (分散曲線, 固有ベクトル, AR 応答, 成分分解) の CSV 出力."""

from collections.abc import Iterator
from pathlib import Path

import numpy as np

from src.errors import NoVoicedFramesError
from src.model.config import SynthesisOptions
from src.model.models import DsmModel
from src.modeling.eigenbasis import dispersion
from src.modeling.stochastic import ar_response
from src.signal_io.text_formats import write_csv
from src.signal_io.wav import read_wav
from src.synthesis.copysynth import analyze_params
from src.synthesis.vocoder import decompose_frame

__all__ = [
    "AR_RESPONSE_STEP_HZ",
    "DECOMPOSITION_FFT",
    "export_ar_response",
    "export_decomposition",
    "export_dispersion",
    "export_eigenvector",
    "run_export",
]

AR_RESPONSE_STEP_HZ = 10.0
DECOMPOSITION_FFT = 1024


def export_dispersion(model: DsmModel, out: Path) -> int:
    """`k,cumulative_fraction`. 行数は保存済み固有ベクトル数."""
    curve = dispersion(model.basis).cumulative_fraction[: model.basis.n_components]
    rows = ((k, float(c)) for k, c in enumerate(curve.tolist(), 1))
    return write_csv(out, ["k", "cumulative_fraction"], rows)


def export_eigenvector(model: DsmModel, index: int, out: Path) -> int:
    """`index,sample,value`. index は 1 始まり."""
    basis = model.basis
    if not 1 <= index <= basis.n_components:
        msg = f"eigenvector index must lie in 1..{basis.n_components}, got {index}"
        raise ValueError(msg)
    vector = basis.eigenvectors[index - 1]
    rows = ((index, n, float(v)) for n, v in enumerate(vector.tolist()))
    return write_csv(out, ["index", "sample", "value"], rows)


def export_ar_response(model: DsmModel, out: Path) -> int:
    """`freq_hz,db` を 0 Hz からナイキストまで 10 Hz 刻みで."""
    nyquist = model.sample_rate / 2.0
    freqs = np.arange(0.0, nyquist + AR_RESPONSE_STEP_HZ / 2, AR_RESPONSE_STEP_HZ)
    db = ar_response(
        model.noise.ar_coefficients, model.noise.ar_gain, model.sample_rate, freqs
    )
    rows = zip(freqs.tolist(), db.tolist(), strict=True)
    return write_csv(out, ["freq_hz", "db"], rows)


def export_decomposition(
    model: DsmModel, wav: Path, out: Path, options: SynthesisOptions
) -> int:
    """音声の代表フレーム (中央値に最も近い f0) を決定論的/確率的/和に分けて出力.

    Raises:
        NoVoicedFramesError: 有声フレームが無い

    """
    analysis = analyze_params(read_wav(wav), model, options.k, options.seed)
    params = analysis.params
    voiced = np.flatnonzero(params.voiced)
    if voiced.size == 0:
        msg = f"no voiced frames in {wav}"
        raise NoVoicedFramesError(msg)
    f0 = params.f0[voiced]
    pick = int(voiced[np.argmin(np.abs(f0 - np.median(f0)))])
    parts = decompose_frame(
        model, float(params.f0[pick]), params.weights[pick], options.seed, options
    )
    freqs, spectra = parts.spectra(DECOMPOSITION_FFT)

    def rows() -> Iterator[tuple[float, float, float, float]]:
        for i, f in enumerate(freqs.tolist()):
            yield (
                f,
                float(spectra["deterministic"][i]),
                float(spectra["stochastic"][i]),
                float(spectra["total"][i]),
            )

    header = ["freq_hz", "deterministic_db", "stochastic_db", "total_db"]
    return write_csv(out, header, rows())


def run_export(
    model: DsmModel, what: str, out: Path, options: SynthesisOptions | None = None
) -> int:
    """what を解釈して CSV を書き, データ行数を返す.

    Raises:
        ValueError: 未知の what, または固有ベクトル番号が不正

    """
    options = options or SynthesisOptions()
    target, _, arg = what.partition(":")
    if target == "dispersion" and not arg:
        return export_dispersion(model, out)
    if target == "eigenvector" and arg:
        try:
            index = int(arg)
        except ValueError as exc:
            msg = f"eigenvector index must be an integer, got {arg!r}"
            raise ValueError(msg) from exc
        return export_eigenvector(model, index, out)
    if target == "ar-response" and not arg:
        return export_ar_response(model, out)
    if target == "decomposition" and arg:
        return export_decomposition(model, Path(arg), out, options)
    msg = (
        f"unknown export target {what!r}; expected dispersion, eigenvector:<i>, "
        "ar-response or decomposition:<wav>"
    )
    raise ValueError(msg)
