"""サブコマンドの本体. 引数の解釈は main.py で行う."""

import dataclasses
from pathlib import Path
from typing import TextIO

from src.cli.export import run_export
from src.cli.report import print_report
from src.logger import logger
from src.model.config import SynthesisOptions, TrainConfig
from src.model.models import CopySynthReport, TrainReport
from src.modeling.training import train_model
from src.signal_io.model_file import load_model, save_model
from src.signal_io.text_formats import (
    read_params,
    read_pitch,
    write_envelope_dump,
    write_params,
    write_pitch,
)
from src.signal_io.wav import read_wav, write_wav
from src.synthesis.copysynth import copy_synthesis
from src.synthesis.vocoder import vocode

__all__ = ["cmd_copysynth", "cmd_export", "cmd_train", "cmd_vocode"]


def cmd_train(
    config: TrainConfig, stream: TextIO, compare_with: Path | None = None
) -> TrainReport:
    """モデルを学習して保存し, レポートを stream に出す."""
    reference = load_model(compare_with).basis if compare_with else None
    model, report = train_model(config, reference)
    save_model(model, config.output)
    logger.info("model saved to %s", config.output)
    print_report(report, stream)
    return report


def cmd_copysynth(  # noqa: PLR0913
    model_path: Path,
    wav_in: Path,
    wav_out: Path,
    options: SynthesisOptions,
    stream: TextIO,
    *,
    f0_file: Path | None = None,
    params_out: Path | None = None,
    pitch_out: Path | None = None,
    envelope_out: Path | None = None,
) -> CopySynthReport:
    """音声をコピー合成し, 客観評価を stream に出す.

    Args:
        model_path: 学習済みモデル
        wav_in: 入力音声 (モデルと同じサンプリング周波数)
        wav_out: 出力音声
        options: 合成オプション
        stream: レポートの出力先
        f0_file: 内部ピッチ推定の代わりに使うピッチファイル
        params_out: 解析したパラメータの保存先
        pitch_out: ピッチ系列の保存先
        envelope_out: 包絡係数の保存先

    """
    model = load_model(model_path)
    signal = read_wav(wav_in)
    norm = model.normalization
    pitch = read_pitch(f0_file, norm.f0_min, norm.f0_max) if f0_file else None
    result = copy_synthesis(signal, model, options, pitch)
    report = result.report.copy()
    report["clipped_samples"] = write_wav(result.audio, wav_out)
    if params_out is not None:
        write_params(result.params, params_out)
    if pitch_out is not None:
        write_pitch(result.pitch, pitch_out)
    if envelope_out is not None:
        write_envelope_dump(result.envelope, envelope_out)
    print_report(report, stream)
    return report


def cmd_vocode(
    model_path: Path,
    params_path: Path,
    wav_out: Path,
    options: SynthesisOptions,
    seed: int | None = None,
) -> int:
    """パラメータファイルから合成する. seed はファイルのシードを上書きする.

    Returns:
        int: 書き出した音声のサンプル数

    """
    model = load_model(model_path)
    params = read_params(params_path)
    if seed is not None:
        params = dataclasses.replace(params, seed=seed)
    audio = vocode(params, model, options)
    write_wav(audio, wav_out)
    logger.info("vocoded %d frames into %d samples", len(params), len(audio))
    return len(audio)


def cmd_export(
    model_path: Path, what: str, out: Path, options: SynthesisOptions | None = None
) -> int:
    """図データを CSV に書き出し, データ行数を返す."""
    rows = run_export(load_model(model_path), what, out, options)
    logger.info("exported %s: %d rows to %s", what, rows, out)
    return rows
