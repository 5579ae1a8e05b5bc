#!/usr/bin/env python3
"""dsm-vocoder コマンド.

    dsm-vocoder train CORPUS_DIR MODEL [--female] [--jobs N] ...
    dsm-vocoder copysynth MODEL IN.wav OUT.wav [--k K] [--seed S] ...
    dsm-vocoder vocode MODEL PARAMS OUT.wav [--seed S]
    dsm-vocoder export MODEL WHAT OUT.csv

WHAT は dispersion, eigenvector:I, ar-response, decomposition:WAV のいずれか.

終了コード: 0 成功, 1 引数エラー, 2 実行時エラー.
"""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

from src.cli.commands import cmd_copysynth, cmd_export, cmd_train, cmd_vocode
from src.config import load_settings
from src.errors import DsmError
from src.logger import logger, set_verbosity
from src.model.config import (
    FEMALE_F0_RANGE,
    GENERALIZED_GAMMA,
    MALE_F0_RANGE,
    EnvelopeConfig,
    NoiseConfig,
    SynthesisOptions,
    TrainConfig,
)

__all__ = ["EXIT_OK", "EXIT_RUNTIME", "EXIT_USAGE", "build_parser", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """引数エラーで終了せず UsageError を送出する."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _add_synthesis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--k", type=int, default=0, help="PCA 重みの数 (0: 第1固有ベクトルのみ)"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--beta", type=float, default=None, help="三角包絡の床値")
    parser.add_argument("--noise-gain", type=float, default=None)
    parser.add_argument("--excitation", choices=["dsm", "pulse"], default="dsm")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dsm-vocoder", description="DSM residual vocoder")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="コーパスからモデルを学習する")
    train.add_argument("corpus_dir", type=Path)
    train.add_argument("output", type=Path)
    train.add_argument(
        "--female", action="store_true", help="120-400 Hz の既定範囲"
    )
    train.add_argument("--f0-min", type=float, default=None)
    train.add_argument("--f0-max", type=float, default=None)
    train.add_argument(
        "--fm", type=float, default=4000.0, help="最大有声周波数 (Hz)"
    )
    train.add_argument("--f0-star", type=float, default=None)
    train.add_argument("--coverage", type=float, default=0.8)
    train.add_argument("--f0-dir", type=Path, default=None)
    train.add_argument("--no-center", action="store_true")
    train.add_argument("--max-minutes", type=float, default=None)
    train.add_argument("--jobs", type=int, default=None, help="0 は CPU 数")
    train.add_argument("--generalized", action="store_true", help="gamma=-1/3")
    train.add_argument("--ar-order", type=int, default=18)
    train.add_argument("--beta", type=float, default=0.5)
    train.add_argument("--dump-dataset", type=Path, default=None)
    train.add_argument("--compare-with", type=Path, default=None)

    copysynth = sub.add_parser("copysynth", help="解析して再合成する")
    copysynth.add_argument("model", type=Path)
    copysynth.add_argument("wav_in", type=Path)
    copysynth.add_argument("wav_out", type=Path)
    _add_synthesis_flags(copysynth)
    copysynth.add_argument("--f0-file", type=Path, default=None)
    copysynth.add_argument("--params-out", type=Path, default=None)
    copysynth.add_argument("--pitch-out", type=Path, default=None)
    copysynth.add_argument("--envelope-out", type=Path, default=None)

    vocode = sub.add_parser("vocode", help="パラメータファイルから合成する")
    vocode.add_argument("model", type=Path)
    vocode.add_argument("params", type=Path)
    vocode.add_argument("wav_out", type=Path)
    vocode.add_argument(
        "--seed", type=int, default=None, help="ファイルのシードを上書き"
    )
    vocode.add_argument("--beta", type=float, default=None)
    vocode.add_argument("--noise-gain", type=float, default=None)
    vocode.add_argument("--excitation", choices=["dsm", "pulse"], default="dsm")

    export = sub.add_parser("export", help="図データを CSV に書き出す")
    export.add_argument("model", type=Path)
    export.add_argument("what")
    export.add_argument("out", type=Path)
    _add_synthesis_flags(export)
    return parser


def _train_config(args: argparse.Namespace, default_jobs: int) -> TrainConfig:
    low, high = FEMALE_F0_RANGE if args.female else MALE_F0_RANGE
    return TrainConfig(
        corpus_dir=args.corpus_dir,
        output=args.output,
        f0_min=args.f0_min if args.f0_min is not None else low,
        f0_max=args.f0_max if args.f0_max is not None else high,
        max_voiced_frequency=args.fm,
        f0_star=args.f0_star,
        coverage=args.coverage,
        f0_dir=args.f0_dir,
        center=not args.no_center,
        max_minutes=args.max_minutes,
        jobs=args.jobs if args.jobs is not None else default_jobs,
        envelope=EnvelopeConfig(gamma=GENERALIZED_GAMMA if args.generalized else 0.0),
        noise=NoiseConfig(ar_order=args.ar_order, beta=args.beta),
        dataset_dump=args.dump_dataset,
    )


def _options(args: argparse.Namespace) -> SynthesisOptions:
    return SynthesisOptions(
        k=getattr(args, "k", 0),
        seed=args.seed if args.seed is not None else 0,
        beta=args.beta,
        noise_gain=args.noise_gain,
        excitation=args.excitation,
    )


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "train":
        settings = load_settings()
        cmd_train(_train_config(args, settings.jobs), sys.stdout, args.compare_with)
    elif args.command == "copysynth":
        cmd_copysynth(
            args.model,
            args.wav_in,
            args.wav_out,
            _options(args),
            sys.stdout,
            f0_file=args.f0_file,
            params_out=args.params_out,
            pitch_out=args.pitch_out,
            envelope_out=args.envelope_out,
        )
    elif args.command == "vocode":
        cmd_vocode(args.model, args.params, args.wav_out, _options(args), args.seed)
    else:
        cmd_export(args.model, args.what, args.out, _options(args))


def _one_line(exc: BaseException) -> str:
    text = " ".join(str(exc).split())
    return f"{type(exc).__name__}: {text}" if text else type(exc).__name__


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    set_verbosity(args.verbose)
    try:
        _dispatch(args)
    except (DsmError, OSError, ValueError) as exc:
        logger.debug("command %s failed", args.command, exc_info=True)
        sys.stderr.write(f"error: {_one_line(exc)}\n")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
