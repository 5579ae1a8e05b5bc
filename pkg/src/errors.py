"""ドメイン例外."""

__all__ = [
    "ArFitError",
    "BadMagicError",
    "DegenerateBasisError",
    "DsmError",
    "DurationMismatchError",
    "EmptyCorpusError",
    "ModelFormatError",
    "NoVoicedFramesError",
    "ParamsFormatError",
    "PitchFileError",
    "TruncatedModelError",
    "UnstableFilterError",
    "VersionMismatchError",
    "WavFormatError",
    "ZeroEnergyFrameError",
]


class DsmError(Exception):
    """このパッケージが送出する例外の基底クラス."""


class WavFormatError(DsmError):
    """RIFF/WAVE PCM16 モノラル以外の入力."""


class ModelFormatError(DsmError):
    """DSMB モデルファイルの読み込み失敗."""


class BadMagicError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    """ファイルがブロックの途中で終わっている."""

    def __init__(self, block: str) -> None:
        self.block = block
        super().__init__(f"model file truncated in block {block}")


class VersionMismatchError(ModelFormatError):
    pass


class _LineError(DsmError):
    def __init__(self, path: str, line_number: int, reason: str) -> None:
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {reason}")


class ParamsFormatError(_LineError):
    """パラメータファイルの書式エラー (行番号付き)."""


class PitchFileError(_LineError):
    """ピッチファイルの書式エラー (行番号付き)."""


class UnstableFilterError(DsmError):
    """合成フィルタが不安定になるフレーム."""

    def __init__(self, frame_index: int, reason: str) -> None:
        self.frame_index = frame_index
        super().__init__(f"unstable filter at envelope frame {frame_index}: {reason}")


class DurationMismatchError(DsmError):
    """スペクトル包絡が信号長を覆っていない."""


class ZeroEnergyFrameError(DsmError):
    """正規化できないエネルギー 0 のフレーム."""


class DegenerateBasisError(DsmError, ValueError):
    """固有値がすべて 0 で, 分散の割合を定義できない."""


class ArFitError(DsmError):
    """AR フィルタが最小次数でも安定にならなかった."""


class EmptyCorpusError(DsmError):
    pass


class NoVoicedFramesError(DsmError):
    pass
