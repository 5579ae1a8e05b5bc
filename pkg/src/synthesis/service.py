import os
from pathlib import Path

from numpy.typing import ArrayLike

from src.config import load_local_env
from src.model.config import SynthesisOptions
from src.model.models import DsmModel, DsmParams, PitchTrack, SpeechSignal
from src.signal_io.model_file import load_model
from src.synthesis.copysynth import CopySynthesisResult, copy_synthesis
from src.synthesis.vocoder import FrameDecomposition, decompose_frame, vocode

__all__ = ["DsmVocoder", "create_vocoder"]


class DsmVocoder:
    """学習済みモデルと合成オプションをまとめたボコーダ."""

    def __init__(
        self, model: DsmModel, options: SynthesisOptions | None = None
    ) -> None:
        """初期化

        Args:
            model: 学習済み DSM モデル
            options: 合成オプション (k, シード, beta, 雑音ゲイン, 励振方式)

        """
        self.model = model
        self.options = options or SynthesisOptions()

    @property
    def sample_rate(self) -> int:
        return self.model.sample_rate

    def vocode(self, params: DsmParams) -> SpeechSignal:
        """パラメータから音声を合成する."""
        return vocode(params, self.model, self.options)

    def copy_synthesis(
        self, signal: SpeechSignal, pitch: PitchTrack | None = None
    ) -> CopySynthesisResult:
        return copy_synthesis(signal, self.model, self.options, pitch)

    def decompose(
        self, f0: float, weights: ArrayLike = (), seed: int | None = None
    ) -> FrameDecomposition:
        """1 フレームを決定論的成分と確率的成分に分けて返す."""
        return decompose_frame(
            self.model,
            f0,
            weights,
            self.options.seed if seed is None else seed,
            self.options,
        )


def create_vocoder(
    model_path: str | Path | None = None,
    options: SynthesisOptions | None = None,
) -> DsmVocoder:
    """DsmVocoder のファクトリ関数.

    環境変数で設定（引数が無い場合は必須）:
    - DSM_MODEL_PATH: 学習済みモデル (.dsmb) のパス
    """
    load_local_env()
    resolved = model_path or os.getenv("DSM_MODEL_PATH")
    if not resolved:
        msg = "DSM_MODEL_PATH must be set (e.g., in .env.local)."
        raise RuntimeError(msg)
    return DsmVocoder(load_model(resolved), options)
