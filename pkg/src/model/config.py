"""解析・学習・合成の設定モデル."""

import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

__all__ = [
    "FEMALE_F0_RANGE",
    "GENERALIZED_GAMMA",
    "MALE_F0_RANGE",
    "SAMPLE_RATE",
    "EnvelopeConfig",
    "NoiseConfig",
    "NormalizationConfig",
    "PitchConfig",
    "SynthesisOptions",
    "TrainConfig",
    "WindowName",
]

SAMPLE_RATE = 16000
GENERALIZED_GAMMA = -1.0 / 3.0
MALE_F0_RANGE = (60.0, 240.0)
FEMALE_F0_RANGE = (120.0, 400.0)

WindowName = Literal["hamming", "hanning", "blackman"]


class EnvelopeConfig(BaseModel):
    """メルケプストラム (gamma=0) / メル一般化ケプストラム (gamma=-1/3) 解析の設定."""

    model_config = ConfigDict(frozen=True)

    alpha: float = 0.42
    gamma: float = 0.0
    order: int = Field(default=24, ge=1)
    frame_shift: float = Field(default=0.005, gt=0.0)
    frame_length: float = Field(default=0.025, gt=0.0)
    window: WindowName = "hamming"

    @field_validator("alpha")
    @classmethod
    def alpha_in_range(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            msg = "alpha must satisfy 0 <= alpha < 1"
            raise ValueError(msg)
        return v

    @field_validator("gamma")
    @classmethod
    def gamma_supported(cls, v: float) -> float:
        if v != 0.0 and not math.isclose(v, GENERALIZED_GAMMA, abs_tol=1e-12):
            msg = "gamma must be 0 or -1/3"
            raise ValueError(msg)
        return GENERALIZED_GAMMA if v != 0.0 else 0.0

    @model_validator(mode="after")
    def shift_shorter_than_length(self) -> "EnvelopeConfig":
        if self.frame_shift >= self.frame_length:
            msg = "frame_shift must be shorter than frame_length"
            raise ValueError(msg)
        return self

    @property
    def generalized(self) -> bool:
        """gamma=-1/3 の一般化バックエンドかどうか."""
        return self.gamma != 0.0

    def hop_samples(self, sample_rate: int) -> int:
        return round(self.frame_shift * sample_rate)

    def frame_samples(self, sample_rate: int) -> int:
        return round(self.frame_length * sample_rate)

    def fft_length(self, sample_rate: int) -> int:
        """解析窓長以上の最小の 2 のべき."""
        return 1 << (self.frame_samples(sample_rate) - 1).bit_length()


class PitchConfig(BaseModel):
    """自己相関ピッチ推定の設定."""

    model_config = ConfigDict(frozen=True)

    f0_min: float = MALE_F0_RANGE[0]
    f0_max: float = MALE_F0_RANGE[1]
    window: float = 0.040
    hop: float = 0.010
    voicing_threshold: float = 0.30
    energy_gate: float = 0.02
    median_length: int = 5

    @model_validator(mode="after")
    def range_is_ordered(self) -> "PitchConfig":
        if not 0.0 < self.f0_min < self.f0_max:
            msg = "pitch range must satisfy 0 < f0_min < f0_max"
            raise ValueError(msg)
        return self


class NormalizationConfig(BaseModel):
    """ピッチ・エネルギー正規化の設定.

    F0* は F_N / F_m * F0_min 以下でなければならない (合成時に F_m 以下の
    帯域にエネルギーの穴が開かないための条件).
    """

    model_config = ConfigDict(frozen=True)

    sample_rate: int = SAMPLE_RATE
    max_voiced_frequency: float = 4000.0
    f0_min: float
    f0_max: float
    f0_star: float
    normalized_length: int

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    @property
    def f0_star_bound(self) -> float:
        return self.nyquist / self.max_voiced_frequency * self.f0_min

    @model_validator(mode="after")
    def check_band_condition(self) -> "NormalizationConfig":
        if self.sample_rate <= 0:
            msg = "sample_rate must be positive"
            raise ValueError(msg)
        if not 0.0 < self.max_voiced_frequency <= self.nyquist:
            msg = "max_voiced_frequency must lie in (0, Nyquist]"
            raise ValueError(msg)
        if not 0.0 < self.f0_min < self.f0_max:
            msg = "pitch range must satisfy 0 < f0_min < f0_max"
            raise ValueError(msg)
        if not 0.0 < self.f0_star <= self.f0_star_bound * (1.0 + 1e-12):
            msg = (
                f"f0_star={self.f0_star} violates f0_star <= F_N/F_m*F0_min "
                f"= {self.f0_star_bound}"
            )
            raise ValueError(msg)
        if self.normalized_length != round(2.0 * self.sample_rate / self.f0_star):
            msg = "normalized_length must equal round(2 * sample_rate / f0_star)"
            raise ValueError(msg)
        return self


class NoiseConfig(BaseModel):
    """確率的成分 (高域雑音) の学習設定."""

    model_config = ConfigDict(frozen=True)

    ar_order: int = Field(default=18, ge=2)
    beta: float = 0.5
    prefilter: bool = True

    @field_validator("beta")
    @classmethod
    def beta_in_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            msg = "beta must lie in (0, 1]"
            raise ValueError(msg)
        return v


class TrainConfig(BaseModel):
    """cmd_train の設定."""

    model_config = ConfigDict(frozen=True)

    corpus_dir: Path
    output: Path
    f0_min: float = MALE_F0_RANGE[0]
    f0_max: float = MALE_F0_RANGE[1]
    max_voiced_frequency: float = 4000.0
    f0_star: float | None = None
    coverage: float = 0.8
    f0_dir: Path | None = None
    center: bool = True
    max_components: int = Field(default=64, ge=1)
    max_minutes: float | None = None
    jobs: int = Field(default=1, ge=0)
    envelope: EnvelopeConfig = EnvelopeConfig()
    noise: NoiseConfig = NoiseConfig()
    dataset_dump: Path | None = None

    @field_validator("coverage")
    @classmethod
    def coverage_in_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            msg = "coverage must lie in (0, 1]"
            raise ValueError(msg)
        return v

    @model_validator(mode="after")
    def check_pitch_band(self) -> "TrainConfig":
        if not 0.0 < self.f0_min < self.f0_max:
            msg = "pitch range must satisfy 0 < f0_min < f0_max"
            raise ValueError(msg)
        if self.max_voiced_frequency > SAMPLE_RATE / 2:
            msg = "max_voiced_frequency exceeds the Nyquist frequency"
            raise ValueError(msg)
        return self

    @property
    def pitch(self) -> PitchConfig:
        return PitchConfig(f0_min=self.f0_min, f0_max=self.f0_max)


class SynthesisOptions(BaseModel):
    """合成時のオプション. None はモデルの学習値を使う."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0)
    beta: float | None = None
    noise_gain: float | None = None
    excitation: Literal["dsm", "pulse"] = "dsm"

    @field_validator("beta")
    @classmethod
    def beta_in_range(cls, v: float | None) -> float | None:
        if v is not None and not 0.0 < v <= 1.0:
            msg = "beta must lie in (0, 1]"
            raise ValueError(msg)
        return v

    @field_validator("noise_gain")
    @classmethod
    def gain_not_negative(cls, v: float | None) -> float | None:
        if v is not None and v < 0.0:
            msg = "noise_gain must be >= 0"
            raise ValueError(msg)
        return v
