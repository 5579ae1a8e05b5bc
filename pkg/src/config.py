"""実行時設定 (.env.local と環境変数)."""

import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, field_validator

__all__ = ["REPO_ROOT", "RuntimeSettings", "load_local_env", "load_settings"]

REPO_ROOT = Path(__file__).resolve().parent.parent


class RuntimeSettings(BaseModel):
    """環境変数から読む実行時設定. アルゴリズム定数はここに置かない."""

    log_level: str = "WARNING"
    log_file: Path | None = None
    jobs: int = 1
    model_path: Path | None = None

    @field_validator("jobs")
    @classmethod
    def jobs_must_not_be_negative(cls, v: int) -> int:
        """0 は CPU 数に合わせる指定."""
        if v < 0:
            msg = "DSM_JOBS must be >= 0"
            raise ValueError(msg)
        return v


def load_local_env() -> None:
    load_dotenv(dotenv_path=REPO_ROOT / ".env.local", override=False)


def load_settings() -> RuntimeSettings:
    """.env.local を読み込んでから RuntimeSettings を組み立てる."""
    load_local_env()
    return RuntimeSettings(
        log_level=os.getenv("DSM_LOG_LEVEL", "WARNING"),
        log_file=os.getenv("DSM_LOG_FILE") or None,
        jobs=int(os.getenv("DSM_JOBS", "1")),
        model_path=os.getenv("DSM_MODEL_PATH") or None,
    )
