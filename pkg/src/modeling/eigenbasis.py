"""正規化残差フレームの PCA (固有残差)."""

from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import eigh

from src.errors import DegenerateBasisError
from src.logger import logger
from src.model.models import DispersionCurve, EigenBasis

__all__ = [
    "MAX_STORED_COMPONENTS",
    "dispersion",
    "fit_pca",
    "project",
    "reconstruct",
    "select_components",
    "subspace_similarity",
]

MAX_STORED_COMPONENTS = 64
_COVERAGE_TOLERANCE = 1e-12


def _as_dataset(frames: ArrayLike | Sequence[ArrayLike]) -> NDArray[np.float64]:
    if isinstance(frames, np.ndarray):
        x = np.asarray(frames, dtype=np.float64)
    else:
        rows = [np.asarray(f, dtype=np.float64) for f in frames]
        lengths = {r.shape for r in rows}
        if len(lengths) > 1:
            msg = f"frames have inconsistent lengths: {sorted(s[0] for s in lengths)}"
            raise ValueError(msg)
        x = np.stack(rows) if rows else np.zeros((0, 0))
    if x.ndim != 2:  # noqa: PLR2004
        msg = "frames must form a 2-D dataset (n_frames, length)"
        raise ValueError(msg)
    if x.shape[0] < 2:  # noqa: PLR2004
        msg = f"PCA needs at least 2 frames, got {x.shape[0]}"
        raise ValueError(msg)
    return x


def _fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    """各固有ベクトルの絶対値最大の要素を正にする."""
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0.0] = 1.0
    return vectors * signs[:, None]


def fit_pca(
    frames: ArrayLike | Sequence[ArrayLike],
    *,
    center: bool = True,
    max_components: int = MAX_STORED_COMPONENTS,
) -> EigenBasis:
    """標本共分散 (1/n) の固有分解で基底を求める.

    固有値はランク上限 min(n, length) まで全部, 固有ベクトルは先頭
    max_components 本までを保持する. center=False のときは平均を 0 とし,
    原点まわりの 2 次モーメント行列を分解する.

    Raises:
        ValueError: フレームが 2 未満, または長さがそろっていない

    """
    x = _as_dataset(frames)
    n, length = x.shape
    mean = x.mean(axis=0) if center else np.zeros(length)
    y = x - mean
    cov = (y.T @ y) / n
    values, vectors = eigh(cov)
    order = np.argsort(values, kind="stable")[::-1]
    values = np.clip(values[order], 0.0, None)
    vectors = vectors[:, order].T

    rank = min(n, length)
    kept = min(rank, max_components)
    vectors = _fix_signs(vectors[:kept])
    first = float(np.mean(np.abs(y @ vectors[0]))) if kept else 0.0
    logger.info(
        "PCA: %d frames of length %d, storing %d of %d components",
        n,
        length,
        kept,
        rank,
    )
    return EigenBasis(
        mean=mean,
        eigenvectors=vectors,
        eigenvalues=values[:rank],
        training_frame_count=n,
        centered=center,
        first_weight_magnitude=first,
    )


def dispersion(basis: EigenBasis) -> DispersionCurve:
    """先頭 k 本が説明する分散の累積割合.

    Raises:
        DegenerateBasisError: 固有値の和が 0 (学習フレームがすべて同じ形)

    """
    values = basis.eigenvalues
    total = float(values.sum())
    if total <= 0.0:
        msg = "all eigenvalues are zero; the training frames carry no variance"
        raise DegenerateBasisError(msg)
    curve = np.cumsum(values) / total
    curve[-1] = 1.0
    return DispersionCurve(curve)


def select_components(curve: DispersionCurve, coverage: float) -> int:
    """累積割合が coverage 以上になる最小の k (1 始まり)."""
    if not 0.0 < coverage <= 1.0:
        msg = "coverage must lie in (0, 1]"
        raise ValueError(msg)
    reached = np.flatnonzero(
        curve.cumulative_fraction >= coverage - _COVERAGE_TOLERANCE
    )
    return int(reached[0]) + 1 if reached.size else len(curve)


def project(frame: ArrayLike, basis: EigenBasis, k: int) -> NDArray[np.float64]:
    """(frame - mean) と先頭 k 本の固有ベクトルの内積."""
    f = np.asarray(frame, dtype=np.float64)
    if f.shape != (basis.length,):
        msg = f"frame length {f.shape} does not match basis length {basis.length}"
        raise ValueError(msg)
    if not 0 <= k <= basis.n_components:
        msg = f"k={k} exceeds the {basis.n_components} stored eigenvectors"
        raise ValueError(msg)
    return basis.eigenvectors[:k] @ (f - basis.mean)


def reconstruct(weights: ArrayLike, basis: EigenBasis) -> NDArray[np.float64]:
    """mean + sum(w_i * v_i)."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.shape[0] > basis.n_components:
        msg = (
            f"{w.shape[0]} weights given but only {basis.n_components} "
            "eigenvectors are stored"
        )
        raise ValueError(msg)
    return basis.mean + w @ basis.eigenvectors[: w.shape[0]]


def subspace_similarity(a: EigenBasis, b: EigenBasis, k: int) -> float:
    """先頭 k 本が張る部分空間の一致度 (平均二乗余弦, 0..1).

    学習データ量を変えたときの固有ベクトルの安定性の確認に使う.
    """
    if a.length != b.length:
        msg = "bases have different frame lengths"
        raise ValueError(msg)
    k = min(k, a.n_components, b.n_components)
    if k <= 0:
        msg = "k must be positive"
        raise ValueError(msg)
    cross = a.eigenvectors[:k] @ b.eigenvectors[:k].T
    return float(np.sum(cross**2) / k)
