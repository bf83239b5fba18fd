"""Sequential and partition-parallel PCA preprocessing.

The pipeline is: covariance -> scale vector S -> correlation -> SVD ->
projection.  The covariance is computed through an accumulator monoid
(n, sum, sum of outer products) so that partition partials combine with a
plain reducer; partials are always combined in canonical partition order,
which keeps results bitwise stable under scheduling nondeterminism.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DecompositionFailure,
    DimensionMismatch,
    InsufficientSamples,
    IoFailure,
    NonFiniteInput,
    ZeroVarianceFeature,
)
from .samples import Dataset

DEFAULT_K_RULE = "quarter"


@dataclass
class CovarianceAccumulator:
    """The map-reduce partial state: n, s = sum(x), Q = sum(x xT)."""

    n: int
    s: np.ndarray   # (d,)
    q: np.ndarray   # (d, d)

    @classmethod
    def empty(cls, dim: int) -> "CovarianceAccumulator":
        return cls(0, np.zeros(dim), np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return int(self.s.shape[0])


def cov_map(partition: np.ndarray) -> CovarianceAccumulator:
    """Accumulate one partition of row vectors (may be empty)."""
    x = np.asarray(partition, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D partition, got shape {x.shape}")
    return CovarianceAccumulator(n=x.shape[0], s=x.sum(axis=0), q=x.T @ x)


def cov_reduce(a: CovarianceAccumulator, b: CovarianceAccumulator) -> CovarianceAccumulator:
    """Componentwise sum of two partials (commutative; identity = empty)."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"accumulator dims differ: {a.dim} vs {b.dim}")
    return CovarianceAccumulator(n=a.n + b.n, s=a.s + b.s, q=a.q + b.q)


def _finalize(acc: CovarianceAccumulator) -> tuple[np.ndarray, np.ndarray]:
    """(mean, covariance) from an accumulator, n-1 denominator."""
    if acc.n < 2:
        raise InsufficientSamples(f"covariance needs >= 2 samples, got {acc.n}")
    mean = acc.s / acc.n
    c = (acc.q - acc.n * np.outer(mean, mean)) / (acc.n - 1)
    return mean, c


def covariance(x: np.ndarray) -> np.ndarray:
    """Sample covariance of an n x d data matrix via the accumulator algebra."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected an n x d matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("data matrix contains NaN or infinity")
    _, c = _finalize(cov_map(x))
    return c


def scale_vector(c: np.ndarray) -> np.ndarray:
    """S = sqrt(diagonal of C); every diagonal entry must be positive."""
    diag = np.diagonal(c)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise ZeroVarianceFeature(int(bad[0]))
    return np.sqrt(diag)


def correlation(c: np.ndarray) -> np.ndarray:
    """R = C / (S ST), elementwise division by the outer product of scales."""
    s = scale_vector(c)
    return c / np.outer(s, s)


def resolve_k(explained: np.ndarray, rule: str = DEFAULT_K_RULE) -> int:
    """Retained component count for a k-rule.

    "quarter": k = ceil(d / 4).  "var:<frac>": smallest k whose cumulative
    explained fraction reaches <frac>.
    """
    d = explained.shape[0]
    if rule == "quarter":
        return math.ceil(0.25 * d)
    if rule.startswith("var:"):
        frac = float(rule[4:])
        if not 0.0 < frac <= 1.0:
            raise ValueError(f"variance fraction must be in (0, 1], got {frac}")
        cum = np.cumsum(explained) / np.sum(explained)
        return int(np.searchsorted(cum, frac - 1e-12) + 1)
    raise ValueError(f"unknown k rule {rule!r}")


@dataclass
class PcaModel:
    """Standardize-and-project model fitted on the correlation matrix."""

    mean: np.ndarray        # (d,)
    scale: np.ndarray       # (d,) the S vector
    axes: np.ndarray        # (d, d) orthonormal columns, variance descending
    explained: np.ndarray   # (d,) singular values of R
    k: int

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def to_dict(self) -> dict:
        return {
            "d": self.dim,
            "k": self.k,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "explained": self.explained.tolist(),
            "axes": self.axes.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PcaModel":
        model = cls(
            mean=np.asarray(doc["mean"], dtype=float),
            scale=np.asarray(doc["scale"], dtype=float),
            axes=np.asarray(doc["axes"], dtype=float),
            explained=np.asarray(doc["explained"], dtype=float),
            k=int(doc["k"]),
        )
        if model.axes.shape != (model.dim, model.dim) or not 1 <= model.k <= model.dim:
            raise DimensionMismatch("inconsistent PCA model document")
        return model


def save_pca(model: PcaModel, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(model.to_dict(), fh)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_pca(path) -> PcaModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return PcaModel.from_dict(doc)


def _fix_signs(axes: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = axes.copy()
    for j in range(out.shape[1]):
        lead = np.argmax(np.abs(out[:, j]))
        if out[lead, j] < 0:
            out[:, j] = -out[:, j]
    return out


def pca_fit(
    r: np.ndarray, mean: np.ndarray, scale: np.ndarray, k_rule: str = DEFAULT_K_RULE
) -> PcaModel:
    """SVD of the correlation matrix; axes sign-fixed and sorted descending."""
    try:
        u, sing, _ = np.linalg.svd(r)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(f"SVD did not converge: {exc}") from exc
    axes = _fix_signs(u)
    k = resolve_k(sing, k_rule)
    return PcaModel(
        mean=np.asarray(mean, dtype=float),
        scale=np.asarray(scale, dtype=float),
        axes=axes,
        explained=sing,
        k=k,
    )


def pca_project(model: PcaModel, x: np.ndarray, k: int | None = None) -> np.ndarray:
    """y = axes[:, :k]T ((x - mean) / scale) for a vector or a row matrix."""
    k = model.k if k is None else k
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dim:
        raise DimensionMismatch(
            f"vector dim {x.shape[-1]} does not match model dim {model.dim}"
        )
    standardized = (x - model.mean) / model.scale
    return standardized @ model.axes[:, :k]


def pca_reconstruct(model: PcaModel, y: np.ndarray) -> np.ndarray:
    """Inverse of pca_project (exact when y uses all d components)."""
    y = np.asarray(y, dtype=float)
    k = y.shape[-1]
    return (y @ model.axes[:, :k].T) * model.scale + model.mean


def preprocess(ds: Dataset, k_rule: str = DEFAULT_K_RULE) -> tuple[PcaModel, Dataset]:
    """The sequential path: covariance -> correlation -> SVD -> project."""
    x = ds.vectors
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("data matrix contains NaN or infinity")
    mean, c = _finalize(cov_map(x))
    model = pca_fit(correlation(c), mean, scale_vector(c), k_rule)
    return model, replace(ds, vectors=pca_project(model, x))


def dist_preprocess(
    ds: Dataset, workers: int = 1, k_rule: str = DEFAULT_K_RULE
) -> tuple[PcaModel, Dataset]:
    """Partition-parallel preprocessing.

    The data matrix splits into `workers` contiguous partitions; cov_map runs
    per partition concurrently and partials combine in partition order.  The
    fitted model then projects each partition (again in parallel), so the
    result is independent of `workers` up to float association (<= 1e-9).
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    x = ds.vectors
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("data matrix contains NaN or infinity")
    if workers == 1:
        return preprocess(ds, k_rule)
    parts = np.array_split(x, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        partials = list(pool.map(cov_map, parts))
    acc = partials[0]
    for partial in partials[1:]:
        acc = cov_reduce(acc, partial)
    mean, c = _finalize(acc)
    model = pca_fit(correlation(c), mean, scale_vector(c), k_rule)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        projected = list(pool.map(lambda p: pca_project(model, p), parts))
    return model, replace(ds, vectors=np.vstack(projected))
