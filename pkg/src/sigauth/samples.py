"""Domain types for dynamic-signature samples and the deterministic transforms
that turn variable-length sensor streams into fixed-dimension feature vectors.

A capture is a time series of 12 sensor channels (acceleration, magnetic
field, orientation, angular velocity - three axes each).  The channel order
below is frozen: feature masks, flattened vectors and the ablation harness
all index into it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    EmptyMask,
    NonMonotonicTime,
    TooFewRows,
)

GENUINE = "genuine"
FORGED = "forged"
LABELS = (GENUINE, FORGED)

#: Sensor channels in their canonical order.  Units: acceleration in m/s^2,
#: magnetic field in mT, orientation in degrees, angular velocity in rad/s.
CHANNELS = (
    "x_accel", "y_accel", "z_accel",
    "x_mag", "y_mag", "z_mag",
    "azimuth", "pitch", "roll",
    "x_gyro", "y_gyro", "z_gyro",
)
N_CHANNELS = len(CHANNELS)

#: Default number of uniformly spaced points each channel is resampled onto.
DEFAULT_RESAMPLE_LEN = 64


@dataclass(frozen=True)
class RawSignatureSample:
    """One captured signature: timestamps plus a 12 x n channel matrix."""

    user_id: str
    sample_id: str | int
    label: str
    timestamps: np.ndarray   # (n,) seconds
    channels: np.ndarray     # (N_CHANNELS, n)

    def n_rows(self) -> int:
        return int(self.timestamps.shape[0])

    def validate(self) -> None:
        """Raise if the sample breaks a structural invariant."""
        if self.channels.ndim != 2 or self.channels.shape[0] != N_CHANNELS:
            raise DimensionMismatch(
                f"expected {N_CHANNELS} channels, got shape {self.channels.shape}"
            )
        if self.n_rows() < 2:
            raise TooFewRows(
                f"sample {self.user_id}/{self.sample_id} has {self.n_rows()} row(s)"
            )
        if self.channels.shape[1] != self.n_rows():
            raise DimensionMismatch("timestamps and channels disagree on row count")
        if not np.all(np.diff(self.timestamps) > 0):
            raise NonMonotonicTime(
                f"sample {self.user_id}/{self.sample_id} timestamps not strictly increasing"
            )


@dataclass(frozen=True)
class FeatureMask:
    """Which of the 12 channels enter the feature vector, in canonical order."""

    included: tuple[bool, ...]

    def __post_init__(self):
        if len(self.included) != N_CHANNELS:
            raise DimensionMismatch(
                f"mask needs {N_CHANNELS} positions, got {len(self.included)}"
            )
        if not any(self.included):
            raise EmptyMask("feature mask includes no channel")

    @classmethod
    def full(cls) -> "FeatureMask":
        return cls((True,) * N_CHANNELS)

    @classmethod
    def excluding(cls, *indices: int) -> "FeatureMask":
        """Mask with every channel included except the given canonical indices."""
        flags = [True] * N_CHANNELS
        for i in indices:
            flags[i] = False
        return cls(tuple(flags))

    @property
    def count(self) -> int:
        return sum(self.included)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, keep in enumerate(self.included) if keep)

    def names(self) -> tuple[str, ...]:
        return tuple(CHANNELS[i] for i in self.indices)

    def as_bits(self) -> str:
        return "".join("1" if keep else "0" for keep in self.included)

    @classmethod
    def from_bits(cls, bits: str) -> "FeatureMask":
        return cls(tuple(c == "1" for c in bits))


@dataclass
class Dataset:
    """A stack of equal-dimension feature vectors with per-row bookkeeping."""

    vectors: np.ndarray      # (n, dim) float64
    labels: np.ndarray       # (n,) unicode, values in LABELS
    user_ids: np.ndarray     # (n,) unicode
    sample_ids: np.ndarray   # (n,) unicode
    resample_len: int
    mask: FeatureMask
    seed: int | None = None

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def take(self, idx: np.ndarray) -> "Dataset":
        """A new Dataset restricted to the given row indices."""
        return replace(
            self,
            vectors=self.vectors[idx],
            labels=self.labels[idx],
            user_ids=self.user_ids[idx],
            sample_ids=self.sample_ids[idx],
        )

    def users(self) -> list[str]:
        return sorted(set(self.user_ids.tolist()))

    def for_user(self, user_id: str) -> "Dataset":
        return self.take(np.flatnonzero(self.user_ids == user_id))


def resample(sample: RawSignatureSample, length: int = DEFAULT_RESAMPLE_LEN) -> np.ndarray:
    """Linearly interpolate each channel onto `length` uniformly spaced times.

    The grid spans [first timestamp, last timestamp], so no extrapolation
    happens and every output value stays inside the channel's input range.

    Returns a (12, length) matrix.
    """
    if length < 2:
        raise DimensionMismatch(f"resample length must be >= 2, got {length}")
    sample.validate()
    t = np.asarray(sample.timestamps, dtype=float)
    grid = np.linspace(t[0], t[-1], length)
    out = np.empty((N_CHANNELS, length))
    for c in range(N_CHANNELS):
        out[c] = np.interp(grid, t, sample.channels[c])
    return out


def flatten(resampled: np.ndarray, mask: FeatureMask) -> np.ndarray:
    """Channel-major concatenation of the mask's channels.

    Dimension is always popcount(mask) * L: all L values of the first
    included channel, then the next, and so on.
    """
    if resampled.ndim != 2 or resampled.shape[0] != N_CHANNELS:
        raise DimensionMismatch(
            f"expected a ({N_CHANNELS}, L) matrix, got shape {resampled.shape}"
        )
    if mask.count == 0:  # unreachable through the constructor, kept as a guard
        raise EmptyMask("feature mask includes no channel")
    return np.concatenate([resampled[i] for i in mask.indices])


def vectorize(
    samples: Iterable[RawSignatureSample],
    resample_len: int = DEFAULT_RESAMPLE_LEN,
    mask: FeatureMask | None = None,
    seed: int | None = None,
) -> Dataset:
    """Resample + flatten a collection of raw samples into a Dataset.

    Rows keep the input iteration order.
    """
    mask = mask or FeatureMask.full()
    rows, labels, users, ids = [], [], [], []
    for s in samples:
        rows.append(flatten(resample(s, resample_len), mask))
        labels.append(s.label)
        users.append(s.user_id)
        ids.append(str(s.sample_id))
    if not rows:
        raise EmptyDataset("no samples to vectorize")
    return Dataset(
        vectors=np.vstack(rows),
        labels=np.asarray(labels),
        user_ids=np.asarray(users),
        sample_ids=np.asarray(ids),
        resample_len=resample_len,
        mask=mask,
        seed=seed,
    )


def canonical_order(ds: Dataset) -> np.ndarray:
    """Row indices sorted by (user_id, label, sample_id)."""
    return np.lexsort((ds.sample_ids, ds.labels, ds.user_ids))


def stratified_split(
    ds: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Split per (user_id, label) group: floor(fraction * count) rows to train.

    The draw is deterministic under `seed` and independent of the input row
    order; both outputs come back in canonical (user_id, sample_id) order.
    """
    if len(ds) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    order = canonical_order(ds)
    users, labels = ds.user_ids[order], ds.labels[order]
    train_idx, test_idx = [], []
    group_start = 0
    for i in range(1, len(order) + 1):
        boundary = i == len(order) or (users[i], labels[i]) != (users[group_start], labels[group_start])
        if not boundary:
            continue
        group = order[group_start:i]
        perm = rng.permutation(len(group))
        n_train = math.floor(train_fraction * len(group))
        train_idx.extend(group[perm[:n_train]])
        test_idx.extend(group[perm[n_train:]])
        group_start = i
    def _sorted_subset(idx: list[int]) -> Dataset:
        sub = ds.take(np.asarray(idx, dtype=int))
        key = np.lexsort((sub.sample_ids, sub.user_ids))
        return sub.take(key)
    return _sorted_subset(train_idx), _sorted_subset(test_idx)
