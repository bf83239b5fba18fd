"""Deterministic synthetic signature corpus generator and corpus file I/O.

Real captures are unavailable, so each user gets a smooth per-channel
template curve (piecewise cubic through a handful of control points).
Genuine samples are the template plus small sensor noise; skilled forgeries
re-trace the template through a monotone time warp with per-channel
amplitude jitter and larger noise - shape preserved, dynamics off.

All randomness flows through per-(user, sample) derived streams of one
master seed, so generation order never changes the corpus.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import IoFailure, ParseFailure, SchemaViolation
from .samples import FORGED, GENUINE, LABELS, N_CHANNELS, RawSignatureSample

#: Plausible value range per channel, canonical channel order.
#: Accelerations m/s^2, magnetic field mT, orientation degrees, gyro rad/s.
DEFAULT_CHANNEL_RANGES = (
    (-12.0, 12.0), (-12.0, 12.0), (-12.0, 12.0),
    (-60.0, 60.0), (-60.0, 60.0), (-60.0, 60.0),
    (0.0, 360.0), (-90.0, 90.0), (-180.0, 180.0),
    (-6.0, 6.0), (-6.0, 6.0), (-6.0, 6.0),
)

DEFAULT_CONTROL_POINTS = 8
DEFAULT_RAW_LEN = 128

# Profile parameter draws (uniform bounds). Noise scales are fractions of the
# channel's value span; the warp amplitude keeps the time map monotone.
_SIGMA_GENUINE = (0.008, 0.015)
_FORGERY_NOISE_RATIO = (2.5, 4.0)
_WARP_AMPLITUDE = (0.10, 0.20)
_SCALE_JITTER = (0.05, 0.15)
_DURATION = (1.5, 3.0)

_MASK64 = (1 << 64) - 1


def _derive_rng(seed: int, *tokens) -> np.random.Generator:
    """A PRNG stream keyed by (seed, tokens), stable across runs and platforms."""
    h = hashlib.sha256()
    for tok in tokens:
        h.update(repr(tok).encode())
        h.update(b"\x1f")
    words = np.frombuffer(h.digest()[:16], dtype=np.uint32)
    entropy = [int(seed) & _MASK64] + [int(w) for w in words]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _stream_key(seed: int, user_id: str) -> int:
    h = hashlib.sha256(f"{int(seed) & _MASK64}/{user_id}".encode()).digest()
    return int.from_bytes(h[:8], "little")


@dataclass(frozen=True)
class UserProfile:
    """Per-user template curve and distortion parameters."""

    user_id: str
    control_points: np.ndarray     # (12, K)
    channel_spans: np.ndarray      # (12,) value span per channel
    duration: float                # seconds per signature
    sigma_genuine: float           # noise fraction for genuine samples
    warp_amplitude: float          # forgery time-warp strength w
    scale_jitter: float            # forgery amplitude jitter a
    sigma_forged: float            # noise fraction for forgeries
    stream_key: int                # derived sample-stream key


@dataclass(frozen=True)
class GenConfig:
    """Corpus shape and determinism knobs."""

    n_users: int
    n_genuine: int = 20
    n_forged: int = 20
    raw_len: int = DEFAULT_RAW_LEN
    seed: int = 0
    channel_ranges: tuple = DEFAULT_CHANNEL_RANGES
    n_control: int = DEFAULT_CONTROL_POINTS

    def validate(self) -> None:
        if self.n_users < 0 or self.n_genuine < 0 or self.n_forged < 0:
            raise ValueError("counts must be non-negative")
        if self.raw_len < 2:
            raise ValueError("raw_len must be >= 2")
        if len(self.channel_ranges) != N_CHANNELS:
            raise ValueError(f"need {N_CHANNELS} channel ranges")


def gen_profile(
    seed: int,
    user_id: str,
    ranges=DEFAULT_CHANNEL_RANGES,
    n_control: int = DEFAULT_CONTROL_POINTS,
) -> UserProfile:
    """Deterministic profile for (seed, user_id)."""
    rng = _derive_rng(seed, "profile", user_id)
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    cps = rng.uniform(lo[:, None], hi[:, None], size=(N_CHANNELS, n_control))
    sigma_g = rng.uniform(*_SIGMA_GENUINE)
    return UserProfile(
        user_id=user_id,
        control_points=cps,
        channel_spans=hi - lo,
        duration=float(rng.uniform(*_DURATION)),
        sigma_genuine=float(sigma_g),
        warp_amplitude=float(rng.uniform(*_WARP_AMPLITUDE)),
        scale_jitter=float(rng.uniform(*_SCALE_JITTER)),
        sigma_forged=float(sigma_g * rng.uniform(*_FORGERY_NOISE_RATIO)),
        stream_key=_stream_key(seed, user_id),
    )


def _template_spline(profile: UserProfile) -> CubicSpline:
    """The user's smooth template curve on normalized time [0, 1]."""
    knots = np.linspace(0.0, 1.0, profile.control_points.shape[1])
    return CubicSpline(knots, profile.control_points, axis=1, bc_type="natural")


def template_curve(profile: UserProfile, length: int) -> np.ndarray:
    """Noiseless template evaluated at `length` uniform times, (12, length)."""
    return _template_spline(profile)(np.linspace(0.0, 1.0, length))


def gen_sample(
    profile: UserProfile,
    label: str,
    sample_id: int,
    raw_len: int = DEFAULT_RAW_LEN,
    _spline: CubicSpline | None = None,
) -> RawSignatureSample:
    """One capture, deterministic under (profile, label, sample_id).

    Genuine: template(t) + noise.  Forged: per-channel amplitude scaling of
    template(warp(t)) + larger noise, where warp is a monotone map of [0, 1]
    fixing both endpoints.
    """
    if label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}, got {label!r}")
    rng = _derive_rng(profile.stream_key, label, int(sample_id))
    spline = _spline if _spline is not None else _template_spline(profile)
    t = np.linspace(0.0, 1.0, raw_len)
    if label == GENUINE:
        values = spline(t)
        sigma = profile.sigma_genuine
    else:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        warped = t + profile.warp_amplitude * t * (1.0 - t) * np.sin(
            2.0 * math.pi * t + phase
        )
        scales = rng.uniform(
            1.0 - profile.scale_jitter, 1.0 + profile.scale_jitter, size=N_CHANNELS
        )
        values = scales[:, None] * spline(warped)
        sigma = profile.sigma_forged
    noise = sigma * profile.channel_spans[:, None] * rng.standard_normal(
        (N_CHANNELS, raw_len)
    )
    return RawSignatureSample(
        user_id=profile.user_id,
        sample_id=int(sample_id),
        label=label,
        timestamps=t * profile.duration,
        channels=values + noise,
    )


def user_ids(cfg: GenConfig) -> list[str]:
    width = max(4, len(str(cfg.n_users)))
    return [f"u{i:0{width}d}" for i in range(1, cfg.n_users + 1)]


def gen_dataset(cfg: GenConfig) -> list[RawSignatureSample]:
    """The full corpus: n_users x (n_genuine + n_forged) samples, canonical order."""
    cfg.validate()
    out: list[RawSignatureSample] = []
    for uid in user_ids(cfg):
        profile = gen_profile(cfg.seed, uid, cfg.channel_ranges, cfg.n_control)
        spline = _template_spline(profile)
        for sid in range(cfg.n_genuine):
            out.append(gen_sample(profile, GENUINE, sid, cfg.raw_len, _spline=spline))
        for j in range(cfg.n_forged):
            out.append(
                gen_sample(profile, FORGED, cfg.n_genuine + j, cfg.raw_len, _spline=spline)
            )
    return out


# --- corpus file I/O --------------------------------------------------------
#
# JSON-lines, one sample per line:
#   {"user_id": str, "sample_id": int, "label": "genuine"|"forged",
#    "rows": [[t, 12 channel values], ...]}

def write_dataset(samples, path) -> None:
    """Serialize samples as JSON-lines in canonical (user_id, sample_id) order."""
    ordered = sorted(samples, key=lambda s: (s.user_id, s.sample_id))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for s in ordered:
                rows = np.column_stack([s.timestamps, s.channels.T]).tolist()
                rec = {
                    "user_id": s.user_id,
                    "sample_id": int(s.sample_id),
                    "label": s.label,
                    "rows": rows,
                }
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _reject_constant(token: str):
    raise ValueError(f"non-finite literal {token}")


def read_dataset(path) -> list[RawSignatureSample]:
    """Parse a corpus file; empty file gives an empty list."""
    out: list[RawSignatureSample] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line, parse_constant=_reject_constant)
        except ValueError as exc:
            raise ParseFailure(f"line {lineno}: {exc}") from exc
        out.append(_record_to_sample(rec, lineno))
    return out


def _record_to_sample(rec, lineno: int) -> RawSignatureSample:
    if not isinstance(rec, dict):
        raise SchemaViolation(f"line {lineno}: expected an object")
    for key in ("user_id", "sample_id", "label", "rows"):
        if key not in rec:
            raise SchemaViolation(f"line {lineno}: missing key {key!r}")
    if rec["label"] not in LABELS:
        raise SchemaViolation(f"line {lineno}: bad label {rec['label']!r}")
    rows = rec["rows"]
    if not isinstance(rows, list):
        raise SchemaViolation(f"line {lineno}: rows must be a list")
    for row in rows:
        if not isinstance(row, list) or len(row) != 1 + N_CHANNELS:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise SchemaViolation(
                f"line {lineno}: each row needs {1 + N_CHANNELS} numbers, got {got}"
            )
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(f"line {lineno}: non-numeric row value: {exc}") from exc
    if arr.size == 0:
        arr = arr.reshape(0, 1 + N_CHANNELS)
    if not np.all(np.isfinite(arr)):
        raise SchemaViolation(f"line {lineno}: non-finite value in rows")
    return RawSignatureSample(
        user_id=str(rec["user_id"]),
        sample_id=int(rec["sample_id"]),
        label=rec["label"],
        timestamps=arr[:, 0],
        channels=arr[:, 1:].T,
    )
