"""End-to-end orchestration: enrollment, verification, the file-backed
template store, and the stage-speedup benchmark.

The store is a directory of one JSON file per user plus a manifest carrying
SHA-256 checksums.  Every write lands in a temp file first and is moved into
place with os.replace, so readers never observe a partial template, and
enrollment output is byte-deterministic for a fixed (samples, config, seed).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import (
    CorruptStore,
    DimensionMismatch,
    InsufficientEnrollment,
    IoFailure,
    UserNotEnrolled,
)
from .metrics import SpeedupRecord, eer, roc, speedup
from .network import model_from_doc, model_to_doc, score_any
from .pca import PcaModel, dist_preprocess, pca_project, preprocess
from .samples import (
    Dataset,
    FeatureMask,
    FORGED,
    GENUINE,
    flatten,
    resample,
    vectorize,
)
from .trainers import TrainerConfig, dist_train_sample, train_sample

MANIFEST_NAME = "manifest.json"
STORE_FORMAT = 1

_SAFE_NAME = re.compile(r"[A-Za-z0-9_-][A-Za-z0-9._-]{0,63}\Z")


@dataclass(frozen=True)
class Fingerprint:
    """Preprocessing configuration a probe must be replayed through."""

    resample_len: int
    mask_bits: str        # one char per channel, '1' = included
    k: int
    trainer: str

    def mask(self) -> FeatureMask:
        return FeatureMask.from_bits(self.mask_bits)

    def to_dict(self) -> dict:
        return {
            "resample_len": self.resample_len,
            "mask": self.mask_bits,
            "k": self.k,
            "trainer": self.trainer,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Fingerprint":
        return cls(
            resample_len=int(doc["resample_len"]),
            mask_bits=str(doc["mask"]),
            k=int(doc["k"]),
            trainer=str(doc["trainer"]),
        )


@dataclass
class TemplateRecord:
    """Everything needed to verify one user: model, PCA, threshold, config."""

    user_id: str
    model: object            # Network or GlobalModel
    pca: PcaModel
    threshold: float
    fingerprint: Fingerprint
    enrolled_at: str = ""    # left blank by default to keep templates reproducible

    def __post_init__(self):
        if self.model.input_dim != self.pca.k:
            raise DimensionMismatch(
                f"model expects {self.model.input_dim} inputs, PCA keeps {self.pca.k}"
            )
        if self.fingerprint.k != self.pca.k:
            raise DimensionMismatch(
                f"fingerprint k {self.fingerprint.k} != PCA k {self.pca.k}"
            )
        if self.fingerprint.mask().count * self.fingerprint.resample_len != self.pca.dim:
            raise DimensionMismatch("fingerprint mask/length disagree with PCA input dim")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "threshold": float(self.threshold),
            "enrolled_at": self.enrolled_at,
            "fingerprint": self.fingerprint.to_dict(),
            "model": model_to_doc(self.model),
            "pca": self.pca.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TemplateRecord":
        return cls(
            user_id=str(doc["user_id"]),
            model=model_from_doc(doc["model"]),
            pca=PcaModel.from_dict(doc["pca"]),
            threshold=float(doc["threshold"]),
            fingerprint=Fingerprint.from_dict(doc["fingerprint"]),
            enrolled_at=str(doc.get("enrolled_at", "")),
        )


@dataclass(frozen=True)
class VerifyDecision:
    decision: str      # genuine | forged
    score: float
    threshold: float

    def __post_init__(self):
        if (self.decision == GENUINE) != (self.score >= self.threshold):
            raise ValueError("decision does not match score vs threshold")


# --- store -------------------------------------------------------------------

def _record_bytes(record: TemplateRecord) -> bytes:
    text = json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":"))
    return (text + "\n").encode("utf-8")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _user_filename(user_id: str) -> str:
    if _SAFE_NAME.match(user_id):
        return user_id + ".json"
    digest = hashlib.sha256(user_id.encode("utf-8")).hexdigest()[:16]
    return f"user-{digest}.json"


class TemplateStore:
    """In-memory user -> template map, optionally mirrored to a directory.

    With a root directory attached, every put() rewrites that user's file and
    the manifest atomically; many readers and a single writer are safe.
    """

    def __init__(self, root=None, records: dict[str, TemplateRecord] | None = None):
        self.root = Path(root) if root is not None else None
        self._records: dict[str, TemplateRecord] = dict(records or {})

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, user_id: str) -> bool:
        return user_id in self._records

    def users(self) -> list[str]:
        return sorted(self._records)

    def get(self, user_id: str) -> TemplateRecord:
        try:
            return self._records[user_id]
        except KeyError:
            raise UserNotEnrolled(f"user {user_id!r} has no template") from None

    def put(self, record: TemplateRecord) -> None:
        self._records[record.user_id] = record
        if self.root is not None:
            self._persist(record)

    def _manifest_bytes(self) -> bytes:
        users = {
            uid: {
                "file": _user_filename(uid),
                "sha256": hashlib.sha256(_record_bytes(rec)).hexdigest(),
            }
            for uid, rec in self._records.items()
        }
        doc = {"format": STORE_FORMAT, "users": users}
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return (text + "\n").encode("utf-8")

    def _persist(self, record: TemplateRecord) -> None:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create store at {self.root}: {exc}") from exc
        _atomic_write(self.root / _user_filename(record.user_id), _record_bytes(record))
        _atomic_write(self.root / MANIFEST_NAME, self._manifest_bytes())


def store_save(store: TemplateStore, path) -> None:
    """Write every template plus the checksum manifest under `path`."""
    out = TemplateStore(root=path, records=store._records)
    try:
        out.root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create store at {path}: {exc}") from exc
    for record in store._records.values():
        _atomic_write(out.root / _user_filename(record.user_id), _record_bytes(record))
    _atomic_write(out.root / MANIFEST_NAME, out._manifest_bytes())


def store_load(path) -> TemplateStore:
    """Load a store directory, verifying every file against the manifest."""
    root = Path(path)
    try:
        raw = (root / MANIFEST_NAME).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read manifest in {root}: {exc}") from exc
    try:
        manifest = json.loads(raw)
    except ValueError as exc:
        raise CorruptStore(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != STORE_FORMAT:
        raise CorruptStore(f"unsupported store format {manifest.get('format')!r}")
    records: dict[str, TemplateRecord] = {}
    for uid, entry in manifest.get("users", {}).items():
        file_path = root / entry["file"]
        try:
            data = file_path.read_bytes()
        except OSError as exc:
            raise CorruptStore(f"missing template file {file_path.name}") from exc
        digest = hashlib.sha256(data).hexdigest()
        if digest != entry["sha256"]:
            raise CorruptStore(f"checksum mismatch for {file_path.name}")
        try:
            record = TemplateRecord.from_dict(json.loads(data))
        except (ValueError, KeyError, TypeError, DimensionMismatch) as exc:
            raise CorruptStore(f"invalid template {file_path.name}: {exc}") from exc
        if record.user_id != uid:
            raise CorruptStore(
                f"template {file_path.name} claims user {record.user_id!r}, manifest says {uid!r}"
            )
        records[uid] = record
    return TemplateStore(root=root, records=records)


# --- enroll / verify -----------------------------------------------------------

@dataclass(frozen=True)
class EnrollConfig:
    resample_len: int = 64
    mask: FeatureMask = FeatureMask.full()
    k_rule: str = "quarter"
    trainer: TrainerConfig = TrainerConfig()
    distributed: bool = False
    partitions: int = 4
    min_genuine: int = 4
    min_forged: int = 4
    enrolled_at: str = ""


def enroll(store: TemplateStore, user_id: str, samples, cfg: EnrollConfig | None = None) -> TemplateRecord:
    """Train and persist a template from one user's labelled samples.

    Runs resample -> flatten -> PCA -> training, then sets the decision
    threshold to the EER operating point of the enrollment scores.
    Re-enrolling replaces the prior template atomically.
    """
    cfg = cfg or EnrollConfig()
    mine = [s for s in samples if s.user_id == user_id]
    n_genuine = sum(1 for s in mine if s.label == GENUINE)
    n_forged = sum(1 for s in mine if s.label == FORGED)
    if n_genuine < cfg.min_genuine or n_forged < cfg.min_forged:
        raise InsufficientEnrollment(
            f"user {user_id!r} has {n_genuine} genuine / {n_forged} forged samples; "
            f"need >= {cfg.min_genuine} / {cfg.min_forged}"
        )
    ds = vectorize(mine, resample_len=cfg.resample_len, mask=cfg.mask)
    if cfg.distributed:
        pca_model, projected = dist_preprocess(ds, workers=cfg.partitions, k_rule=cfg.k_rule)
        model = dist_train_sample(projected, cfg.trainer, partitions=cfg.partitions)
    else:
        pca_model, projected = preprocess(ds, k_rule=cfg.k_rule)
        model = train_sample(projected, cfg.trainer)
    enroll_scores = score_any(model, projected.vectors)
    _, theta_star = eer(roc(enroll_scores, projected.labels))
    # No score lies strictly between the two attained scores bracketing the
    # EER threshold, so moving theta to the midpoint of that gap leaves every
    # enrollment decision unchanged while maximizing the margin for probes.
    below = enroll_scores[enroll_scores < theta_star]
    at_or_above = enroll_scores[enroll_scores >= theta_star]
    if below.size and at_or_above.size:
        theta = float((below.max() + at_or_above.min()) / 2.0)
    else:
        theta = theta_star
    # saturated outputs can put every score at exactly 0.0 or 1.0
    theta = float(np.clip(theta, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)))
    record = TemplateRecord(
        user_id=user_id,
        model=model,
        pca=pca_model,
        threshold=theta,
        fingerprint=Fingerprint(
            resample_len=cfg.resample_len,
            mask_bits=cfg.mask.as_bits(),
            k=pca_model.k,
            trainer=cfg.trainer.algorithm,
        ),
        enrolled_at=cfg.enrolled_at,
    )
    store.put(record)
    return record


def verify(store: TemplateStore, user_id: str, probe) -> VerifyDecision:
    """Score one raw probe against a user's template and threshold it."""
    record = store.get(user_id)
    fp = record.fingerprint
    vec = flatten(resample(probe, fp.resample_len), fp.mask())
    projected = pca_project(record.pca, vec)
    s = float(np.atleast_1d(score_any(record.model, projected))[0])
    decision = GENUINE if s >= record.threshold else FORGED
    return VerifyDecision(decision=decision, score=s, threshold=record.threshold)


# --- stage benchmark --------------------------------------------------------------

@dataclass
class BenchReport:
    preprocess: list[SpeedupRecord]
    train: list[SpeedupRecord]

    def overall(self) -> list[tuple[int, float]]:
        """(workers, mean of stage speedups) per worker count."""
        by_n = {r.n: [r.s] for r in self.preprocess}
        for r in self.train:
            by_n.setdefault(r.n, []).append(r.s)
        return [(n, float(np.mean(by_n[n]))) for n in sorted(by_n)]


def _median_seconds(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _cap_users(ds: Dataset, max_rows: int) -> Dataset:
    """Whole-user subset with at most max_rows rows (at least one user)."""
    if len(ds) <= max_rows:
        return ds
    keep = []
    total = 0
    for uid in ds.users():
        rows = np.flatnonzero(ds.user_ids == uid)
        if keep and total + rows.size > max_rows:
            break
        keep.append(rows)
        total += rows.size
    return ds.take(np.concatenate(keep))


def bench(
    ds: Dataset,
    workers=(1, 2, 4),
    repeats: int = 3,
    trainer: TrainerConfig | None = None,
    k_rule: str = "quarter",
    train_rows: int = 2000,
) -> BenchReport:
    """Median-of-`repeats` wall clock for both pipeline stages per worker count.

    BLAS pools are pinned to one thread for the duration so the only
    parallelism measured is the worker pool under test.  The training stage
    runs on a whole-user subset capped at `train_rows` rows to keep the
    benchmark bounded; the single-worker baseline is always measured, even
    when 1 is missing from `workers`.
    """
    trainer = trainer or TrainerConfig(max_epochs=5, hidden=(8,))
    counts = sorted({int(w) for w in workers} | {1})
    if counts[0] < 1:
        raise ValueError(f"worker counts must be >= 1, got {counts[0]}")
    pre_times: dict[int, float] = {}
    train_times: dict[int, float] = {}
    with threadpool_limits(limits=1):
        for n in counts:
            pre_times[n] = _median_seconds(
                lambda: dist_preprocess(ds, workers=n, k_rule=k_rule), repeats
            )
        _, projected = preprocess(ds, k_rule=k_rule)
        sub = _cap_users(projected, train_rows)
        for n in counts:
            train_times[n] = _median_seconds(
                lambda: dist_train_sample(sub, trainer, partitions=n), repeats
            )
    wanted = sorted({int(w) for w in workers})
    return BenchReport(
        preprocess=[speedup(pre_times[1], pre_times[n], n, stage="preprocess") for n in wanted],
        train=[speedup(train_times[1], train_times[n], n, stage="train") for n in wanted],
    )


def write_speedup(report: BenchReport, path) -> None:
    """`stage,workers,t_single_s,t_n_s,speedup` rows plus overall means."""
    lines = ["stage,workers,t_single_s,t_n_s,speedup"]
    for rec in (*report.preprocess, *report.train):
        lines.append(f"{rec.stage},{rec.n},{rec.t_single!r},{rec.t_n!r},{rec.s!r}")
    for n, s in report.overall():
        lines.append(f"overall,{n},,,{s!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
