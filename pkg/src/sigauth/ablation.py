"""Leave-one-channel-out ablation over the full pipeline.

Combination c (1..12) drops exactly one sensor channel, walking the channel
table from the back: c = 1 drops z_gyro, c = 12 drops x_accel.  Every
combination reruns resample -> PCA -> train -> held-out EER, once with the
sequential trainer and once with the partitioned ensemble, so the output is
12 rows per mode.  Fully deterministic for a fixed corpus and config.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .metrics import evaluate
from .pca import pca_project, preprocess
from .samples import CHANNELS, N_CHANNELS, FeatureMask, stratified_split, vectorize
from .trainers import TrainerConfig, dist_train_sample, train_sample

MODES = ("sequential", "distributed")


@dataclass(frozen=True)
class AblationConfig:
    resample_len: int = 32
    k_rule: str = "quarter"
    train_fraction: float = 0.75
    partitions: int = 4
    trainer: TrainerConfig = TrainerConfig(max_epochs=40)
    seed: int = 0
    modes: tuple[str, ...] = MODES

    def validate(self) -> None:
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ValueError(f"unknown modes {bad}; choose from {MODES}")
        self.trainer.validate()


@dataclass(frozen=True)
class AblationRow:
    combination: int          # 1..12
    mode: str
    excluded_index: int       # 0-based channel index
    excluded_feature: str     # channel name
    mask: FeatureMask
    eer: float


def excluded_channel(combination: int) -> int:
    """0-based channel index dropped by a 1-based combination number."""
    if not 1 <= combination <= N_CHANNELS:
        raise ValueError(f"combination must be 1..{N_CHANNELS}, got {combination}")
    return N_CHANNELS - combination


def _run_one(samples, cfg: AblationConfig, combination: int, mode: str) -> AblationRow:
    idx = excluded_channel(combination)
    mask = FeatureMask.excluding(idx)
    ds = vectorize(samples, resample_len=cfg.resample_len, mask=mask)
    train_ds, test_ds = stratified_split(ds, cfg.train_fraction, cfg.seed)
    model, projected = preprocess(train_ds, k_rule=cfg.k_rule)
    trainer = replace(cfg.trainer, seed=cfg.seed)
    if mode == "distributed":
        net = dist_train_sample(projected, trainer, partitions=cfg.partitions)
    else:
        net = train_sample(projected, trainer)
    test_proj = replace(test_ds, vectors=pca_project(model, test_ds.vectors))
    report = evaluate(net, test_proj)
    return AblationRow(
        combination=combination,
        mode=mode,
        excluded_index=idx,
        excluded_feature=CHANNELS[idx],
        mask=mask,
        eer=report.eer,
    )


def ablate(samples, cfg: AblationConfig | None = None) -> list[AblationRow]:
    """12 rows per configured mode, mode-major, combinations ascending."""
    cfg = cfg or AblationConfig()
    cfg.validate()
    samples = list(samples)
    return [
        _run_one(samples, cfg, c, mode)
        for mode in cfg.modes
        for c in range(1, N_CHANNELS + 1)
    ]


def write_ablation(rows, path) -> None:
    """`combination,mode,excluded_feature,eer` text table."""
    lines = ["combination,mode,excluded_feature,eer"]
    for row in rows:
        lines.append(f"{row.combination},{row.mode},{row.excluded_feature},{row.eer!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
