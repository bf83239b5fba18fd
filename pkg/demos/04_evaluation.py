#!/usr/bin/env python3
"""Score a held-out split and walk the ROC to the equal error rate.

A sample is accepted when its score clears the threshold, so sliding the
threshold trades false accepts (forgeries let in) against false rejects
(genuine signatures bounced).  The operating point where the two rates
meet is the EER.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from sigauth.metrics import eer, evaluate, roc, write_roc
from sigauth.network import scores
from sigauth.pca import pca_project, preprocess
from sigauth.samples import stratified_split, vectorize
from sigauth.synth import GenConfig, gen_dataset
from sigauth.trainers import TrainerConfig, train_sample

corpus = gen_dataset(GenConfig(n_users=10, n_genuine=12, n_forged=12, seed=13))
train_ds, test_ds = stratified_split(vectorize(corpus, resample_len=32), 0.75, seed=13)

model, projected = preprocess(train_ds)
net = train_sample(projected, TrainerConfig(max_epochs=25))
held = replace(test_ds, vectors=pca_project(model, test_ds.vectors))

report = evaluate(net, held)
print("held-out rows:", len(held))
print("EER = %.4f at threshold %.4f" % (report.eer, report.eer_threshold))
c = report.counts
print(f"confusion at that threshold: tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}")

# the full curve behind that number
curve = report.roc
print("ROC points:", len(curve.thresholds), "(sentinels at -inf/+inf included)")
print("FAR runs from", curve.far[0], "down to", curve.far[-1])
print("FRR runs from", curve.frr[0], "up to", curve.frr[-1])

# score distributions, the raw material of the curve
s = scores(net, held.vectors)
for label in ("genuine", "forged"):
    sel = s[held.labels == label]
    print(f"{label:>8} scores: mean {sel.mean():.3f}, range [{sel.min():.3f}, {sel.max():.3f}]")

# eer() works on any curve, not just evaluate()'s
rate, theta = eer(roc(s, held.labels))
print("recomputed EER matches:", rate == report.eer)

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "roc.csv"
    write_roc(curve, out)
    print("wrote", out.name, "with", len(out.read_text().splitlines()) - 1, "rows")
