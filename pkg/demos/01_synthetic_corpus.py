#!/usr/bin/env python3
"""Generate a synthetic signature corpus and turn it into training vectors.

Every capture is a (rows x 12) float matrix: accelerometer, magnetometer,
orientation, and gyroscope channels sampled while a user signs.  Forgeries
are perturbed re-draws of the genuine control points, so they sit close to
the real thing but not on top of it.
"""

import tempfile
from pathlib import Path

import numpy as np

from sigauth.samples import CHANNELS, stratified_split, vectorize
from sigauth.synth import GenConfig, gen_dataset, read_dataset, write_dataset

cfg = GenConfig(n_users=5, n_genuine=8, n_forged=8, raw_len=96, seed=42)
corpus = gen_dataset(cfg)

print("corpus:", len(corpus), "captures from", cfg.n_users, "users")
first = corpus[0]
print("first capture:", first.user_id, first.sample_id, first.label,
      f"{first.n_rows()} rows x {first.channels.shape[0]} channels")
print("channel order:", ", ".join(CHANNELS))

# captures round-trip through JSONL byte-for-byte
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.jsonl"
    write_dataset(corpus, path)
    again = read_dataset(path)
    same = all(
        a.user_id == b.user_id and np.array_equal(a.channels, b.channels)
        for a, b in zip(corpus, again)
    )
    print("jsonl round trip intact:", same)

# resampling to a fixed length makes every capture comparable
ds = vectorize(corpus, resample_len=32)
print("vectorized:", ds.vectors.shape, "=", len(ds), "rows x", ds.dim, "features")
print("feature dim = resample_len * channels =", ds.resample_len, "*", ds.mask.count)

train, test = stratified_split(ds, 0.75, seed=42)
for name, part in (("train", train), ("test", test)):
    genuine = int(np.sum(part.labels == "genuine"))
    print(f"{name}: {len(part)} rows, {genuine} genuine / {len(part) - genuine} forged")
