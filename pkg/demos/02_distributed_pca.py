#!/usr/bin/env python3
"""Map-reduce PCA: split the data, accumulate moments per partition, combine.

Each partition contributes only (count, column sum, X^T X).  Those three
pieces add across partitions, and the combined accumulator finalizes to the
exact covariance of the full matrix, so the distributed path is not an
approximation of the sequential one.
"""

import functools
import tempfile
from pathlib import Path

import numpy as np

from sigauth.pca import (
    cov_map,
    cov_reduce,
    covariance,
    correlation,
    dist_preprocess,
    load_pca,
    preprocess,
    resolve_k,
    save_pca,
)
from sigauth.samples import vectorize
from sigauth.synth import GenConfig, gen_dataset

corpus = gen_dataset(GenConfig(n_users=6, n_genuine=10, n_forged=10, seed=7))
ds = vectorize(corpus, resample_len=24)
x = ds.vectors
print("data:", x.shape)

# one accumulator per partition, one reduce, one finalize
parts = np.array_split(x, 4)
acc = functools.reduce(cov_reduce, (cov_map(p) for p in parts))
c_dist = (acc.q - acc.n * np.outer(acc.s / acc.n, acc.s / acc.n)) / (acc.n - 1)
c_seq = covariance(x)
print("max |C_dist - C_seq| =", np.max(np.abs(c_dist - c_seq)))

r = correlation(c_seq)
print("correlation diagonal off by at most", np.max(np.abs(np.diag(r) - 1.0)))

# component count: keep a quarter of the dimensions, or hit a variance target
model, projected = preprocess(ds, k_rule="quarter")
print("quarter rule on", ds.dim, "dims ->", model.k, "components")
explained = model.explained / model.explained.sum()
print("variance kept: %.1f%%" % (100 * explained[: model.k].sum()))
print("var:0.95 would keep", resolve_k(model.explained, "var:0.95"), "components")

# worker counts change the partitioning, not the answer
for workers in (1, 2, 8):
    m_w, p_w = dist_preprocess(ds, workers=workers, k_rule="quarter")
    drift = np.max(np.abs(p_w.vectors - projected.vectors))
    print(f"workers={workers}: projection drift {drift:.2e}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "pca.json"
    save_pca(model, path)
    back = load_pca(path)
    print("model JSON round trip exact:", bool(np.array_equal(back.axes, model.axes)))
