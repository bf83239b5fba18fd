#!/usr/bin/env python3
"""Run the five training algorithms on one dataset and compare them."""

import numpy as np

from sigauth.network import flatten_params, init_network, weight_entry_mask
from sigauth.pca import preprocess
from sigauth.samples import vectorize
from sigauth.synth import GenConfig, gen_dataset
from sigauth.trainers import (
    TrainerConfig,
    dist_train_sample,
    encode_targets,
    train,
    train_sample,
)

corpus = gen_dataset(GenConfig(n_users=6, n_genuine=10, n_forged=10, seed=21))
_, ds = preprocess(vectorize(corpus, resample_len=24))
targets = encode_targets(ds.labels)
print("training set:", ds.vectors.shape)

print(f"\n{'algorithm':>10}  {'final E_D':>12}  epochs  stop")
for algo in ("lm", "bayes", "cg", "rprop", "gd"):
    cfg = TrainerConfig(algorithm=algo, hidden=(8,), max_epochs=30, seed=5)
    net = init_network((ds.dim, 8, 2), seed=5)
    result = train(net, ds.vectors, targets, cfg)
    print(f"{algo:>10}  {result.trace[-1]:12.6f}  {result.epochs:6d}  {result.stop_reason}")

# Bayesian regularization trades data error for smaller weights
plain = train(init_network((ds.dim, 8, 2), seed=5), ds.vectors, targets,
              TrainerConfig(algorithm="lm", max_epochs=30))
bayes = train(init_network((ds.dim, 8, 2), seed=5), ds.vectors, targets,
              TrainerConfig(algorithm="bayes", gamma=0.5, max_epochs=30))
for name, res in (("lm", plain), ("bayes g=0.5", bayes)):
    w = flatten_params(res.network)[weight_entry_mask(res.network)]
    print(f"{name:>12}: sum w^2 = {np.sum(w * w):.3f}")

# one call covers init + train; the distributed variant returns an ensemble
net = train_sample(ds, TrainerConfig(max_epochs=20))
ensemble = dist_train_sample(ds, TrainerConfig(max_epochs=20), partitions=3)
print("\nsequential net layers:", [w.shape for w in net.weights])
print("ensemble size:", len(ensemble.locals))
