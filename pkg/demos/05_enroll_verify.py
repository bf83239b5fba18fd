#!/usr/bin/env python3
"""Enrollment and verification against a persistent template store.

Enrolling a user trains a personal model on their genuine samples plus
everyone else's forgeries of them, picks an accept threshold from the
enrollment scores, and files the whole thing as a template.  Verification
replays a probe capture through the stored preprocessing and model and
compares the score to that threshold.
"""

import tempfile
from pathlib import Path

from sigauth.pipeline import (
    EnrollConfig,
    TemplateStore,
    enroll,
    store_load,
    store_save,
    verify,
)
from sigauth.synth import GenConfig, gen_dataset
from sigauth.trainers import TrainerConfig

corpus = gen_dataset(GenConfig(n_users=4, n_genuine=10, n_forged=10, seed=33))
cfg = EnrollConfig(resample_len=16, trainer=TrainerConfig(max_epochs=4, hidden=(4,)))

store = TemplateStore()
users = sorted({s.user_id for s in corpus})
for uid in users[:2]:
    record = enroll(store, uid, corpus, cfg)
    print(f"enrolled {uid}: k={record.pca.k} components, "
          f"accept threshold {record.threshold:.4f}")

# verify one genuine and one forged capture for the first user
uid = users[0]
genuine = next(s for s in corpus if s.user_id == uid and s.label == "genuine")
forged = next(s for s in corpus if s.user_id == uid and s.label == "forged")
for probe in (genuine, forged):
    decision = verify(store, uid, probe)
    print(f"probe {probe.sample_id} ({probe.label}): score {decision.score:.4f} "
          f"vs {decision.threshold:.4f} -> {decision.decision}")

# templates survive a save/load cycle bit for bit
with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp) / "store"
    store_save(store, root)
    reloaded = store_load(root)
    redo = verify(reloaded, uid, genuine)
    print("reloaded store, same decision:", redo.score == verify(store, uid, genuine).score)
    print("store holds", len(reloaded), "templates on disk")
