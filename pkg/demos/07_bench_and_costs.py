#!/usr/bin/env python3
"""Measure parallel speedups, then price the training run on rented VMs.

The benchmark times the preprocess and train stages at several worker
counts against the single-worker baseline.  The cost model answers the
follow-up question: given those wall-clock savings, what does the cluster
cost?  Total cost = infrastructure + n_vms * hourly_rate * hours.
"""

import os

import numpy as np

from sigauth.costs import CostParams, cloud_cost, format_usd, scaling_table, total_cost, vm_hours
from sigauth.pipeline import bench
from sigauth.samples import Dataset, FeatureMask

# a synthetic feature matrix is enough; bench cares about shape, not content
rng = np.random.default_rng(0)
n, resample_len = 20_000, 10
ds = Dataset(
    vectors=rng.normal(size=(n, resample_len * 12)),
    labels=np.asarray(["genuine", "forged"] * (n // 2)),
    user_ids=np.asarray([f"u{i // 1000:02d}" for i in range(n)]),
    sample_ids=np.asarray([str(i) for i in range(n)]),
    resample_len=resample_len,
    mask=FeatureMask.full(),
)

report = bench(ds, workers=(1, 2, 4), repeats=3)
print("host cores:", os.cpu_count())
print(f"{'stage':<11} {'workers':>7} {'T(1) s':>9} {'T(n) s':>9} {'speedup':>8}")
for rec in (*report.preprocess, *report.train):
    print(f"{rec.stage:<11} {rec.n:>7} {rec.t_single:>9.3f} {rec.t_n:>9.3f} {rec.s:>8.2f}")
for workers, s in report.overall():
    print(f"overall speedup at {workers} workers: {s:.2f}")

# pricing a hypothetical run: 8 VMs at $0.21/h, submitted at t=10.0h, done at t=12.5h
hours = vm_hours(10.0, 12.5)
print("\nbillable VM hours per machine:", hours)
cloud = cloud_cost(8, 0.21, hours)
print("cloud bill: $" + format_usd(cloud))
total = total_cost(CostParams(cost_i=150.0, n_v=8, c_v=0.21, t_s=10.0, t_c=12.5))
print("with $150 of hardware up front: $" + format_usd(total))

print("\nscaling table (rate $0.21/h, 3h each):")
for n_vms, usd in scaling_table([1, 2, 4, 8, 16], 0.21, 3.0):
    print(f"  {n_vms:>3} VMs -> ${format_usd(usd)}")
