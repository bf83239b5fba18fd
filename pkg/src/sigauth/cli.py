"""Command line front end.

Nine subcommands cover the whole pipeline: gen, preprocess, train, eval,
ablate, enroll, verify, cost, bench.  Any domain error prints `error: ...`
to stderr and exits with status 2; verify additionally exits 0 for a
genuine decision and 1 for a forged one.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .ablation import AblationConfig, ablate, write_ablation
from .costs import cloud_cost, format_usd, scaling_table, total_cost, vm_hours, CostParams
from .errors import EmptyDataset, ParseFailure, SchemaViolation, SigAuthError
from .metrics import evaluate, far, frr, write_roc
from .network import load_model, save_model
from .pca import dist_preprocess, save_pca
from .pipeline import (
    EnrollConfig,
    MANIFEST_NAME,
    TemplateStore,
    bench,
    enroll,
    store_load,
    verify,
    write_speedup,
)
from .samples import Dataset, FeatureMask, GENUINE, vectorize
from .synth import GenConfig, gen_dataset, read_dataset, write_dataset
from .trainers import ALGORITHMS, TrainerConfig, dist_train_sample, train_sample

#: resample length used by `bench` vectorization; short keeps timing bounded
BENCH_RESAMPLE_LEN = 16


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"--hidden expects comma-separated integers, got {text!r}") from None
    if not sizes:
        raise ValueError("--hidden must name at least one layer size")
    return sizes


def _parse_workers(text: str) -> list[int]:
    try:
        counts = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"--workers expects comma-separated integers, got {text!r}") from None
    if not counts:
        raise ValueError("--workers must name at least one count")
    return counts


def _parse_vm_range(text: str):
    """`A..B` (inclusive) or a single integer."""
    if ".." in text:
        lo_text, _, hi_text = text.partition("..")
        lo, hi = int(lo_text), int(hi_text)
        if hi < lo:
            raise ValueError(f"--table range {text!r} is reversed")
        return range(lo, hi + 1)
    return [int(text)]


# --- features file ------------------------------------------------------------
# First line is a header record; each following line is one projected vector.

def write_features(path, ds: Dataset, pca_ref: str) -> None:
    header = {
        "kind": "features",
        "resample_len": ds.resample_len,
        "mask": ds.mask.as_bits(),
        "dim": int(ds.dim),
        "pca_ref": pca_ref,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for i in range(len(ds)):
            row = {
                "user_id": str(ds.user_ids[i]),
                "sample_id": str(ds.sample_ids[i]),
                "label": str(ds.labels[i]),
                "vector": [float(v) for v in ds.vectors[i]],
            }
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def read_features(path) -> tuple[Dataset, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise EmptyDataset(f"{path} holds no records")
    try:
        header = json.loads(lines[0])
    except ValueError as exc:
        raise ParseFailure(f"{path} line 1: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != "features":
        raise SchemaViolation(f"{path} does not start with a features header")
    users, ids, labels, vectors = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            row = json.loads(line)
        except ValueError as exc:
            raise ParseFailure(f"{path} line {lineno}: {exc}") from exc
        try:
            users.append(str(row["user_id"]))
            ids.append(str(row["sample_id"]))
            labels.append(str(row["label"]))
            vectors.append(np.asarray(row["vector"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"{path} line {lineno}: {exc}") from exc
    if not vectors:
        raise EmptyDataset(f"{path} holds a header but no vectors")
    dim = vectors[0].size
    if any(v.shape != (dim,) for v in vectors):
        raise SchemaViolation(f"{path} mixes vector lengths")
    ds = Dataset(
        vectors=np.vstack(vectors),
        labels=np.asarray(labels),
        user_ids=np.asarray(users),
        sample_ids=np.asarray(ids),
        resample_len=int(header["resample_len"]),
        mask=FeatureMask.from_bits(str(header["mask"])),
    )
    return ds, header


# --- subcommands ---------------------------------------------------------------

def _cmd_gen(args) -> int:
    cfg = GenConfig(
        n_users=args.users,
        n_genuine=args.genuine,
        n_forged=args.forged,
        seed=args.seed,
    )
    samples = gen_dataset(cfg)
    write_dataset(samples, args.out)
    print(f"wrote {len(samples)} samples for {args.users} users to {args.out}")
    return 0


def _cmd_preprocess(args) -> int:
    samples = read_dataset(args.in_path)
    ds = vectorize(samples, resample_len=args.resample_len)
    model, projected = dist_preprocess(ds, workers=args.workers, k_rule=args.components_rule)
    save_pca(model, args.out_model)
    write_features(args.out, projected, pca_ref=str(args.out_model))
    print(
        f"projected {len(projected)} vectors from dim {ds.dim} to k={model.k}; "
        f"model in {args.out_model}, features in {args.out}"
    )
    return 0


def _cmd_train(args) -> int:
    ds, header = read_features(args.in_path)
    cfg = TrainerConfig(
        algorithm=args.algo,
        max_epochs=args.epochs,
        seed=args.seed,
        hidden=_parse_hidden(args.hidden),
    )
    if args.dist:
        model = dist_train_sample(ds, cfg, partitions=args.partitions)
        kind = f"ensemble of {args.partitions}"
    else:
        model = train_sample(ds, cfg)
        kind = "network"
    save_model(
        model,
        args.out,
        trainer_meta={
            "algorithm": cfg.algorithm,
            "epochs": cfg.max_epochs,
            "hidden": list(cfg.hidden),
            "seed": cfg.seed,
            "distributed": bool(args.dist),
        },
        pca_ref=header.get("pca_ref"),
    )
    print(f"trained {kind} ({cfg.algorithm}) on {len(ds)} vectors; saved to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    model, _ = load_model(args.model)
    ds, _ = read_features(args.in_path)
    report = evaluate(model, ds)
    if args.roc:
        write_roc(report.roc, args.roc)
    if args.report:
        c = report.counts
        lines = [
            f"samples={len(ds)}",
            f"eer={report.eer!r}",
            f"threshold={report.eer_threshold!r}",
            f"tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}",
            f"far={far(c)!r}",
            f"frr={frr(c)!r}",
        ]
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"eer={report.eer:.6f} threshold={report.eer_threshold:.6f} over {len(ds)} samples")
    return 0


def _cmd_ablate(args) -> int:
    samples = read_dataset(args.in_path)
    rows = ablate(samples, AblationConfig(seed=args.seed))
    write_ablation(rows, args.out)
    print(f"wrote {len(rows)} ablation rows to {args.out}")
    return 0


def _trainer_from_flags(args) -> TrainerConfig:
    return TrainerConfig(
        algorithm=args.algo,
        max_epochs=args.epochs,
        seed=args.seed,
        hidden=_parse_hidden(args.hidden),
    )


def _open_store(path) -> TemplateStore:
    root = Path(path)
    if (root / MANIFEST_NAME).exists():
        return store_load(root)
    return TemplateStore(root=root)


def _cmd_enroll(args) -> int:
    samples = read_dataset(args.in_path)
    store = _open_store(args.store)
    cfg = EnrollConfig(
        resample_len=args.resample_len,
        k_rule=args.components_rule,
        trainer=_trainer_from_flags(args),
        distributed=args.dist,
        partitions=args.partitions,
    )
    record = enroll(store, args.user, samples, cfg)
    print(
        f"enrolled {args.user} (k={record.pca.k}, threshold={record.threshold:.6f}) "
        f"in {args.store}"
    )
    return 0


def _cmd_verify(args) -> int:
    store = store_load(args.store)
    probes = read_dataset(args.probe)
    if not probes:
        raise EmptyDataset(f"{args.probe} holds no probe records")
    decision = verify(store, args.user, probes[0])
    print(
        f"decision={decision.decision} score={decision.score:.6f} "
        f"threshold={decision.threshold:.6f}"
    )
    return 0 if decision.decision == GENUINE else 1


def _cmd_cost(args) -> int:
    if args.table is None and args.vms is None:
        raise ValueError("cost needs either --vms or --table")
    hours = vm_hours(args.start, args.end)
    if args.table is not None:
        rows = scaling_table(
            _parse_vm_range(args.table), c_v=args.rate, t=hours, cost_i=args.hardware
        )
        print("n_v,cost_usd")
        for n_v, cost in rows:
            print(f"{n_v},{format_usd(cost)}")
        return 0
    params = CostParams(
        cost_i=args.hardware, n_v=args.vms, c_v=args.rate, t_s=args.start, t_c=args.end
    )
    print(f"vm_hours={hours:g}")
    print(f"cloud_cost_usd={format_usd(cloud_cost(args.vms, args.rate, hours))}")
    print(f"total_cost_usd={format_usd(total_cost(params))}")
    return 0


def _cmd_bench(args) -> int:
    samples = read_dataset(args.in_path)
    ds = vectorize(samples, resample_len=BENCH_RESAMPLE_LEN)
    report = bench(ds, workers=_parse_workers(args.workers))
    write_speedup(report, args.out)
    for rec in (*report.preprocess, *report.train):
        print(f"{rec.stage}: workers={rec.n} speedup={rec.s:.2f}")
    for n, s in report.overall():
        print(f"overall: workers={n} speedup={s:.2f}")
    print(f"wrote {args.out}")
    return 0


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigauth",
        description="Dynamic-signature authentication pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic signature corpus")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--genuine", type=int, default=20)
    p.add_argument("--forged", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("preprocess", help="resample, flatten, and PCA-project a corpus")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resample-len", type=int, default=64)
    p.add_argument("--components-rule", default="quarter", metavar="quarter|var:<frac>")
    p.add_argument("--out-model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("train", help="train a verifier on projected features")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--algo", choices=ALGORITHMS, default="lm")
    p.add_argument("--dist", action="store_true", help="train a partitioned ensemble")
    p.add_argument("--partitions", type=int, default=4)
    p.add_argument("--hidden", default="10", help="comma-separated hidden layer sizes")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score features and report ROC/EER")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--roc", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="leave-one-channel-out EER table")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("enroll", help="train and store one user's template")
    p.add_argument("--store", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--resample-len", type=int, default=64)
    p.add_argument("--components-rule", default="quarter")
    p.add_argument("--algo", choices=ALGORITHMS, default="lm")
    p.add_argument("--hidden", default="10")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", action="store_true")
    p.add_argument("--partitions", type=int, default=4)
    p.set_defaults(func=_cmd_enroll)

    p = sub.add_parser("verify", help="check a probe against a stored template")
    p.add_argument("--store", required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--probe", required=True)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("cost", help="deployment cost calculator")
    p.add_argument("--hardware", type=float, default=0.0, metavar="USD")
    p.add_argument("--vms", type=int, default=None)
    p.add_argument("--rate", type=float, default=0.21, metavar="USD_PER_VM_HOUR")
    p.add_argument("--start", type=float, default=0.0, metavar="H")
    p.add_argument("--end", type=float, default=0.0, metavar="H")
    p.add_argument("--table", default=None, metavar="A..B", help="print n_v,cost_usd rows")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("bench", help="stage speedups across worker counts")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--workers", default="1,2,4", help="comma-separated worker counts")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SigAuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
