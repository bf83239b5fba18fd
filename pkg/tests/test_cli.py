import filecmp
import json

import numpy as np
import pytest

from sigauth.cli import main, read_features, write_features
from sigauth.errors import EmptyDataset, ParseFailure, SchemaViolation
from sigauth.network import GlobalModel, Network, load_model
from sigauth.pca import load_pca
from sigauth.samples import FORGED, GENUINE, vectorize
from sigauth.synth import read_dataset, write_dataset


@pytest.fixture(scope="module")
def art(tmp_path_factory):
    """Chained artifacts: corpus -> features -> trained models -> store."""
    d = tmp_path_factory.mktemp("cli")
    paths = {
        "corpus": str(d / "corpus.jsonl"),
        "pca": str(d / "pca.json"),
        "features": str(d / "features.jsonl"),
        "model_seq": str(d / "model_seq.json"),
        "model_dist": str(d / "model_dist.json"),
        "store": str(d / "store"),
        "dir": d,
    }
    assert main([
        "gen", "--users", "3", "--genuine", "6", "--forged", "6",
        "--seed", "0", "--out", paths["corpus"],
    ]) == 0
    assert main([
        "preprocess", "--in", paths["corpus"], "--workers", "2",
        "--resample-len", "16", "--components-rule", "quarter",
        "--out-model", paths["pca"], "--out", paths["features"],
    ]) == 0
    assert main([
        "train", "--in", paths["features"], "--algo", "lm",
        "--hidden", "6", "--epochs", "6", "--seed", "0",
        "--out", paths["model_seq"],
    ]) == 0
    assert main([
        "train", "--in", paths["features"], "--algo", "lm", "--dist",
        "--partitions", "4", "--hidden", "6", "--epochs", "6", "--seed", "0",
        "--out", paths["model_dist"],
    ]) == 0
    assert main([
        "enroll", "--store", paths["store"], "--user", "u0001",
        "--in", paths["corpus"], "--resample-len", "16",
        "--hidden", "6", "--epochs", "6", "--seed", "0",
    ]) == 0
    return paths


class TestGen:
    def test_corpus_contents(self, art):
        samples = read_dataset(art["corpus"])
        assert len(samples) == 36
        assert {s.user_id for s in samples} == {"u0001", "u0002", "u0003"}
        assert {s.label for s in samples} == {GENUINE, FORGED}

    def test_deterministic(self, art, tmp_path):
        again = tmp_path / "again.jsonl"
        assert main([
            "gen", "--users", "3", "--genuine", "6", "--forged", "6",
            "--seed", "0", "--out", str(again),
        ]) == 0
        assert filecmp.cmp(art["corpus"], again, shallow=False)

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit):
            main(["gen", "--users", "3"])


class TestPreprocess:
    def test_artifacts(self, art):
        model = load_pca(art["pca"])
        ds, header = read_features(art["features"])
        assert model.dim == 12 * 16
        assert model.k == 48  # quarter of 192
        assert ds.dim == model.k
        assert len(ds) == 36
        assert header["kind"] == "features"
        assert header["resample_len"] == 16
        assert header["pca_ref"] == art["pca"]

    def test_missing_input_exits_2(self, art, capsys):
        code = main([
            "preprocess", "--in", str(art["dir"] / "nope.jsonl"),
            "--out-model", str(art["dir"] / "m.json"),
            "--out", str(art["dir"] / "f.jsonl"),
        ])
        assert code == 2
        assert capsys.readouterr().err.startswith("error:")


class TestTrain:
    def test_sequential_model(self, art):
        model, meta = load_model(art["model_seq"])
        assert isinstance(model, Network)
        assert model.sizes == (48, 6, 2)
        assert meta["trainer"]["algorithm"] == "lm"
        assert meta["pca_ref"] == art["pca"]

    def test_distributed_model(self, art):
        model, _ = load_model(art["model_dist"])
        assert isinstance(model, GlobalModel)
        assert len(model.locals) == 4

    def test_bad_algorithm_rejected_by_parser(self, art):
        with pytest.raises(SystemExit):
            main(["train", "--in", art["features"], "--algo", "sgd", "--out", "x"])


class TestEval:
    def test_stdout_and_files(self, art, capsys, tmp_path):
        roc_path = tmp_path / "roc.csv"
        report_path = tmp_path / "report.txt"
        code = main([
            "eval", "--model", art["model_seq"], "--in", art["features"],
            "--roc", str(roc_path), "--report", str(report_path),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("eer=")
        assert "threshold=" in out and "36 samples" in out
        assert roc_path.read_text().startswith("threshold,far,frr\n")
        report = dict(
            line.split("=", 1)
            for line in report_path.read_text().strip().split("\n")
            if "=" in line and " " not in line.split("=")[0]
        )
        assert 0.0 <= float(report["eer"]) <= 1.0
        assert report["samples"] == "36"

    def test_ensemble_model_accepted(self, art, capsys):
        code = main(["eval", "--model", art["model_dist"], "--in", art["features"]])
        assert code == 0
        assert capsys.readouterr().out.startswith("eer=")


class TestAblate:
    def test_row_count_and_format(self, art, tmp_path):
        out = tmp_path / "ablation.csv"
        assert main([
            "ablate", "--in", art["corpus"], "--seed", "0", "--out", str(out)
        ]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "combination,mode,excluded_feature,eer"
        assert len(lines) == 25
        assert lines[1].startswith("1,sequential,z_gyro,")
        assert lines[13].startswith("1,distributed,z_gyro,")


class TestEnrollVerify:
    def test_store_created(self, art):
        store_dir = art["dir"] / "store"
        assert (store_dir / "manifest.json").exists()
        manifest = json.loads((store_dir / "manifest.json").read_text())
        assert manifest["format"] == 1
        assert "u0001" in manifest["users"]

    def test_reenroll_is_byte_identical(self, art):
        store_dir = art["dir"] / "store"
        before = {p.name: p.read_bytes() for p in store_dir.iterdir()}
        assert main([
            "enroll", "--store", art["store"], "--user", "u0001",
            "--in", art["corpus"], "--resample-len", "16",
            "--hidden", "6", "--epochs", "6", "--seed", "0",
        ]) == 0
        after = {p.name: p.read_bytes() for p in store_dir.iterdir()}
        assert before == after

    def test_enroll_unknown_user_exits_2(self, art, capsys):
        code = main([
            "enroll", "--store", art["store"], "--user", "stranger",
            "--in", art["corpus"],
        ])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def verify_code(self, art, tmp_path, sample, name):
        probe = tmp_path / name
        write_dataset([sample], probe)
        return main([
            "verify", "--store", art["store"], "--user", "u0001",
            "--probe", str(probe),
        ])

    def test_exit_codes_follow_decisions(self, art, tmp_path, capsys):
        samples = [s for s in read_dataset(art["corpus"]) if s.user_id == "u0001"]
        codes = {}
        for i, s in enumerate(samples):
            code = self.verify_code(art, tmp_path, s, f"p{i}.jsonl")
            out = capsys.readouterr().out
            assert code in (0, 1)
            expected = 0 if "decision=genuine" in out else 1
            assert code == expected
            codes.setdefault(s.label, set()).add(code)
        # the template was trained on these very samples: at least one
        # genuine accept and one forgery reject must occur
        assert 0 in codes[GENUINE]
        assert 1 in codes[FORGED]

    def test_verify_unknown_user_exits_2(self, art, tmp_path, capsys):
        samples = read_dataset(art["corpus"])
        probe = tmp_path / "probe.jsonl"
        write_dataset(samples[:1], probe)
        code = main([
            "verify", "--store", art["store"], "--user", "ghost",
            "--probe", str(probe),
        ])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_empty_probe_file_exits_2(self, art, tmp_path, capsys):
        probe = tmp_path / "empty.jsonl"
        probe.write_text("")
        code = main([
            "verify", "--store", art["store"], "--user", "u0001",
            "--probe", str(probe),
        ])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestCost:
    def test_single_estimate(self, capsys):
        code = main([
            "cost", "--hardware", "100", "--vms", "2", "--rate", "0.21",
            "--start", "0", "--end", "10",
        ])
        assert code == 0
        out = capsys.readouterr().out.strip().split("\n")
        assert out[0] == "vm_hours=10"
        assert out[1] == "cloud_cost_usd=4.20"
        assert out[2] == "total_cost_usd=104.20"

    def test_table(self, capsys):
        code = main(["cost", "--table", "1..3", "--rate", "0.21", "--end", "1"])
        assert code == 0
        out = capsys.readouterr().out.strip().split("\n")
        assert out == ["n_v,cost_usd", "1,0.21", "2,0.42", "3,0.63"]

    def test_end_before_start_exits_2(self, capsys):
        code = main(["cost", "--vms", "1", "--start", "5", "--end", "2"])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_needs_vms_or_table(self, capsys):
        assert main(["cost", "--end", "1"]) == 2
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_single_worker_run(self, art, tmp_path, capsys):
        out = tmp_path / "speedup.csv"
        code = main(["bench", "--in", art["corpus"], "--workers", "1", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "stage,workers,t_single_s,t_n_s,speedup"
        assert lines[-1].startswith("overall,1,,,")


class TestParser:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_no_subcommand(self):
        with pytest.raises(SystemExit):
            main([])


class TestFeatureIo:
    def test_round_trip(self, art, tmp_path):
        samples = read_dataset(art["corpus"])
        ds = vectorize(samples, resample_len=4)
        path = tmp_path / "f.jsonl"
        write_features(path, ds, pca_ref=None)
        again, header = read_features(path)
        np.testing.assert_array_equal(again.vectors, ds.vectors)
        np.testing.assert_array_equal(again.labels, ds.labels)
        np.testing.assert_array_equal(again.user_ids, ds.user_ids)
        assert header["dim"] == ds.dim

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(EmptyDataset):
            read_features(path)

    def test_bad_json_line(self, art, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = open(art["features"]).read().split("\n")
        path.write_text(good[0] + "\n{broken\n")
        with pytest.raises(ParseFailure):
            read_features(path)

    def test_mixed_vector_lengths(self, art, tmp_path):
        path = tmp_path / "mixed.jsonl"
        lines = open(art["features"]).read().strip().split("\n")
        rec = json.loads(lines[1])
        rec["vector"] = rec["vector"][:-1]
        path.write_text("\n".join([lines[0], lines[1], json.dumps(rec)]) + "\n")
        with pytest.raises(SchemaViolation):
            read_features(path)
