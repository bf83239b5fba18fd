import json

import numpy as np
import numpy.testing as npt
import pytest

from sigauth.errors import ParseFailure, SchemaViolation
from sigauth.samples import FORGED, GENUINE
from sigauth.synth import (
    GenConfig,
    UserProfile,
    gen_dataset,
    gen_profile,
    gen_sample,
    read_dataset,
    template_curve,
    user_ids,
    write_dataset,
)


def quiet_profile(warp=0.0, jitter=0.0, sigma_g=0.0, sigma_f=0.0, k=8, seed_key=42):
    """Hand-built profile whose channel 0 is a straight line through [0, 1].

    A natural cubic spline through collinear points is that line, so the
    forged channel-0 values are an affine image of the warped time grid:
    monotonicity of the warp is directly observable in the output.
    """
    cps = np.tile(np.linspace(-1.0, 1.0, k), (12, 1))
    return UserProfile(
        user_id="uq",
        control_points=cps,
        channel_spans=np.full(12, 2.0),
        duration=2.0,
        sigma_genuine=sigma_g,
        warp_amplitude=warp,
        scale_jitter=jitter,
        sigma_forged=sigma_f,
        stream_key=seed_key,
    )


class TestGenProfile:
    def test_deterministic(self):
        a = gen_profile(7, "u1")
        b = gen_profile(7, "u1")
        npt.assert_array_equal(a.control_points, b.control_points)
        assert (a.duration, a.sigma_genuine, a.sigma_forged, a.warp_amplitude,
                a.scale_jitter, a.stream_key) == (
            b.duration, b.sigma_genuine, b.sigma_forged, b.warp_amplitude,
            b.scale_jitter, b.stream_key)

    def test_distinct_users_distinct_curves(self):
        a = gen_profile(7, "u1")
        b = gen_profile(7, "u2")
        assert not np.array_equal(a.control_points, b.control_points)

    def test_distinct_seeds_distinct_curves(self):
        a = gen_profile(7, "u1")
        b = gen_profile(8, "u1")
        assert not np.array_equal(a.control_points, b.control_points)

    def test_draws_inside_documented_bounds(self):
        for seed in range(10):
            p = gen_profile(seed, "ux")
            assert 0.008 <= p.sigma_genuine <= 0.015
            assert 0.10 <= p.warp_amplitude <= 0.20
            assert 0.05 <= p.scale_jitter <= 0.15
            assert 1.5 <= p.duration <= 3.0
            assert p.sigma_forged > p.sigma_genuine
            assert 2.5 * p.sigma_genuine <= p.sigma_forged <= 4.0 * p.sigma_genuine
            assert np.all(np.isfinite(p.control_points))

    def test_control_points_inside_channel_ranges(self):
        from sigauth.synth import DEFAULT_CHANNEL_RANGES

        p = gen_profile(3, "u9")
        for c, (lo, hi) in enumerate(DEFAULT_CHANNEL_RANGES):
            assert np.all(p.control_points[c] >= lo)
            assert np.all(p.control_points[c] <= hi)


class TestGenSample:
    def test_deterministic_bitwise(self):
        p = gen_profile(1, "u1")
        a = gen_sample(p, GENUINE, 3)
        b = gen_sample(p, GENUINE, 3)
        npt.assert_array_equal(a.channels, b.channels)
        npt.assert_array_equal(a.timestamps, b.timestamps)

    def test_sample_ids_decorrelate(self):
        p = gen_profile(1, "u1")
        a = gen_sample(p, GENUINE, 0)
        b = gen_sample(p, GENUINE, 1)
        assert not np.array_equal(a.channels, b.channels)

    def test_labels_decorrelate(self):
        p = gen_profile(1, "u1")
        a = gen_sample(p, GENUINE, 0)
        b = gen_sample(p, FORGED, 0)
        assert not np.array_equal(a.channels, b.channels)

    def test_all_outputs_are_valid_samples(self):
        p = gen_profile(5, "u2")
        for label in (GENUINE, FORGED):
            for i in range(3):
                gen_sample(p, label, i, raw_len=16).validate()

    def test_zero_distortion_forgery_equals_genuine(self):
        p = quiet_profile()
        g = gen_sample(p, GENUINE, 4, raw_len=32)
        f = gen_sample(p, FORGED, 4, raw_len=32)
        npt.assert_array_equal(g.channels, f.channels)
        npt.assert_array_equal(g.timestamps, f.timestamps)

    def test_warp_is_monotone_at_amplitude_cap(self):
        # linear channel 0 turns the warp into the observable values
        p = quiet_profile(warp=0.20)
        for sample_id in range(50):
            f = gen_sample(p, FORGED, sample_id, raw_len=256)
            assert np.all(np.diff(f.channels[0]) > 0)

    def test_timestamps_span_duration(self):
        p = gen_profile(2, "u3")
        s = gen_sample(p, GENUINE, 0, raw_len=64)
        assert s.timestamps[0] == 0.0
        npt.assert_allclose(s.timestamps[-1], p.duration, rtol=1e-12)

    def test_forgeries_sit_farther_from_template(self):
        p = gen_profile(0, "u1")
        template = template_curve(p, 128)
        d_g, d_f = [], []
        for i in range(100):
            g = gen_sample(p, GENUINE, i)
            f = gen_sample(p, FORGED, i)
            d_g.append(np.linalg.norm(g.channels - template))
            d_f.append(np.linalg.norm(f.channels - template))
        assert np.mean(d_f) > np.mean(d_g)


class TestGenDataset:
    def test_counts_multiply(self):
        cfg = GenConfig(n_users=3, n_genuine=4, n_forged=2, raw_len=4, seed=1)
        samples = gen_dataset(cfg)
        assert len(samples) == 3 * (4 + 2)
        labels = [s.label for s in samples]
        assert labels.count(GENUINE) == 12 and labels.count(FORGED) == 6

    def test_desk_scale_arithmetic_for_630_users(self):
        cfg = GenConfig(n_users=630, n_genuine=20, n_forged=20, raw_len=2, seed=0)
        assert len(user_ids(cfg)) == 630
        assert len(gen_dataset(cfg)) == 25200

    def test_single_sample_corpus(self):
        cfg = GenConfig(n_users=1, n_genuine=1, n_forged=0, raw_len=4)
        samples = gen_dataset(cfg)
        assert len(samples) == 1 and samples[0].label == GENUINE

    def test_canonical_output_order(self):
        cfg = GenConfig(n_users=2, n_genuine=2, n_forged=2, raw_len=4, seed=3)
        samples = gen_dataset(cfg)
        keys = [(s.user_id, s.sample_id) for s in samples]
        assert keys == sorted(keys)

    def test_user_id_width_grows(self):
        assert user_ids(GenConfig(n_users=2))[0] == "u0001"
        wide = user_ids(GenConfig(n_users=12345))
        assert wide[0] == "u00001" and wide[-1] == "u12345"

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            GenConfig(n_users=-1).validate()
        with pytest.raises(ValueError):
            GenConfig(n_users=1, raw_len=1).validate()


class TestDatasetIo:
    @staticmethod
    def corpus(tmp_path, **kw):
        cfg = GenConfig(n_users=2, n_genuine=3, n_forged=3, raw_len=8, seed=9, **kw)
        samples = gen_dataset(cfg)
        tmp_path.mkdir(parents=True, exist_ok=True)
        path = tmp_path / "corpus.jsonl"
        write_dataset(samples, path)
        return samples, path

    def test_round_trip_exact(self, tmp_path):
        samples, path = self.corpus(tmp_path)
        loaded = read_dataset(path)
        assert len(loaded) == len(samples)
        for a, b in zip(samples, loaded):
            assert (a.user_id, a.sample_id, a.label) == (b.user_id, b.sample_id, b.label)
            npt.assert_array_equal(a.timestamps, b.timestamps)
            npt.assert_array_equal(a.channels, b.channels)

    def test_identical_config_gives_identical_bytes(self, tmp_path):
        _, p1 = self.corpus(tmp_path / "a")
        _, p2 = self.corpus(tmp_path / "b")
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_file_reads_empty(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert read_dataset(path) == []

    def test_blank_lines_skipped(self, tmp_path):
        _, path = self.corpus(tmp_path)
        padded = tmp_path / "padded.jsonl"
        padded.write_text("\n" + path.read_text() + "\n\n")
        assert len(read_dataset(padded)) == 12

    def test_wrong_column_count_rejected(self, tmp_path):
        rec = {
            "user_id": "u1",
            "sample_id": 0,
            "label": "genuine",
            "rows": [[0.0] + [1.0] * 11, [1.0] + [1.0] * 11],  # 12 numbers, not 13
        }
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(SchemaViolation) as err:
            read_dataset(path)
        assert "line 1" in str(err.value)

    def test_bad_json_names_line(self, tmp_path):
        _, path = self.corpus(tmp_path)
        broken = tmp_path / "broken.jsonl"
        broken.write_text(path.read_text() + "{not json\n")
        with pytest.raises(ParseFailure) as err:
            read_dataset(broken)
        assert "line 13" in str(err.value)

    def test_nan_token_rejected(self, tmp_path):
        rec = {
            "user_id": "u1",
            "sample_id": 0,
            "label": "genuine",
            "rows": [[0.0] + [1.0] * 12, [1.0] + [1.0] * 12],
        }
        text = json.dumps(rec).replace("1.0", "NaN", 1)
        path = tmp_path / "nan.jsonl"
        path.write_text(text + "\n")
        with pytest.raises(ParseFailure):
            read_dataset(path)

    def test_unknown_label_rejected(self, tmp_path):
        rec = {
            "user_id": "u1",
            "sample_id": 0,
            "label": "maybe",
            "rows": [[0.0] + [1.0] * 12, [1.0] + [1.0] * 12],
        }
        path = tmp_path / "label.jsonl"
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(SchemaViolation):
            read_dataset(path)
