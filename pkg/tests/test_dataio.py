"""Tests for interchange formats, manifests, and synthetic generators."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from logitmod.dataio import (
    DatasetManifest,
    FORMAT_VERSION,
    LABELS_MAGIC,
    ParseError,
    SyntheticSpec,
    TENSOR_MAGIC,
    load_classification_manifest,
    load_segmentation_manifest,
    read_classification,
    read_label_map,
    read_logits_tensor,
    read_manifest,
    read_segmentation,
    synth_classification,
    synth_segmentation,
    write_classification,
    write_label_map,
    write_logits_tensor,
    write_manifest,
    write_segmentation,
)
from logitmod.metrics import (
    IGNORE_LABEL,
    ClassificationDataset,
    SegmentationInstance,
    predict_map,
    segmentation_metrics,
    top1_accuracy,
)
from logitmod.modulate import ModulationSpec, apply_to_tensor
from logitmod.stats import RngStream


def random_dataset(gen, n=None, c=None):
    n = n or int(gen.integers(1, 6))
    c = c or int(gen.integers(2, 6))
    return ClassificationDataset(
        num_classes=c,
        logits=gen.normal(0, 10, size=(n, c)),
        labels=gen.integers(0, c, size=n),
    )


def random_instance(gen, h=None, w=None, c=None):
    h = h or int(gen.integers(1, 5))
    w = w or int(gen.integers(1, 5))
    c = c or int(gen.integers(2, 5))
    logits = gen.normal(0, 10, size=(h, w, c)).astype(np.float32).astype(np.float64)
    labels = gen.integers(0, c, size=(h, w))
    labels[gen.random(size=(h, w)) < 0.1] = IGNORE_LABEL
    return SegmentationInstance(logits=logits, labels=labels)


class TestClassificationCsv:
    def test_round_trip(self, tmp_path):
        gen = np.random.default_rng(1)
        ds = random_dataset(gen, n=3, c=4)
        path = tmp_path / "d.csv"
        write_classification(ds, path)
        back = read_classification(path)
        assert back.num_classes == ds.num_classes
        assert np.array_equal(back.logits, ds.logits)
        assert np.array_equal(back.labels, ds.labels)

    @settings(max_examples=30, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(seed=st.integers(0, 2**32 - 1))
    def test_round_trip_random(self, tmp_path, seed):
        ds = random_dataset(np.random.default_rng(seed))
        path = tmp_path / f"d{seed}.csv"
        write_classification(ds, path)
        back = read_classification(path)
        assert np.array_equal(back.logits, ds.logits)
        assert np.array_equal(back.labels, ds.labels)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="missing header"):
            read_classification(path)

    def test_bad_header_name(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("class,l0,l1\n0,1.0,2.0\n")
        with pytest.raises(ParseError, match="header"):
            read_classification(path)

    def test_bad_logit_column_names(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("label,l0,l2\n0,1.0,2.0\n")
        with pytest.raises(ParseError, match="header"):
            read_classification(path)

    def test_label_at_class_count(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("label,l0,l1\n2,1.0,2.0\n")
        with pytest.raises(ParseError, match="line|:2"):
            read_classification(path)

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("label,l0,l1\n0,1.0,2.0\n1,3.0\n")
        with pytest.raises(ParseError, match=":3"):
            read_classification(path)

    def test_non_numeric_field(self, tmp_path):
        path = tmp_path / "n.csv"
        path.write_text("label,l0,l1\n0,1.0,abc\n")
        with pytest.raises(ParseError, match="non-numeric"):
            read_classification(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("label,l0,l1\n0,1.0,inf\n")
        with pytest.raises(ParseError, match="non-finite"):
            read_classification(path)

    def test_non_integer_label(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("label,l0,l1\n0.5,1.0,2.0\n")
        with pytest.raises(ParseError, match="label"):
            read_classification(path)


class TestBinaryFormats:
    def test_tensor_round_trip_bitwise(self, tmp_path):
        gen = np.random.default_rng(2)
        t = gen.normal(0, 5, size=(2, 2, 3)).astype(np.float32).astype(np.float64)
        path = tmp_path / "t.aimt"
        write_logits_tensor(t, path)
        back = read_logits_tensor(path)
        assert back.tobytes() == t.tobytes()
        # writing the read-back tensor reproduces identical file bytes
        path2 = tmp_path / "t2.aimt"
        write_logits_tensor(back, path2)
        assert path2.read_bytes() == path.read_bytes()

    def test_header_layout(self, tmp_path):
        path = tmp_path / "t.aimt"
        write_logits_tensor(np.zeros((4, 4, 3)), path)
        buf = path.read_bytes()
        assert buf[:4] == TENSOR_MAGIC
        assert int.from_bytes(buf[4:8], "little") == FORMAT_VERSION
        assert (
            int.from_bytes(buf[8:12], "little"),
            int.from_bytes(buf[12:16], "little"),
            int.from_bytes(buf[16:20], "little"),
        ) == (4, 4, 3)
        assert len(buf) == 20 + 4 * 4 * 3 * 4

    def test_bad_magic_names_expected(self, tmp_path):
        path = tmp_path / "bad.aimt"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(ParseError, match="AIMT"):
            read_logits_tensor(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.aimt"
        write_logits_tensor(np.zeros((1, 1, 2)), path)
        buf = bytearray(path.read_bytes())
        buf[4] = 9
        path.write_bytes(bytes(buf))
        with pytest.raises(ParseError, match="version"):
            read_logits_tensor(path)

    def test_dimension_overflow(self, tmp_path):
        path = tmp_path / "o.aimt"
        head = TENSOR_MAGIC + b"".join(
            v.to_bytes(4, "little") for v in (FORMAT_VERSION, 70000, 70000, 1000)
        )
        path.write_bytes(head)
        with pytest.raises(ParseError, match="overflow"):
            read_logits_tensor(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "tr.aimt"
        write_logits_tensor(np.zeros((2, 2, 2)), path)
        buf = path.read_bytes()
        path.write_bytes(buf[:-4])
        with pytest.raises(ParseError, match="truncated"):
            read_logits_tensor(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "tb.aimt"
        write_logits_tensor(np.zeros((2, 2, 2)), path)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(ParseError, match="trailing"):
            read_logits_tensor(path)

    def test_single_channel_rejected(self, tmp_path):
        path = tmp_path / "c1.aimt"
        head = TENSOR_MAGIC + b"".join(
            v.to_bytes(4, "little") for v in (FORMAT_VERSION, 1, 1, 1)
        )
        path.write_bytes(head + b"\x00" * 4)
        with pytest.raises(ParseError, match="dimensions"):
            read_logits_tensor(path)

    def test_label_map_round_trip(self, tmp_path):
        labels = np.array([[0, 1], [IGNORE_LABEL, 2]])
        path = tmp_path / "m.aiml"
        write_label_map(labels, path)
        assert np.array_equal(read_label_map(path), labels)
        buf = path.read_bytes()
        assert buf[:4] == LABELS_MAGIC
        assert len(buf) == 16 + 2 * 2 * 2

    def test_label_map_bad_magic(self, tmp_path):
        path = tmp_path / "m.aiml"
        path.write_bytes(b"AIMT" + b"\x00" * 12)
        with pytest.raises(ParseError, match="AIML"):
            read_label_map(path)

    def test_segmentation_pair_round_trip(self, tmp_path):
        gen = np.random.default_rng(3)
        inst = random_instance(gen, h=3, w=2, c=4)
        write_segmentation(inst, tmp_path / "x.aimt", tmp_path / "x.aiml")
        back = read_segmentation(tmp_path / "x.aimt", tmp_path / "x.aiml")
        assert back.logits.tobytes() == inst.logits.tobytes()
        assert np.array_equal(back.labels, inst.labels)

    def test_segmentation_dims_must_agree(self, tmp_path):
        write_logits_tensor(np.zeros((2, 2, 3)), tmp_path / "a.aimt")
        write_label_map(np.zeros((2, 3), dtype=int), tmp_path / "a.aiml")
        with pytest.raises(ParseError, match="match"):
            read_segmentation(tmp_path / "a.aimt", tmp_path / "a.aiml")

    def test_segmentation_label_out_of_range(self, tmp_path):
        write_logits_tensor(np.zeros((1, 1, 2)), tmp_path / "b.aimt")
        write_label_map(np.array([[5]]), tmp_path / "b.aiml")
        with pytest.raises(ParseError, match="range"):
            read_segmentation(tmp_path / "b.aimt", tmp_path / "b.aiml")

    @settings(max_examples=60, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(offset=st.integers(0, 19), flip=st.integers(1, 255))
    def test_any_header_corruption_is_rejected(self, tmp_path, offset, flip):
        # every byte of the 20-byte preamble is load-bearing: magic, version,
        # or a dimension; changing one cannot yield a consistent file
        t = np.arange(12, dtype=np.float32).astype(np.float64).reshape(2, 2, 3)
        path = tmp_path / "fuzz.aimt"
        write_logits_tensor(t, path)
        buf = bytearray(path.read_bytes())
        buf[offset] ^= flip
        path.write_bytes(bytes(buf))
        with pytest.raises(ParseError):
            read_logits_tensor(path)


class TestManifests:
    def test_round_trip_classification(self, tmp_path):
        manifest = DatasetManifest("classification", 10, ("a.csv", "b.csv"), seed=7)
        write_manifest(manifest, tmp_path / "m.txt")
        assert read_manifest(tmp_path / "m.txt") == manifest

    def test_round_trip_segmentation(self, tmp_path):
        manifest = DatasetManifest("segmentation", 4, (("x.aimt", "x.aiml"),))
        write_manifest(manifest, tmp_path / "m.txt")
        assert read_manifest(tmp_path / "m.txt") == manifest

    def test_missing_header_keys(self, tmp_path):
        (tmp_path / "m.txt").write_text("kind: classification\na.csv\n")
        with pytest.raises(ParseError, match="num_classes"):
            read_manifest(tmp_path / "m.txt")

    def test_unknown_kind(self, tmp_path):
        (tmp_path / "m.txt").write_text("kind: detection\nnum_classes: 3\na.csv\n")
        with pytest.raises(ParseError, match="kind"):
            read_manifest(tmp_path / "m.txt")

    def test_no_files(self, tmp_path):
        (tmp_path / "m.txt").write_text("kind: classification\nnum_classes: 3\n")
        with pytest.raises(ParseError, match="no files"):
            read_manifest(tmp_path / "m.txt")

    def test_segmentation_needs_pairs(self, tmp_path):
        (tmp_path / "m.txt").write_text("kind: segmentation\nnum_classes: 3\nonly_one_path\n")
        with pytest.raises(ParseError, match="pairs"):
            read_manifest(tmp_path / "m.txt")

    def test_load_classification(self, tmp_path):
        gen = np.random.default_rng(4)
        ds = random_dataset(gen, n=4, c=3)
        write_classification(ds, tmp_path / "d.csv")
        write_manifest(DatasetManifest("classification", 3, ("d.csv",)), tmp_path / "m.txt")
        loaded = load_classification_manifest(tmp_path / "m.txt")
        assert np.array_equal(loaded.logits, ds.logits)

    def test_load_checks_class_count(self, tmp_path):
        gen = np.random.default_rng(5)
        write_classification(random_dataset(gen, n=2, c=3), tmp_path / "d.csv")
        write_manifest(DatasetManifest("classification", 4, ("d.csv",)), tmp_path / "m.txt")
        with pytest.raises(ParseError, match="disagrees"):
            load_classification_manifest(tmp_path / "m.txt")

    def test_load_missing_file(self, tmp_path):
        write_manifest(DatasetManifest("segmentation", 3, (("x.aimt", "x.aiml"),)), tmp_path / "m.txt")
        with pytest.raises(OSError):
            load_segmentation_manifest(tmp_path / "m.txt")

    def test_load_segmentation(self, tmp_path):
        gen = np.random.default_rng(6)
        inst = random_instance(gen, h=2, w=2, c=3)
        write_segmentation(inst, tmp_path / "i.aimt", tmp_path / "i.aiml")
        write_manifest(DatasetManifest("segmentation", 3, (("i.aimt", "i.aiml"),)), tmp_path / "m.txt")
        loaded = load_segmentation_manifest(tmp_path / "m.txt")
        assert len(loaded) == 1
        assert np.array_equal(loaded[0].labels, inst.labels)


class TestSynthClassification:
    def test_zero_spread_gives_perfect_accuracy(self):
        spec = SyntheticSpec(num_classes=10, samples=1000, margin=4.0, intra_noise=0.0, seed=1)
        ds = synth_classification(spec)
        preds = np.argmax(ds.logits, axis=1)
        assert top1_accuracy(ds, preds) == 1.0

    def test_pure_function_of_spec(self):
        spec = SyntheticSpec(num_classes=5, samples=50, margin=2.0, intra_noise=1.0, seed=9)
        a = synth_classification(spec)
        b = synth_classification(spec)
        assert np.array_equal(a.logits, b.logits)
        assert np.array_equal(a.labels, b.labels)

    def test_overwhelming_noise_reaches_chance_level(self):
        spec = SyntheticSpec(num_classes=10, samples=20000, margin=4.0, intra_noise=0.0, seed=2)
        ds = synth_classification(spec)
        noisy = ds.logits + RngStream(3).generator().normal(0, 1000.0, size=ds.logits.shape)
        acc = top1_accuracy(ds, np.argmax(noisy, axis=1))
        assert abs(acc - 0.1) < 0.01

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SyntheticSpec(num_classes=1, samples=10, margin=1.0, intra_noise=0.0, seed=0)
        with pytest.raises(ValueError):
            SyntheticSpec(num_classes=3, samples=0, margin=1.0, intra_noise=0.0, seed=0)
        with pytest.raises(ValueError):
            SyntheticSpec(num_classes=3, samples=10, margin=0.0, intra_noise=0.0, seed=0)
        with pytest.raises(ValueError):
            SyntheticSpec(num_classes=3, samples=10, margin=1.0, intra_noise=-0.1, seed=0)


class TestSynthSegmentation:
    def test_zero_spread_gives_perfect_miou(self):
        spec = SyntheticSpec(num_classes=4, samples=1, margin=3.0, intra_noise=0.0, seed=4)
        inst = synth_segmentation(spec, 16, 16)
        m = segmentation_metrics([inst], [predict_map(inst.logits)])
        assert m.mean_iou == 1.0

    def test_deterministic(self):
        spec = SyntheticSpec(num_classes=4, samples=1, margin=3.0, intra_noise=1.0, seed=5)
        a = synth_segmentation(spec, 12, 10)
        b = synth_segmentation(spec, 12, 10)
        assert a.logits.tobytes() == b.logits.tobytes()
        assert np.array_equal(a.labels, b.labels)

    def test_background_keeps_majority(self):
        spec = SyntheticSpec(num_classes=8, samples=1, margin=3.0, intra_noise=1.0, seed=6)
        inst = synth_segmentation(spec, 64, 64)
        share = float(np.mean(inst.labels == 0))
        assert share > 0.4

    def test_file_round_trip_is_bitwise(self, tmp_path):
        spec = SyntheticSpec(num_classes=3, samples=1, margin=2.0, intra_noise=1.5, seed=7)
        inst = synth_segmentation(spec, 6, 5)
        write_segmentation(inst, tmp_path / "s.aimt", tmp_path / "s.aiml")
        back = read_segmentation(tmp_path / "s.aimt", tmp_path / "s.aiml")
        assert back.logits.tobytes() == inst.logits.tobytes()

    def test_modulated_at_zero_sigma_round_trips(self, tmp_path):
        spec = SyntheticSpec(num_classes=3, samples=1, margin=2.0, intra_noise=1.0, seed=8)
        inst = synth_segmentation(spec, 4, 4)
        out = apply_to_tensor(inst.logits, ModulationSpec("utility", 0.0), RngStream(1))
        write_logits_tensor(inst.logits, tmp_path / "a.aimt")
        write_logits_tensor(out, tmp_path / "b.aimt")
        assert (tmp_path / "a.aimt").read_bytes() == (tmp_path / "b.aimt").read_bytes()
