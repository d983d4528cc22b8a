"""Interchange formats and synthetic dataset generators.

Classification datasets travel as UTF-8 CSV: header ``label,l0,...,l{C-1}``,
one sample per row, logits printed with 17 significant digits (lossless
for doubles). Segmentation logits use a little-endian binary layout:
magic ``AIMT``, u32 version = 1, u32 H, W, C, then H*W*C float32 values
row-major with channel innermost. Label maps: magic ``AIML``, u32
version = 1, u32 H, W, then H*W u16 labels with 0xFFFF meaning ignore.
Values are stored as float32 on disk and widened in memory, so tensors
that came from a reader (or a generator, which quantizes) round-trip
bit-for-bit.

A dataset manifest is a plain-text file: a block of ``key: value`` header
lines (kind, num_classes, optional seed), then one entry per line —
a CSV path for classification, or ``<logits-path> <labels-path>`` for
segmentation. Paths are resolved relative to the manifest's directory
and must not contain whitespace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import IGNORE_LABEL, ClassificationDataset, SegmentationInstance
from .stats import RngStream

__all__ = [
    "ParseError",
    "TENSOR_MAGIC",
    "LABELS_MAGIC",
    "FORMAT_VERSION",
    "DatasetManifest",
    "SyntheticSpec",
    "read_classification",
    "write_classification",
    "read_logits_tensor",
    "write_logits_tensor",
    "read_label_map",
    "write_label_map",
    "read_segmentation",
    "write_segmentation",
    "read_manifest",
    "write_manifest",
    "load_classification_manifest",
    "load_segmentation_manifest",
    "synth_classification",
    "synth_segmentation",
]

TENSOR_MAGIC = b"AIMT"
LABELS_MAGIC = b"AIML"
FORMAT_VERSION = 1
_MAX_ELEMENTS = 1 << 31
_KINDS = ("classification", "segmentation")

# substream keys for the synthetic generators
_K_SYNTH_CLS = 101
_K_SYNTH_SEG_LAYOUT = 102
_K_SYNTH_SEG_LOGITS = 103


class ParseError(ValueError):
    """A file violated its format; carries the path and 1-based line/offset."""

    def __init__(self, path, message: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


# ---------------------------------------------------------------------------
# classification CSV


def write_classification(dataset: ClassificationDataset, path) -> None:
    c = dataset.num_classes
    header = "label," + ",".join(f"l{i}" for i in range(c))
    lines = [header]
    for label, row in zip(dataset.labels, dataset.logits):
        lines.append(f"{int(label)}," + ",".join(format(x, ".17g") for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_classification(path) -> ClassificationDataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, "missing header")
    fields = lines[0].split(",")
    if len(fields) < 3 or fields[0] != "label":
        raise ParseError(path, "malformed header: expected 'label,l0,l1,...'", line=1)
    c = len(fields) - 1
    if fields[1:] != [f"l{i}" for i in range(c)]:
        raise ParseError(path, "malformed header: logit columns must be l0..l{C-1}", line=1)
    labels: list[int] = []
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != c + 1:
            raise ParseError(path, f"ragged row: expected {c + 1} fields, got {len(parts)}", line=lineno)
        try:
            label = int(parts[0])
        except ValueError:
            raise ParseError(path, f"non-integer label {parts[0]!r}", line=lineno) from None
        if not 0 <= label < c:
            raise ParseError(path, f"label {label} out of range for {c} classes", line=lineno)
        try:
            row = [float(p) for p in parts[1:]]
        except ValueError:
            raise ParseError(path, "non-numeric logit field", line=lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise ParseError(path, "non-finite logit value", line=lineno)
        labels.append(label)
        rows.append(row)
    return ClassificationDataset(
        num_classes=c,
        logits=np.array(rows, dtype=np.float64).reshape(len(rows), c),
        labels=np.array(labels, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# binary tensor / label-map formats


def _read_u32s(path, buf: bytes, offset: int, count: int) -> tuple[int, ...]:
    end = offset + 4 * count
    if len(buf) < end:
        raise ParseError(path, "truncated header")
    return tuple(
        int.from_bytes(buf[offset + 4 * i : offset + 4 * (i + 1)], "little")
        for i in range(count)
    )


def write_logits_tensor(values, path) -> None:
    t = np.asarray(values, dtype=np.float64)
    if t.ndim != 3:
        raise ValueError("logits tensor must have shape (H, W, C)")
    h, w, c = t.shape
    head = TENSOR_MAGIC + b"".join(
        v.to_bytes(4, "little") for v in (FORMAT_VERSION, h, w, c)
    )
    Path(path).write_bytes(head + np.ascontiguousarray(t, dtype="<f4").tobytes())


def read_logits_tensor(path) -> np.ndarray:
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < 4 or buf[:4] != TENSOR_MAGIC:
        raise ParseError(path, f"bad magic: expected {TENSOR_MAGIC!r}")
    version, h, w, c = _read_u32s(path, buf, 4, 4)
    if version != FORMAT_VERSION:
        raise ParseError(path, f"unsupported version {version}")
    if h < 1 or w < 1 or c < 2:
        raise ParseError(path, f"invalid dimensions {h}x{w}x{c}")
    if h * w * c > _MAX_ELEMENTS:
        raise ParseError(path, f"dimension overflow: {h}x{w}x{c}")
    payload = buf[20:]
    expected = h * w * c * 4
    if len(payload) < expected:
        raise ParseError(path, f"truncated payload: expected {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise ParseError(path, f"trailing data after {expected} payload bytes")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(h, w, c)
    if not np.all(np.isfinite(values)):
        raise ParseError(path, "non-finite value in tensor payload")
    return values


def write_label_map(labels, path) -> None:
    m = np.asarray(labels, dtype=np.int64)
    if m.ndim != 2:
        raise ValueError("label map must be two-dimensional")
    if np.any((m < 0) | (m > 0xFFFF)):
        raise ValueError("labels must fit in an unsigned 16-bit value")
    h, w = m.shape
    head = LABELS_MAGIC + b"".join(
        v.to_bytes(4, "little") for v in (FORMAT_VERSION, h, w)
    )
    Path(path).write_bytes(head + np.ascontiguousarray(m, dtype="<u2").tobytes())


def read_label_map(path) -> np.ndarray:
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < 4 or buf[:4] != LABELS_MAGIC:
        raise ParseError(path, f"bad magic: expected {LABELS_MAGIC!r}")
    version, h, w = _read_u32s(path, buf, 4, 3)
    if version != FORMAT_VERSION:
        raise ParseError(path, f"unsupported version {version}")
    if h < 1 or w < 1:
        raise ParseError(path, f"invalid dimensions {h}x{w}")
    if h * w > _MAX_ELEMENTS:
        raise ParseError(path, f"dimension overflow: {h}x{w}")
    payload = buf[16:]
    expected = h * w * 2
    if len(payload) < expected:
        raise ParseError(path, f"truncated payload: expected {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise ParseError(path, f"trailing data after {expected} payload bytes")
    return np.frombuffer(payload, dtype="<u2").astype(np.int64).reshape(h, w)


def write_segmentation(instance: SegmentationInstance, logits_path, labels_path) -> None:
    write_logits_tensor(instance.logits, logits_path)
    write_label_map(instance.labels, labels_path)


def read_segmentation(logits_path, labels_path) -> SegmentationInstance:
    logits = read_logits_tensor(logits_path)
    labels = read_label_map(labels_path)
    if labels.shape != logits.shape[:2]:
        raise ParseError(
            labels_path,
            f"label map {labels.shape} does not match logits {logits.shape[:2]}",
        )
    valid = labels != IGNORE_LABEL
    if np.any((labels >= logits.shape[2]) & valid):
        raise ParseError(labels_path, "label value out of range for the tensor's classes")
    return SegmentationInstance(logits=logits, labels=labels)


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class DatasetManifest:
    """Declares a dataset's kind, class count, and member files."""

    kind: str
    num_classes: int
    paths: tuple
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if not self.paths:
            raise ValueError("manifest lists no files")
        for entry in self.paths:
            if self.kind == "classification" and not isinstance(entry, str):
                raise ValueError("classification entries are single paths")
            if self.kind == "segmentation" and (
                not isinstance(entry, tuple) or len(entry) != 2
            ):
                raise ValueError("segmentation entries are (logits, labels) pairs")


def write_manifest(manifest: DatasetManifest, path) -> None:
    lines = [f"kind: {manifest.kind}", f"num_classes: {manifest.num_classes}"]
    if manifest.seed is not None:
        lines.append(f"seed: {manifest.seed}")
    for entry in manifest.paths:
        lines.append(entry if isinstance(entry, str) else f"{entry[0]} {entry[1]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header: dict[str, str] = {}
    body_start = 0
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            body_start = i + 1
            continue
        key, sep, value = stripped.partition(": ")
        if sep and key.isidentifier():
            header[key] = value.strip()
            body_start = i + 1
        else:
            body_start = i
            break
    else:
        body_start = len(lines)
    if "kind" not in header or "num_classes" not in header:
        raise ParseError(path, "manifest header needs 'kind' and 'num_classes'")
    kind = header["kind"]
    if kind not in _KINDS:
        raise ParseError(path, f"unknown kind {kind!r}")
    try:
        num_classes = int(header["num_classes"])
    except ValueError:
        raise ParseError(path, "num_classes must be an integer") from None
    seed = None
    if "seed" in header:
        try:
            seed = int(header["seed"])
        except ValueError:
            raise ParseError(path, "seed must be an integer") from None
    entries = []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        stripped = line.strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if kind == "classification":
            if len(tokens) != 1:
                raise ParseError(path, "classification entries are single paths", line=lineno)
            entries.append(tokens[0])
        else:
            if len(tokens) != 2:
                raise ParseError(
                    path, "segmentation entries are '<logits> <labels>' pairs", line=lineno
                )
            entries.append((tokens[0], tokens[1]))
    if not entries:
        raise ParseError(path, "manifest lists no files")
    try:
        return DatasetManifest(kind=kind, num_classes=num_classes, paths=tuple(entries), seed=seed)
    except ValueError as exc:
        raise ParseError(path, str(exc)) from None


def load_classification_manifest(path) -> ClassificationDataset:
    """Read a classification manifest and concatenate its member CSVs."""
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.kind != "classification":
        raise ParseError(path, "expected a classification manifest")
    parts = [read_classification(path.parent / p) for p in manifest.paths]
    for part in parts:
        if part.num_classes != manifest.num_classes:
            raise ParseError(path, "member class count disagrees with the manifest")
    return ClassificationDataset(
        num_classes=manifest.num_classes,
        logits=np.concatenate([p.logits for p in parts], axis=0),
        labels=np.concatenate([p.labels for p in parts], axis=0),
    )


def load_segmentation_manifest(path) -> list[SegmentationInstance]:
    """Read a segmentation manifest and load every (logits, labels) pair."""
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.kind != "segmentation":
        raise ParseError(path, "expected a segmentation manifest")
    instances = []
    for logits_rel, labels_rel in manifest.paths:
        inst = read_segmentation(path.parent / logits_rel, path.parent / labels_rel)
        if inst.num_classes != manifest.num_classes:
            raise ParseError(path, "member class count disagrees with the manifest")
        instances.append(inst)
    return instances


# ---------------------------------------------------------------------------
# synthetic generators


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic logits generators.

    ``margin`` is the true class's logit lead; ``intra_noise`` is the
    generation spread around each logit (distinct from the modulation
    sigma applied later).
    """

    num_classes: int
    samples: int
    margin: float
    intra_noise: float
    seed: int

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        if self.intra_noise < 0:
            raise ValueError("intra_noise must be >= 0")


def synth_classification(spec: SyntheticSpec) -> ClassificationDataset:
    """Labeled random logits: the true class leads by ``margin``.

    Each sample draws a uniform label; its logit is margin plus
    N(0, intra_noise^2) and all others are N(0, intra_noise^2). With
    intra_noise = 0 the argmax accuracy is exactly 1. Pure function of
    the spec: the same spec reproduces the identical dataset.
    """
    gen = RngStream(spec.seed).substream(_K_SYNTH_CLS).generator()
    n, c = spec.samples, spec.num_classes
    labels = gen.integers(0, c, size=n)
    if spec.intra_noise == 0.0:
        logits = np.zeros((n, c))
    else:
        logits = gen.normal(0.0, spec.intra_noise, size=(n, c))
    logits[np.arange(n), labels] += spec.margin
    return ClassificationDataset(num_classes=c, logits=logits, labels=labels.astype(np.int64))


def synth_segmentation(spec: SyntheticSpec, height: int, width: int) -> SegmentationInstance:
    """A synthetic scene: class-0 background with one rectangle per other class.

    The label map starts as class 0 and paints a seeded random rectangle
    for each class 1..C-1 (later rectangles may occlude earlier ones), so
    the background keeps a majority share like typical scene datasets.
    Per-pixel logits follow the classification generator keyed by the
    pixel's label, then are quantized to float32 (the on-disk precision)
    so written instances round-trip bit-for-bit. ``spec.samples`` is
    ignored; one instance is produced per spec.
    """
    if height < 1 or width < 1:
        raise ValueError("height and width must be >= 1")
    c = spec.num_classes
    layout = RngStream(spec.seed).substream(_K_SYNTH_SEG_LAYOUT).generator()
    labels = np.zeros((height, width), dtype=np.int64)
    for cls in range(1, c):
        rh = int(layout.integers(max(1, height // 6), max(2, height // 3 + 1)))
        rw = int(layout.integers(max(1, width // 6), max(2, width // 3 + 1)))
        top = int(layout.integers(0, max(1, height - rh + 1)))
        left = int(layout.integers(0, max(1, width - rw + 1)))
        labels[top : top + rh, left : left + rw] = cls
    gen = RngStream(spec.seed).substream(_K_SYNTH_SEG_LOGITS).generator()
    if spec.intra_noise == 0.0:
        logits = np.zeros((height, width, c))
    else:
        logits = gen.normal(0.0, spec.intra_noise, size=(height, width, c))
    rows, cols = np.indices((height, width))
    logits[rows, cols, labels] += spec.margin
    logits = logits.astype(np.float32).astype(np.float64)
    return SegmentationInstance(logits=logits, labels=labels)
