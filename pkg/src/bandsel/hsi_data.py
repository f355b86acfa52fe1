"""Hyperspectral image loading, band removal, and per-band quantization.

Two on-disk formats are supported:

* CSV: one band per row with N comma-separated radiance values. An optional
  companion file ``<name>.labels.csv`` holds N integer class ids (0 means
  unlabeled background).
* ENVI subset: a plain-text ``<name>.hdr`` with the keys samples, lines,
  bands, data type, interleave, and byte order, next to a ``<name>.raw``
  payload. Only BSQ interleave, little-endian byte order, and float32 or
  uint16 samples (data type 4 or 12) are accepted.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyResult,
    IndexOutOfRange,
    MalformedHeader,
    NonFiniteValue,
    SizeMismatch,
    UnsupportedDtype,
)

ENVI_DTYPES = {4: np.dtype("<f4"), 12: np.dtype("<u2")}


@dataclass(frozen=True, eq=False)
class HyperspectralImage:
    """An L x N matrix of radiance samples plus optional labels.

    Rows are spectral bands, columns are pixels (spatial layout flattened).
    Instances are immutable after construction and safe to share between
    threads.
    """

    values: np.ndarray
    band_wavelengths: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise SizeMismatch(
                f"values must be a 2-D bands x pixels matrix, got shape {values.shape}"
            )
        bad = ~np.isfinite(values)
        if bad.any():
            band, pixel = np.argwhere(bad)[0]
            raise NonFiniteValue(f"non-finite radiance at band {band}, pixel {pixel}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        if self.band_wavelengths is not None:
            wl = np.asarray(self.band_wavelengths, dtype=np.float64)
            if wl.shape != (values.shape[0],):
                raise SizeMismatch(
                    f"expected {values.shape[0]} wavelengths, got {wl.shape}"
                )
            wl.setflags(write=False)
            object.__setattr__(self, "band_wavelengths", wl)

        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (values.shape[1],):
                raise SizeMismatch(
                    f"expected {values.shape[1]} labels, got {labels.shape}"
                )
            if (labels < 0).any():
                raise SizeMismatch("class identifiers must be non-negative")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def pixels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class QuantizedBand:
    """Integer bin codes for one band under min-max quantization."""

    band_index: int
    bin_count: int
    codes: np.ndarray = field(repr=False)

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)


def load_image(path: str | os.PathLike, format: str = "csv") -> HyperspectralImage:
    """Load a hyperspectral image (and companion labels, when present).

    ``format`` is one of ``"csv"`` or ``"envi_bsq"``. For the ENVI form the
    path may point at the ``.hdr``, the ``.raw``, or their shared basename.
    """
    path = os.fspath(path)
    if format == "csv":
        return _load_csv(path)
    if format == "envi_bsq":
        return _load_envi(path)
    raise ValueError(f"unsupported format {format!r}; expected 'csv' or 'envi_bsq'")


def save_csv(image: HyperspectralImage, path: str | os.PathLike) -> None:
    """Write an image as band-per-row CSV, plus a labels companion if labeled."""
    path = os.fspath(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in image.values:
            writer.writerow([repr(float(v)) for v in row])
    if image.labels is not None:
        with open(_labels_path(path), "w", newline="") as fh:
            csv.writer(fh).writerow([int(v) for v in image.labels])


def remove_bands(
    image: HyperspectralImage, drop: set[int]
) -> tuple[HyperspectralImage, tuple[int, ...]]:
    """Drop the given band indices, keeping the survivors' relative order.

    Returns the reduced image together with a remap table: ``remap[i]`` is the
    original index of the reduced image's band ``i``, so selections made on
    the reduced image can be reported in original numbering.
    """
    drop = set(int(b) for b in drop)
    for b in drop:
        if not 0 <= b < image.bands:
            raise IndexOutOfRange(f"band {b} not in [0, {image.bands})")
    keep = [i for i in range(image.bands) if i not in drop]
    if not keep:
        raise EmptyResult("dropping all bands leaves an empty image")
    wavelengths = None
    if image.band_wavelengths is not None:
        wavelengths = image.band_wavelengths[keep]
    reduced = HyperspectralImage(
        values=image.values[keep],
        band_wavelengths=wavelengths,
        labels=image.labels,
    )
    return reduced, tuple(keep)


def quantize_band(
    image: HyperspectralImage, band: int, bin_count: int = 256
) -> QuantizedBand:
    """Quantize one band into ``bin_count`` equal-width bins.

    ``code = floor((v - min) / (max - min) * bin_count)`` clamped to
    ``bin_count - 1``; a constant band maps every pixel to code 0.
    """
    if not 0 <= band < image.bands:
        raise IndexOutOfRange(f"band {band} not in [0, {image.bands})")
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    v = image.values[band]
    lo, hi = v.min(), v.max()
    if hi == lo:
        codes = np.zeros(image.pixels, dtype=np.int64)
    else:
        codes = np.floor((v - lo) / (hi - lo) * bin_count).astype(np.int64)
        np.clip(codes, 0, bin_count - 1, out=codes)
    return QuantizedBand(band_index=band, bin_count=bin_count, codes=codes)


def _labels_path(path: str) -> str:
    stem, ext = os.path.splitext(path)
    return stem + ".labels.csv"


def _load_labels_if_present(path: str, pixels: int) -> np.ndarray | None:
    labels_path = _labels_path(path)
    if not os.path.exists(labels_path):
        return None
    tokens: list[str] = []
    with open(labels_path, newline="") as fh:
        for row in csv.reader(fh):
            tokens.extend(t for t in row if t.strip())
    try:
        labels = np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError as exc:
        raise MalformedHeader(f"bad label value in {labels_path}: {exc}") from exc
    if labels.size != pixels:
        raise SizeMismatch(
            f"{labels_path} holds {labels.size} labels for {pixels} pixels"
        )
    return labels


def _load_csv(path: str) -> HyperspectralImage:
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row or all(not t.strip() for t in row):
                continue
            try:
                rows.append([float(t) for t in row])
            except ValueError as exc:
                raise MalformedHeader(f"{path}:{lineno + 1}: {exc}") from exc
    if not rows:
        raise MalformedHeader(f"{path} holds no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SizeMismatch(f"{path} has ragged rows (widths {sorted(widths)})")
    values = np.array(rows, dtype=np.float64)
    labels = _load_labels_if_present(path, values.shape[1])
    return HyperspectralImage(values=values, labels=labels)


def _envi_paths(path: str) -> tuple[str, str]:
    if path.endswith(".hdr"):
        base = path[: -len(".hdr")]
    elif path.endswith(".raw"):
        base = path[: -len(".raw")]
    else:
        base = path
    return base + ".hdr", base + ".raw"


def _parse_envi_header(header_path: str) -> dict[str, str]:
    try:
        with open(header_path) as fh:
            text = fh.read()
    except OSError as exc:
        raise MalformedHeader(f"cannot read header {header_path}: {exc}") from exc
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.upper() == "ENVI" or "=" not in line:
            continue
        key, _, value = line.partition("=")
        fields[key.strip().lower()] = value.strip()
    return fields


def _load_envi(path: str) -> HyperspectralImage:
    header_path, raw_path = _envi_paths(path)
    fields = _parse_envi_header(header_path)

    required = ("samples", "lines", "bands", "data type", "interleave", "byte order")
    missing = [k for k in required if k not in fields]
    if missing:
        raise MalformedHeader(f"{header_path} is missing keys: {', '.join(missing)}")
    try:
        samples = int(fields["samples"])
        lines = int(fields["lines"])
        bands = int(fields["bands"])
        data_type = int(fields["data type"])
        byte_order = int(fields["byte order"])
    except ValueError as exc:
        raise MalformedHeader(f"{header_path}: non-integer field: {exc}") from exc

    if samples < 1 or lines < 1 or bands < 1:
        raise MalformedHeader(f"{header_path}: non-positive dimensions")
    if fields["interleave"].lower() != "bsq":
        raise MalformedHeader(
            f"{header_path}: interleave {fields['interleave']!r} not supported (bsq only)"
        )
    if byte_order != 0:
        raise MalformedHeader(f"{header_path}: only little-endian (byte order 0) supported")
    if data_type not in ENVI_DTYPES:
        raise UnsupportedDtype(
            f"{header_path}: data type {data_type} not supported (4=float32, 12=uint16)"
        )

    dtype = ENVI_DTYPES[data_type]
    pixels = samples * lines
    expected = bands * pixels
    payload = np.fromfile(raw_path, dtype=dtype)
    if payload.size != expected:
        raise SizeMismatch(
            f"{raw_path} holds {payload.size} samples, header declares {expected} "
            f"({bands} bands x {lines} lines x {samples} samples)"
        )
    values = payload.astype(np.float64).reshape(bands, pixels)
    labels = _load_labels_if_present(raw_path, pixels)
    return HyperspectralImage(values=values, labels=labels)


def parse_band_ranges(text: str) -> set[int]:
    """Parse a band-range string like ``"103-107,149-162,219"`` (0-based, inclusive)."""
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo_s, _, hi_s = part.partition("-")
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"bad range {part!r}")
            out.update(range(lo, hi + 1))
        else:
            out.add(int(part))
    return out
