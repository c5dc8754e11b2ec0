"""Multi-band raster container, class maps, and PPM/PGM rendering.

The on-disk raster container is a pair of files: `<name>.json` holding the
header (dimensions, band names, encoding, payload file name) and
`<name>.band` holding raw little-endian float64 values in band-sequential
order (band 0 row-major, then band 1, ...). The format is dependency-free
and round-trips bit-for-bit.

Class maps render to binary PPM (P6): water blue (0,0,255), non-water
green (0,160,0), ignorance red (255,0,0). Mass channels render to binary
PGM (P5) with value = round(255 * mass).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    MissingBandError,
    NonFiniteValueError,
    RasterFormatError,
    RasterPayloadError,
)

PIPELINE_BANDS = ("blue", "green", "red", "rededge", "nir")

WATER, NONWATER, IGNORANCE = 0, 1, 2
LABEL_NAMES = ("water", "non-water", "ignorance")
CLASS_COLORS = np.array([[0, 0, 255], [0, 160, 0], [255, 0, 0]], dtype=np.uint8)

_ENCODING = "float64-le"
_FORMAT = "waterfuse-raster"


class MultiBandRaster:
    """Named spectral bands over a fixed width x height grid.

    Bands are float64 arrays of shape (height, width); all bands share
    dimensions, names are unique, and every value must be finite. The
    raster is immutable after construction.
    """

    def __init__(self, bands: Iterable[tuple[str, np.ndarray]]):
        bands = [(name, np.asarray(values, dtype=np.float64)) for name, values in bands]
        if not bands:
            raise ValueError("raster needs at least one band")
        names = [name for name, _ in bands]
        if len(set(names)) != len(names):
            raise ValueError(f"band names must be unique, got {names}")
        shape = bands[0][1].shape
        if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
            raise ValueError(f"bands must be 2-D non-empty grids, got shape {shape}")
        for name, values in bands:
            if values.shape != shape:
                raise ValueError(
                    f"band {name!r} has shape {values.shape}, expected {shape}"
                )
            if not np.isfinite(values).all():
                raise NonFiniteValueError(f"band {name!r} contains non-finite values")
            values.setflags(write=False)
        self._bands = dict(bands)
        self.height, self.width = shape

    @property
    def band_names(self) -> tuple[str, ...]:
        return tuple(self._bands)

    def band(self, name: str) -> np.ndarray:
        try:
            return self._bands[name]
        except KeyError:
            raise MissingBandError(
                f"band {name!r} not in raster (has {list(self._bands)})"
            ) from None

    def has_bands(self, names: Sequence[str]) -> bool:
        return all(name in self._bands for name in names)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiBandRaster)
            and self.band_names == other.band_names
            and all(np.array_equal(self._bands[n], other._bands[n]) for n in self._bands)
        )


class ClassMap:
    """Per-pixel label grid plus optional fused mass triple.

    `labels` holds WATER / NONWATER / IGNORANCE codes; `masses`, when
    given, is (height, width, 3) with the per-pixel (water, non-water,
    ignorance) mass triple, each summing to 1 within 1e-6.
    """

    def __init__(self, labels: np.ndarray, masses: np.ndarray | None = None):
        labels = np.asarray(labels, dtype=np.uint8)
        if labels.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {labels.shape}")
        if labels.max(initial=0) > IGNORANCE:
            raise ValueError("labels must be WATER, NONWATER or IGNORANCE")
        if masses is not None:
            masses = np.asarray(masses, dtype=np.float64)
            if masses.shape != labels.shape + (3,):
                raise ValueError(
                    f"masses shape {masses.shape} does not match labels {labels.shape}"
                )
            if np.any(np.abs(masses.sum(axis=2) - 1.0) > 1e-6):
                raise ValueError("mass triples must sum to 1 within 1e-6")
            masses.setflags(write=False)
        labels.setflags(write=False)
        self.labels = labels
        self.masses = masses
        self.height, self.width = labels.shape

    def fractions(self) -> dict[str, float]:
        """Label fractions keyed by label name."""
        total = self.labels.size
        return {
            name: float(np.count_nonzero(self.labels == code)) / total
            for code, name in enumerate(LABEL_NAMES)
        }


def save_raster(raster: MultiBandRaster, path: str | Path) -> None:
    """Write `<path>.json` + `<path>.band` (a `.json` suffix on `path` is stripped)."""
    base = Path(path)
    if base.suffix == ".json":
        base = base.with_suffix("")
    header = {
        "format": _FORMAT,
        "version": 1,
        "width": raster.width,
        "height": raster.height,
        "bands": list(raster.band_names),
        "data": base.name + ".band",
        "encoding": _ENCODING,
    }
    payload = np.stack([raster.band(n) for n in raster.band_names])
    base.with_suffix(".band").write_bytes(payload.astype("<f8").tobytes())
    base.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n")


def load_raster(path: str | Path) -> MultiBandRaster:
    """Read a raster container from its `.json` header path."""
    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise RasterFormatError(f"{header_path}: malformed JSON header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != _FORMAT:
        raise RasterFormatError(f"{header_path}: not a {_FORMAT} header")
    try:
        width = int(header["width"])
        height = int(header["height"])
        bands = list(header["bands"])
        data_name = header["data"]
        encoding = header["encoding"]
    except (KeyError, TypeError, ValueError) as exc:
        raise RasterFormatError(f"{header_path}: incomplete header: {exc}") from exc
    if encoding != _ENCODING:
        raise RasterFormatError(f"{header_path}: unsupported encoding {encoding!r}")
    if width < 1 or height < 1 or not bands:
        raise RasterFormatError(f"{header_path}: empty raster declared")
    raw = (header_path.parent / data_name).read_bytes()
    expected = len(bands) * width * height * 8
    if len(raw) != expected:
        raise RasterPayloadError(
            f"{data_name}: payload is {len(raw)} bytes, header implies {expected}"
        )
    values = np.frombuffer(raw, dtype="<f8").reshape(len(bands), height, width)
    if not np.isfinite(values).all():
        raise NonFiniteValueError(f"{data_name}: payload contains non-finite values")
    return MultiBandRaster((name, values[i].copy()) for i, name in enumerate(bands))


def write_pgm(gray: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit binary PGM (P5)."""
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError(f"PGM image must be 2-D, got shape {gray.shape}")
    height, width = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def write_ppm(rgb: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit binary PPM (P6)."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"PPM image must be (h, w, 3), got shape {rgb.shape}")
    height, width = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def _read_pnm(path: str | Path, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(magic):
        raise RasterFormatError(f"{path}: expected {magic.decode()} image")
    # header = magic + three whitespace-separated ints, then one byte of
    # whitespace before the payload
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RasterFormatError(f"{path}: truncated header")
        tokens.append(int(data[start:pos]))
    pos += 1
    width, height, maxval = tokens
    if maxval != 255:
        raise RasterFormatError(f"{path}: only 8-bit images supported")
    expected = width * height * channels
    payload = data[pos : pos + expected]
    if len(payload) != expected:
        raise RasterPayloadError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    shape = (height, width) if channels == 1 else (height, width, channels)
    return np.frombuffer(payload, dtype=np.uint8).reshape(shape).copy()


def read_pgm(path: str | Path) -> np.ndarray:
    return _read_pnm(path, b"P5", 1)


def read_ppm(path: str | Path) -> np.ndarray:
    return _read_pnm(path, b"P6", 3)


def render_classmap(cmap: ClassMap, path: str | Path) -> None:
    """Render labels to a color PPM using the class color table."""
    write_ppm(CLASS_COLORS[cmap.labels], path)


def classmap_from_ppm(path: str | Path) -> ClassMap:
    """Inverse of :func:`render_classmap` (labels only, no masses)."""
    rgb = read_ppm(path)
    labels = np.full(rgb.shape[:2], 255, dtype=np.uint8)
    for code, color in enumerate(CLASS_COLORS):
        labels[np.all(rgb == color, axis=2)] = code
    if labels.max() > IGNORANCE:
        raise RasterFormatError(f"{path}: contains colors outside the class table")
    return ClassMap(labels)


def render_mass(mass: np.ndarray, path: str | Path) -> None:
    """Render a single mass plane (values in [0, 1]) to grayscale PGM."""
    mass = np.asarray(mass, dtype=np.float64)
    if mass.min(initial=0.0) < 0.0 or mass.max(initial=0.0) > 1.0:
        raise ValueError("mass values must lie in [0, 1]")
    write_pgm(np.rint(mass * 255.0).astype(np.uint8), path)
