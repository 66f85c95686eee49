"""File formats: T3/C3 channel directories, label maps, class configs, PNG, CSV.

A matrix directory holds nine little-endian float32 rasters, row-major::

    T11.bin T22.bin T33.bin T12_re.bin T12_im.bin T13_re.bin T13_im.bin
    T23_re.bin T23_im.bin

(prefix ``C`` for the lexicographic basis) plus ``header.txt`` with
``key=value`` lines for nrows, ncols, basis and looks.

A label map is an 8-byte header (width, height as little-endian uint32)
followed by ``width*height`` class bytes, row-major.
"""
from __future__ import annotations

import logging
import os
import struct
from pathlib import Path

import numpy as np

from .field import LEXICOGRAPHIC, PAULI, CovarianceField, Rect
from .speckle import LabelMap

log = logging.getLogger(__name__)

CHANNELS = ("11", "22", "33", "12_re", "12_im", "13_re", "13_im", "23_re", "23_im")
_F32 = np.dtype("<f4")


class RasterError(ValueError):
    pass


def _prefix(basis: str) -> str:
    return "T" if basis == PAULI else "C"


def read_kv(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise RasterError(f"{path}: malformed line {line!r} (expected key=value)")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_kv(path, values: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in values.items()))


def write_t3(field: CovarianceField, path) -> Path:
    """Write a 3x3 field as nine float32 channel files plus header."""
    if field.dim != 3:
        raise RasterError("only 3x3 matrices can be written as T3/C3")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    p = _prefix(field.basis)
    d = field.data
    planes = {
        "11": d[:, :, 0, 0].real, "22": d[:, :, 1, 1].real, "33": d[:, :, 2, 2].real,
        "12_re": d[:, :, 0, 1].real, "12_im": d[:, :, 0, 1].imag,
        "13_re": d[:, :, 0, 2].real, "13_im": d[:, :, 0, 2].imag,
        "23_re": d[:, :, 1, 2].real, "23_im": d[:, :, 1, 2].imag,
    }
    for ch in CHANNELS:
        np.ascontiguousarray(planes[ch], dtype=_F32).tofile(path / f"{p}{ch}.bin")
    write_kv(path / "header.txt", {"nrows": field.height, "ncols": field.width, "basis": field.basis, "looks": field.looks})
    return path


def read_t3(path) -> CovarianceField:
    """Read a T3/C3 directory.

    Missing or truncated channels and non-finite values raise ``RasterError``
    naming the channel.  Negative diagonal powers are clamped to zero and
    counted in a warning.
    """
    path = Path(path)
    hdr_path = path / "header.txt"
    if not hdr_path.exists():
        raise RasterError(f"{path}: missing header.txt")
    hdr = read_kv(hdr_path)
    try:
        nrows, ncols = int(hdr["nrows"]), int(hdr["ncols"])
    except (KeyError, ValueError) as exc:
        raise RasterError(f"{hdr_path}: nrows/ncols missing or invalid") from exc
    basis = hdr.get("basis", PAULI)
    if basis not in (PAULI, LEXICOGRAPHIC):
        raise RasterError(f"{hdr_path}: unknown basis {basis!r}")
    looks = int(hdr.get("looks", 1))
    p = _prefix(basis)
    expected = 4 * nrows * ncols
    planes = {}
    for ch in CHANNELS:
        name = f"{p}{ch}"
        f = path / f"{name}.bin"
        if not f.exists():
            raise RasterError(f"{path}: missing channel {name}")
        size = f.stat().st_size
        if size != expected:
            raise RasterError(f"{path}: channel {name} has {size} bytes, expected {expected}")
        a = np.fromfile(f, dtype=_F32).reshape(nrows, ncols)
        if not np.all(np.isfinite(a)):
            raise RasterError(f"{path}: channel {name} contains non-finite values")
        planes[ch] = a.astype(np.float64)
    clamped = 0
    for ch in ("11", "22", "33"):
        neg = planes[ch] < 0
        clamped += int(neg.sum())
        planes[ch][neg] = 0.0
    if clamped:
        log.warning("%s: clamped %d negative diagonal values to 0", path, clamped)
    data = np.zeros((nrows, ncols, 3, 3), dtype=np.complex128)
    data[:, :, 0, 0] = planes["11"]
    data[:, :, 1, 1] = planes["22"]
    data[:, :, 2, 2] = planes["33"]
    for (i, j), key in (((0, 1), "12"), ((0, 2), "13"), ((1, 2), "23")):
        z = planes[key + "_re"] + 1j * planes[key + "_im"]
        data[:, :, i, j] = z
        data[:, :, j, i] = np.conj(z)
    return CovarianceField(data, looks=looks, basis=basis, meta={"clamped": clamped})


def write_plane(plane: np.ndarray, path, name: str) -> None:
    """A single real float32 raster with its own header (e.g. H or alpha)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(plane, dtype=_F32).tofile(path / f"{name}.bin")
    write_kv(path / f"{name}.hdr", {"nrows": plane.shape[0], "ncols": plane.shape[1]})


def read_plane(path, name: str) -> np.ndarray:
    path = Path(path)
    hdr = read_kv(path / f"{name}.hdr")
    return np.fromfile(path / f"{name}.bin", dtype=_F32).reshape(int(hdr["nrows"]), int(hdr["ncols"])).astype(float)


# --------------------------------------------------------------------------
# label maps and class configs


def write_labels(labels: np.ndarray, path) -> None:
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 255:
        raise RasterError("labels must fit in 8 bits")
    h, w = labels.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())


def read_labels(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise RasterError(f"{path}: too short for a label header")
    w, h = struct.unpack("<II", raw[:8])
    if len(raw) != 8 + w * h:
        raise RasterError(f"{path}: {len(raw) - 8} label bytes, expected {w * h}")
    return np.frombuffer(raw, dtype=np.uint8, offset=8).reshape(h, w).copy()


def write_classes(classes: np.ndarray, path, names=None, deterministic=None) -> None:
    """One class per line: ``T11 T22 T33 T12re T12im T13re T13im T23re T23im [det] [# name]``."""
    lines = ["# T11 T22 T33 T12_re T12_im T13_re T13_im T23_re T23_im [det]"]
    for k, m in enumerate(np.asarray(classes)):
        vals = [m[0, 0].real, m[1, 1].real, m[2, 2].real, m[0, 1].real, m[0, 1].imag,
                m[0, 2].real, m[0, 2].imag, m[1, 2].real, m[1, 2].imag]
        line = " ".join(repr(float(v)) for v in vals)
        if deterministic is not None and deterministic[k]:
            line += " det"
        if names:
            line += f"  # {names[k]}"
        lines.append(line)
    Path(path).write_text("\n".join(lines) + "\n")


def read_classes(path) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Returns (matrices (K,3,3), names, deterministic flags)."""
    mats, names, det = [], [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body, _, comment = line.partition("#")
        tokens = body.split()
        if not tokens:
            continue
        flag = tokens[-1].lower() == "det"
        if flag:
            tokens = tokens[:-1]
        if len(tokens) != 9:
            raise RasterError(f"{path}:{lineno}: expected 9 numbers, got {len(tokens)}")
        try:
            v = [float(t) for t in tokens]
        except ValueError as exc:
            raise RasterError(f"{path}:{lineno}: {exc}") from exc
        m = np.array(
            [[v[0], v[3] + 1j * v[4], v[5] + 1j * v[6]],
             [v[3] - 1j * v[4], v[1], v[7] + 1j * v[8]],
             [v[5] - 1j * v[6], v[7] - 1j * v[8], v[2]]],
            dtype=np.complex128,
        )
        if np.linalg.eigvalsh(m).min() < -1e-12 * max(1.0, abs(m).max()):
            raise RasterError(f"{path}:{lineno}: class matrix is not positive semidefinite")
        mats.append(m)
        names.append(comment.strip() or f"class{len(mats) - 1}")
        det.append(flag)
    if not mats:
        raise RasterError(f"{path}: no class matrices")
    return np.stack(mats), names, np.array(det)


def write_zones(zones: dict[str, Rect], path) -> None:
    lines = ["# name row0 col0 row1 col1 (half-open)"]
    lines += [f"{n} {r.row0} {r.col0} {r.row1} {r.col1}" for n, r in zones.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_zones(path) -> dict[str, Rect]:
    zones = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise RasterError(f"{path}:{lineno}: expected 'name row0 col0 row1 col1'")
        zones[tokens[0]] = Rect(*(int(t) for t in tokens[1:]))
    return zones


# --------------------------------------------------------------------------
# scene bundles


def save_bundle(field: CovarianceField, labels: LabelMap | None, path, record: dict | None = None) -> Path:
    """Directory with ``field/`` plus, when known, labels, classes, zones and seed record."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_t3(field, path / "field")
    if labels is not None:
        write_labels(labels.labels, path / "labels.lbl")
        write_classes(labels.classes, path / "classes.txt", labels.names, labels.deterministic_classes())
        if labels.zones:
            write_zones(labels.zones, path / "zones.txt")
    write_kv(path / "bundle.txt", dict(record or {}))
    return path


def load_labels(labels_path, classes_path, zones_path=None) -> LabelMap:
    lab = read_labels(labels_path)
    classes, names, det_classes = read_classes(classes_path)
    zones = read_zones(zones_path) if zones_path and Path(zones_path).exists() else {}
    if lab.size and int(lab.max()) >= len(classes):
        raise RasterError(f"label {int(lab.max())} has no class in {classes_path}")
    return LabelMap(lab, classes, det_classes[lab], names, zones)


def load_bundle(path) -> tuple[CovarianceField, LabelMap | None, dict]:
    path = Path(path)
    field = read_t3(path / "field")
    labels = None
    if (path / "labels.lbl").exists() and (path / "classes.txt").exists():
        labels = load_labels(path / "labels.lbl", path / "classes.txt", path / "zones.txt")
    record = read_kv(path / "bundle.txt") if (path / "bundle.txt").exists() else {}
    return field, labels, record


def load_field(path) -> CovarianceField:
    """Accept either a bundle directory or a bare T3/C3 directory."""
    path = Path(path)
    if (path / "header.txt").exists():
        return read_t3(path)
    if (path / "field" / "header.txt").exists():
        return read_t3(path / "field")
    raise RasterError(f"{path}: neither a matrix directory nor a scene bundle")


# --------------------------------------------------------------------------
# images


def _gray(x: np.ndarray) -> np.ndarray:
    return np.repeat(x[..., None], 3, axis=-1)


COLORMAPS = {"gray": _gray}


def colorize(plane: np.ndarray, cmap: str = "gray", vmin: float | None = None, vmax: float | None = None) -> np.ndarray:
    """Map a real plane to RGB floats in [0, 1].

    ``gray`` is linear black-to-white between vmin and vmax (defaults: the
    plane's min and max); any other name is looked up in matplotlib.
    """
    plane = np.asarray(plane, dtype=float)
    if not np.all(np.isfinite(plane)):
        raise ValueError("colorize: non-finite values")
    lo = float(plane.min()) if vmin is None else vmin
    hi = float(plane.max()) if vmax is None else vmax
    x = np.zeros_like(plane) if hi <= lo else np.clip((plane - lo) / (hi - lo), 0.0, 1.0)
    if cmap in COLORMAPS:
        return COLORMAPS[cmap](x)
    from matplotlib import colormaps

    return colormaps[cmap](x)[..., :3]


def export_png(image: np.ndarray, path, cmap: str = "gray", vmin=None, vmax=None) -> Path:
    """Write an 8-bit PNG from RGB floats in [0, 1] ``(H, W, 3)`` or a real plane."""
    from PIL import Image

    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = colorize(image, cmap, vmin, vmax)
    if image.ndim != 3 or image.shape[-1] != 3:
        raise ValueError("export_png expects (H, W, 3) RGB or a 2-D plane")
    if not np.all(np.isfinite(image)):
        raise ValueError("export_png: non-finite values")
    u8 = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    Image.fromarray(u8, mode="RGB").save(path, format="PNG", optimize=False)
    return path


def write_histogram_csv(counts: np.ndarray, h_edges: np.ndarray, a_edges: np.ndarray, path) -> None:
    """Long format: one row per bin with its edges and count."""
    rows = ["h_lo,h_hi,alpha_lo_deg,alpha_hi_deg,count"]
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            rows.append(f"{h_edges[i]:.6g},{h_edges[i + 1]:.6g},{a_edges[j]:.6g},{a_edges[j + 1]:.6g},{int(counts[i, j])}")
    Path(path).write_text("\n".join(rows) + "\n")
