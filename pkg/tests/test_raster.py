import logging
import struct

import numpy as np
import pytest

from polsarblf import raster
from polsarblf.field import LEXICOGRAPHIC, CovarianceField, Rect
from polsarblf.speckle import build_scene, default_scene

from conftest import random_hpd


def _field(rng, h=5, w=4, **kw):
    return CovarianceField(np.stack([[random_hpd(rng) for _ in range(w)] for _ in range(h)]), looks=4, **kw)


def test_t3_round_trip_float32(tmp_path, rng):
    f = _field(rng)
    raster.write_t3(f, tmp_path / "t3")
    names = sorted(p.name for p in (tmp_path / "t3").iterdir())
    assert "T12_im.bin" in names and "header.txt" in names and len(names) == 10
    g = raster.read_t3(tmp_path / "t3")
    assert g.looks == 4 and g.shape == (5, 4)
    np.testing.assert_allclose(g.data, f.data, rtol=1e-6, atol=1e-6 * np.abs(f.data).max())
    expect = f.data.astype(np.complex64).astype(np.complex128)
    np.testing.assert_array_equal(g.data[..., 0, 1], expect[..., 0, 1])


def test_little_endian_row_major_layout(tmp_path):
    data = np.zeros((2, 3, 3, 3), dtype=complex)
    data[0, 2, 0, 0] = 7.0
    raster.write_t3(CovarianceField(data), tmp_path)
    raw = (tmp_path / "T11.bin").read_bytes()
    assert len(raw) == 24
    assert struct.unpack("<f", raw[8:12])[0] == 7.0


def test_lexicographic_prefix(tmp_path, rng):
    raster.write_t3(_field(rng, basis=LEXICOGRAPHIC), tmp_path)
    assert (tmp_path / "C22.bin").exists()
    assert raster.read_t3(tmp_path).basis == LEXICOGRAPHIC


def test_errors_name_the_channel(tmp_path, rng):
    raster.write_t3(_field(rng), tmp_path)
    (tmp_path / "T13_re.bin").write_bytes(b"\0" * 8)
    with pytest.raises(raster.RasterError, match="T13_re"):
        raster.read_t3(tmp_path)
    (tmp_path / "T13_re.bin").unlink()
    with pytest.raises(raster.RasterError, match="missing channel T13_re"):
        raster.read_t3(tmp_path)


def test_nan_is_rejected(tmp_path, rng):
    raster.write_t3(_field(rng), tmp_path)
    a = np.fromfile(tmp_path / "T23_im.bin", dtype="<f4")
    a[3] = np.nan
    a.tofile(tmp_path / "T23_im.bin")
    with pytest.raises(raster.RasterError, match="T23_im.*non-finite"):
        raster.read_t3(tmp_path)


def test_negative_diagonal_clamped_with_warning(tmp_path, rng, caplog):
    raster.write_t3(_field(rng), tmp_path)
    a = np.fromfile(tmp_path / "T22.bin", dtype="<f4")
    a[:2] = -1.0
    a.tofile(tmp_path / "T22.bin")
    with caplog.at_level(logging.WARNING):
        g = raster.read_t3(tmp_path)
    assert g.meta["clamped"] == 2 and np.all(g.data[..., 1, 1].real >= 0)
    assert "clamped 2" in caplog.text


def test_header_errors(tmp_path):
    with pytest.raises(raster.RasterError, match="header"):
        raster.read_t3(tmp_path)
    (tmp_path / "header.txt").write_text("nrows=2\nbogus line\n")
    with pytest.raises(raster.RasterError, match="malformed"):
        raster.read_t3(tmp_path)


def test_labels_round_trip(tmp_path):
    lab = np.arange(12, dtype=np.uint8).reshape(3, 4)
    raster.write_labels(lab, tmp_path / "l.lbl")
    raw = (tmp_path / "l.lbl").read_bytes()
    assert struct.unpack("<II", raw[:8]) == (4, 3)
    np.testing.assert_array_equal(raster.read_labels(tmp_path / "l.lbl"), lab)
    (tmp_path / "bad.lbl").write_bytes(raw[:-1])
    with pytest.raises(raster.RasterError):
        raster.read_labels(tmp_path / "bad.lbl")


def test_class_config_round_trip(tmp_path):
    labels = default_scene(64)
    raster.write_classes(labels.classes, tmp_path / "c.txt", labels.names, labels.deterministic_classes())
    classes, names, det = raster.read_classes(tmp_path / "c.txt")
    np.testing.assert_allclose(classes, labels.classes)
    assert names == labels.names and det.tolist() == [False] * 4 + [True]


@pytest.mark.parametrize(
    "text, match",
    [("1 2 3\n", "expected 9"), ("1 0 0 0 0 0 0 0 x\n", "could not convert"), ("1 1 1 5 0 0 0 0 0\n", "semidefinite"), ("# only\n", "no class")],
)
def test_invalid_class_config(tmp_path, text, match):
    (tmp_path / "c.txt").write_text(text)
    with pytest.raises(raster.RasterError, match=match):
        raster.read_classes(tmp_path / "c.txt")


def test_bundle_round_trip(tmp_path):
    labels = default_scene(64)
    f, _ = build_scene(labels, 4, 9)
    raster.save_bundle(f, labels, tmp_path / "b", {"seed": 9})
    g, lab, rec = raster.load_bundle(tmp_path / "b")
    np.testing.assert_array_equal(lab.labels, labels.labels)
    np.testing.assert_array_equal(lab.deterministic, labels.deterministic)
    assert lab.zones == labels.zones and rec["seed"] == "9"
    assert raster.load_field(tmp_path / "b").shape == (64, 64)
    with pytest.raises(raster.RasterError):
        raster.load_field(tmp_path)


def test_zones_file(tmp_path):
    zones = {"a": Rect(0, 1, 5, 6), "b": Rect(2, 2, 3, 3)}
    raster.write_zones(zones, tmp_path / "z.txt")
    assert raster.read_zones(tmp_path / "z.txt") == zones


def test_png_export(tmp_path):
    from PIL import Image

    raster.export_png(np.linspace(0, 1, 12).reshape(3, 4), tmp_path / "g.png")
    img = np.asarray(Image.open(tmp_path / "g.png"))
    assert img.shape == (3, 4, 3) and img[0, 0, 0] == 0 and img[-1, -1, 0] == 255
    with pytest.raises(ValueError):
        raster.export_png(np.full((2, 2), np.nan), tmp_path / "n.png")
