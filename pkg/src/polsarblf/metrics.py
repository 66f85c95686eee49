"""Quality measures for filtered covariance images.

* ``err_glob``: per-element RMS reconstruction error over the whole image;
* ``err_edge``: the same restricted to pixels touching another class;
* ``enl``: mean^2 / variance of one channel over a homogeneous region.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .field import CovarianceField, Rect
from .polarimetry import h_alpha_field


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, CovarianceField) else np.asarray(x)


def _sq_err(truth, estimate) -> np.ndarray:
    t = _data(truth)
    e = _data(estimate)
    if t.shape != e.shape:
        raise ValueError(f"shape mismatch: truth {t.shape} vs estimate {e.shape}")
    diff = e - t
    return np.sum(diff.real**2 + diff.imag**2, axis=(-2, -1))


def err_glob(truth, estimate) -> float:
    """sqrt( sum_i ||T^_i - T_i||_F^2 / (N d^2) )."""
    sq = _sq_err(truth, estimate)
    d = _data(truth).shape[-1]
    return float(np.sqrt(sq.sum() / (sq.size * d * d)))


def err_edge(truth, estimate, mask) -> float:
    sq = _sq_err(truth, estimate)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != sq.shape:
        raise ValueError("mask shape does not match the image")
    count = int(mask.sum())
    if count == 0:
        raise ValueError("err_edge: empty edge mask")
    d = _data(truth).shape[-1]
    return float(np.sqrt(sq[mask].sum() / (count * d * d)))


def edge_mask(labels) -> np.ndarray:
    """True where any of the 8 neighbours has a different label."""
    lab = np.asarray(getattr(labels, "labels", labels))
    h, w = lab.shape
    out = np.zeros((h, w), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            a = lab[max(0, di): h + min(0, di), max(0, dj): w + min(0, dj)]
            b = lab[max(0, -di): h + min(0, -di), max(0, -dj): w + min(0, -dj)]
            out[max(0, -di): h + min(0, -di), max(0, -dj): w + min(0, -dj)] |= a != b
    return out


def _region(region, shape) -> np.ndarray:
    if isinstance(region, Rect):
        return region.mask(shape)
    if region is None:
        return np.ones(shape, dtype=bool)
    m = np.asarray(region, dtype=bool)
    if m.shape != shape:
        raise ValueError("region mask does not match the image")
    return m


def enl(field, region=None, channel: tuple[int, int] = (0, 0)) -> float:
    """Equivalent number of looks, unbiased variance; +inf for a constant region.

    ``field`` is a CovarianceField or a real 2-D plane.
    """
    if isinstance(field, CovarianceField):
        plane = field.channel(*channel)
        if channel[0] != channel[1]:
            plane = np.abs(plane)
    else:
        plane = np.asarray(field, dtype=float)
    x = plane[_region(region, plane.shape)]
    if x.size < 2:
        raise ValueError("enl needs at least two pixels")
    mu = x.mean()
    var = x.var(ddof=1)
    if var == 0.0:
        return float("inf")
    return float(mu * mu / var)


ELEMENTS = ("T11", "T22", "T33", "T12", "T13", "T23")
_IDX = {"T11": (0, 0), "T22": (1, 1), "T33": (2, 2), "T12": (0, 1), "T13": (0, 2), "T23": (1, 2)}


@dataclass
class ZoneStats:
    entropy: float
    mean_alpha: float
    elements: dict[str, complex]
    n_pixels: int


@dataclass
class ZoneReport:
    zones: dict[str, ZoneStats] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for name, z in self.zones.items():
            row = {"zone": name, "n": z.n_pixels, "H": z.entropy, "alpha": z.mean_alpha}
            for e in ELEMENTS:
                v = z.elements[e]
                row[e] = v.real if e[1] == e[2] else v
            out.append(row)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["zone", "n", "H", "alpha_rad"] + [c for e in ELEMENTS for c in ((e,) if e[1] == e[2] else (e + "_re", e + "_im"))])
        for name, z in self.zones.items():
            vals = []
            for e in ELEMENTS:
                v = z.elements[e]
                vals += [f"{v.real:.6g}"] if e[1] == e[2] else [f"{v.real:.6g}", f"{v.imag:.6g}"]
            w.writerow([name, z.n_pixels, f"{z.entropy:.6g}", f"{z.mean_alpha:.6g}"] + vals)
        return buf.getvalue()


def zone_report(field: CovarianceField, zones: dict, halpha=None) -> ZoneReport:
    """Zone means of H, mean alpha and the six distinct T entries.

    ``zones`` maps a name to a Rect or a boolean mask.  ``halpha`` may be a
    precomputed (entropy, alpha) pair for the whole field.
    """
    if halpha is None:
        halpha = h_alpha_field(field)
    ent, alp = halpha
    rep = ZoneReport()
    for name, region in zones.items():
        m = _region(region, field.shape)
        if not m.any():
            raise ValueError(f"zone {name!r} is empty")
        elems = {e: complex(field.data[:, :, i, j][m].mean()) for e, (i, j) in _IDX.items()}
        rep.zones[name] = ZoneStats(float(np.nanmean(ent[m])), float(np.nanmean(alp[m])), elems, int(m.sum()))
    return rep


@dataclass
class QualityRow:
    method: str
    err_glob: float
    err_edge: float | None
    enl: float | None


def mean_enl(field: CovarianceField, zones: dict) -> float:
    """ENL of T11 averaged over the evaluation zones."""
    return float(np.mean([enl(field, region) for region in zones.values()]))


def quality(name: str, truth: CovarianceField, estimate: CovarianceField, mask=None, zones=None) -> QualityRow:
    return QualityRow(
        name,
        err_glob(truth, estimate),
        err_edge(truth, estimate, mask) if mask is not None else None,
        mean_enl(estimate, zones) if zones else None,
    )


def quality_table_csv(rows: list[QualityRow]) -> str:
    """Table with one column per method and rows ERR_glob, ERR_edge, ENL."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["measure"] + [r.method for r in rows])
    w.writerow(["ERR_glob"] + [f"{r.err_glob:.6g}" for r in rows])
    w.writerow(["ERR_edge"] + ["" if r.err_edge is None else f"{r.err_edge:.6g}" for r in rows])
    w.writerow(["ENL"] + ["" if r.enl is None else f"{r.enl:.6g}" for r in rows])
    return buf.getvalue()


def format_quality_table(rows: list[QualityRow]) -> str:
    width = max(10, *(len(r.method) + 2 for r in rows))
    head = f"{'':10s}" + "".join(f"{r.method:>{width}s}" for r in rows)
    lines = [head]
    for label, get in (("ERR_glob", lambda r: r.err_glob), ("ERR_edge", lambda r: r.err_edge), ("ENL", lambda r: r.enl)):
        cells = "".join(f"{'-':>{width}s}" if get(r) is None else f"{get(r):>{width}.4g}" for r in rows)
        lines.append(f"{label:10s}{cells}")
    return "\n".join(lines)
