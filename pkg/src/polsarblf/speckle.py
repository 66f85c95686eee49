"""Monte Carlo multi-look speckle and the synthetic test scenes.

Each speckled pixel is the sample covariance of ``L`` single-look vectors
``k = A v`` where ``A A^H = T`` and ``v`` is circular complex normal with
identity covariance (real and imaginary parts each of variance 1/2).
Pixels are independent; there is no spatial correlation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import defaults
from . import hermitian as hm
from .field import PAULI, CovarianceField, Rect

# Mean coherency matrices of the four homogeneous zones
# (T11, T22, T33, T12, T13, T23).
ZONE_ELEMENTS = {
    1: (8.03, 2.64, 0.55, -2.19 - 2.23j, -0.17 - 0.15j, 0.11 - 0.03j),
    2: (75.21, 48.03, 45.82, 4.86 + 3.24j, 2.30 + 0.22j, -0.32 - 1.69j),
    3: (13.71, 13.82, 1.55, 2.41 + 5.86j, -0.25 - 0.29j, 0.89 - 0.16j),
    4: (25.71, 3.79, 3.40, 2.67 - 3.48j, -2.94 - 1.56j, -0.57 - 0.86j),
}
ZONE_MATRICES = {k: hm.from_elements(*v) for k, v in ZONE_ELEMENTS.items()}

# Stand-in for a building layover: strong double bounce, full rank.  Not a
# measured value; its brightness is set so that a 7x7 boxcar on the default
# scene gives an edge error near 54.5, the reference boxcar figure.
LAYOVER_ELEMENTS = (80.0, 800.0, 40.0, 30.0 + 16.0j, 2.0 - 2.0j, 12.0 + 6.0j)
LAYOVER_MATRIX = hm.from_elements(*LAYOVER_ELEMENTS)

TRIHEDRAL = np.diag([1.0, 0.0, 0.0]).astype(np.complex128)
DIHEDRAL = np.diag([0.0, 1.0, 0.0]).astype(np.complex128)


@dataclass
class LabelMap:
    """Ground truth: per-pixel class ids, class matrices, noiseless pixels."""

    labels: np.ndarray
    classes: np.ndarray
    deterministic: np.ndarray | None = None
    names: list[str] = field(default_factory=list)
    zones: dict[str, Rect] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        self.classes = np.asarray(self.classes, dtype=np.complex128)
        if self.labels.ndim != 2:
            raise ValueError("labels must be a 2-D array")
        if self.classes.ndim != 3 or self.classes.shape[1:] != (3, 3):
            raise ValueError("classes must have shape (K, 3, 3)")
        if self.labels.size and int(self.labels.max()) >= len(self.classes):
            raise ValueError(f"label {int(self.labels.max())} has no class matrix (K={len(self.classes)})")
        if self.deterministic is None:
            self.deterministic = np.zeros(self.labels.shape, dtype=bool)
        self.deterministic = np.asarray(self.deterministic, dtype=bool)
        if self.deterministic.shape != self.labels.shape:
            raise ValueError("deterministic mask must match the label shape")
        if not self.names:
            self.names = [f"class{k}" for k in range(len(self.classes))]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def truth(self, looks: int = 1) -> CovarianceField:
        return CovarianceField(self.classes[self.labels], looks=looks, basis=PAULI)

    def deterministic_classes(self) -> np.ndarray:
        """Per-class flag: True if every pixel of the class is noiseless."""
        out = np.zeros(self.n_classes, dtype=bool)
        for k in range(self.n_classes):
            sel = self.labels == k
            out[k] = bool(sel.any() and self.deterministic[sel].all())
        return out


def circular_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Complex normal samples with E[|z|^2] = 1 and independent re/im halves."""
    parts = rng.standard_normal(tuple(shape) + (2,))
    return (parts[..., 0] + 1j * parts[..., 1]) * np.sqrt(0.5)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by the 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF))


def simulate_pixel(T, looks: int, rng: np.random.Generator) -> np.ndarray:
    """One L-look sample covariance drawn around ``T``."""
    if looks < 1:
        raise ValueError("looks must be >= 1")
    A = hm.matrix_sqrt(T)
    v = circular_normal(rng, (looks, A.shape[-1]))
    k = v @ A.T
    return hm.hermitianize(k.T @ k.conj() / looks)


def simulate_matrices(truth: np.ndarray, looks: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized simulation for a stack ``(..., 3, 3)`` of true matrices."""
    if looks < 1:
        raise ValueError("looks must be >= 1")
    truth = np.asarray(truth, dtype=np.complex128)
    A = hm.matrix_sqrt(truth)
    v = circular_normal(rng, truth.shape[:-2] + (looks, truth.shape[-1]))
    k = np.einsum("...ij,...lj->...li", A, v)
    sample = np.einsum("...li,...lj->...ij", k, k.conj()) / looks
    return hm.hermitianize(sample)


def build_scene(labels: LabelMap, looks: int = defaults.LOOKS, seed: int = 0) -> tuple[CovarianceField, LabelMap]:
    """Speckle every stochastic pixel; copy deterministic pixels verbatim.

    The whole image is drawn in one vectorized call from a Philox stream keyed
    by ``seed``, in raster order, so the result depends only on
    ``(seed, shape, looks, classes)``.
    """
    rng = make_rng(seed)
    h, w = labels.shape
    d = labels.classes.shape[-1]
    factors = hm.matrix_sqrt(labels.classes)
    v = circular_normal(rng, (h, w, looks, d))
    A = factors[labels.labels]
    k = np.einsum("...ij,...lj->...li", A, v)
    data = hm.hermitianize(np.einsum("...li,...lj->...ij", k, k.conj()) / looks)
    det = labels.deterministic
    data[det] = labels.classes[labels.labels[det]]
    out = CovarianceField(data, looks=looks, basis=PAULI, meta={"seed": int(seed)})
    return out, labels


def _polygon_mask(shape, vertices) -> np.ndarray:
    """Even-odd point-in-polygon test at pixel centres (vertices in (x, y) pixels)."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    inside = np.zeros(shape, dtype=bool)
    n = len(vertices)
    for k in range(n):
        x1, y1 = vertices[k]
        x2, y2 = vertices[(k + 1) % n]
        crosses = (y1 > yy) != (y2 > yy)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (yy - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (xx < xint)
    return inside


def default_scene(size: int = defaults.SCENE_SIZE) -> LabelMap:
    """Four-zone ground truth with two parallel noiseless lines near the top left.

    Zone 1 fills the background, zone 2 is an ellipse, zone 3 a quadrilateral
    and zone 4 the region under a sinusoidal boundary.  Coordinates scale
    with ``size``.  Each zone carries the largest evaluation rectangle that
    stays about 24 px (at 512) from any other class and 16 px from the border.
    """
    n = int(size)
    if n < 64:
        raise ValueError("default scene needs size >= 64")
    yy, xx = (np.mgrid[0:n, 0:n] + 0.5) / n
    labels = np.zeros((n, n), dtype=np.uint8)

    ellipse = ((xx - 0.72) / 0.22) ** 2 + ((yy - 0.28) / 0.18) ** 2 <= 1.0
    labels[ellipse] = 1

    quad = _polygon_mask((n, n), [(0.06 * n, 0.52 * n), (0.44 * n, 0.47 * n), (0.50 * n, 0.93 * n), (0.10 * n, 0.96 * n)])
    labels[quad] = 2

    wave = (yy > 0.64 + 0.05 * np.sin(2.0 * np.pi * 3.0 * xx)) & (xx > 0.56)
    labels[wave & ~quad] = 3

    # two parallel diagonal lines, 2 px thick, near the top-left corner
    det = np.zeros((n, n), dtype=bool)
    thick = max(1.0, 2.0 * n / 512) / n
    for offset in (0.0, 0.035):
        along = (xx - 0.05) + (yy - 0.05)
        across = (yy - 0.05) - (xx - 0.05) - offset
        det |= (np.abs(across) * np.sqrt(0.5) <= thick / 2) & (along >= 0.0) & (along <= 0.30)
    labels[det] = 4

    classes = np.stack([ZONE_MATRICES[1], ZONE_MATRICES[2], ZONE_MATRICES[3], ZONE_MATRICES[4], LAYOVER_MATRIX])
    zones = {
        "zone1": _rect(n, 0.035, 0.25, 0.42, 0.45),
        "zone2": _rect(n, 0.19, 0.595, 0.37, 0.845),
        "zone3": _rect(n, 0.56, 0.145, 0.89, 0.40),
        "zone4": _rect(n, 0.74, 0.61, 0.965, 0.965),
    }
    return LabelMap(labels, classes, det, ["zone1", "zone2", "zone3", "zone4", "layover"], zones)


def _rect(n, r0, c0, r1, c1) -> Rect:
    return Rect(int(round(r0 * n)), int(round(c0 * n)), int(round(r1 * n)), int(round(c1 * n)))


def homogeneous_scene(matrix, size: int) -> LabelMap:
    labels = np.zeros((size, size), dtype=np.uint8)
    return LabelMap(labels, np.asarray(matrix)[None], None, ["zone"], {"zone": Rect(0, 0, size, size)})


def rank1_scene(background=None, looks: int = defaults.LOOKS, seed: int = 0, size: int = 64) -> tuple[CovarianceField, LabelMap]:
    """Speckled background with a noiseless trihedral dot and dihedral line."""
    if background is None:
        background = ZONE_MATRICES[1]
    background = np.asarray(background, dtype=np.complex128)
    if np.linalg.eigvalsh(background).min() <= 0:
        raise ValueError("background must be positive definite")
    n = int(size)
    if n < 32:
        raise ValueError("rank1 scene needs size >= 32")
    power = float(np.trace(background).real)
    labels = np.zeros((n, n), dtype=np.uint8)
    det = np.zeros((n, n), dtype=bool)
    dot = (n // 4, n // 4)
    labels[dot] = 1
    det[dot] = True
    row = (3 * n) // 4
    labels[row, n // 8: n - n // 8] = 2
    det[row, n // 8: n - n // 8] = True
    classes = np.stack([background, power * TRIHEDRAL, power * DIHEDRAL])
    zones = {"background": Rect(n // 2 - n // 8, n // 2, n // 2 + n // 8, n - n // 8)}
    truth = LabelMap(labels, classes, det, ["background", "trihedral", "dihedral"], zones)
    return build_scene(truth, looks, seed)
