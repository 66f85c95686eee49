"""Dissimilarities between covariance matrices used as radiometric proximity.

Three choices:

* symmetrized Kullback-Leibler divergence between zero-mean complex
  Gaussians, ``0.5 tr(A^-1 B + B^-1 A) - d``;
* affine-invariant geodesic distance ``||log(A^-1/2 B A^-1/2)||_F``;
* log-Euclidean distance ``||log A - log B||_F``.

The filter evaluates each distance for every (pixel, neighbour) pair, so the
per-matrix transforms (inverse, inverse square root, logarithm) are computed
once per pixel per iteration by :func:`prepare_field` and reused.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np

from . import hermitian as hm


class DistanceKind(enum.IntEnum):
    KULLBACK_LEIBLER = 0
    AFFINE_INVARIANT = 1
    LOG_EUCLIDEAN = 2

    @classmethod
    def parse(cls, name) -> "DistanceKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {
            "kl": cls.KULLBACK_LEIBLER,
            "kullback_leibler": cls.KULLBACK_LEIBLER,
            "ai": cls.AFFINE_INVARIANT,
            "affine_invariant": cls.AFFINE_INVARIANT,
            "le": cls.LOG_EUCLIDEAN,
            "log_euclidean": cls.LOG_EUCLIDEAN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown distance {name!r}; expected one of kl, ai, le") from None

    @property
    def short(self) -> str:
        return {0: "kl", 1: "ai", 2: "le"}[int(self)]


def _trace_product(x, y) -> np.ndarray:
    return np.einsum("...ij,...ji->...", x, y).real


def d_kl(a, b, inv_a=None, inv_b=None):
    """Symmetrized Kullback-Leibler divergence between N(0, a) and N(0, b).

    Not a metric: no triangle inequality.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if inv_a is None:
        inv_a = hm.matrix_inv(a)
    if inv_b is None:
        inv_b = hm.matrix_inv(b)
    d = a.shape[-1]
    # sum the two traces in a fixed order so the expression is symmetric bit-for-bit
    t1 = _trace_product(inv_a, b)
    t2 = _trace_product(inv_b, a)
    lo = np.minimum(t1, t2)
    hi = np.maximum(t1, t2)
    out = 0.5 * (lo + hi) - d
    return float(out) if np.ndim(out) == 0 else out


def d_ai(a, b):
    """Affine-invariant Riemannian distance.

    ``a^-1/2`` comes from the eigendecomposition of ``a``; the congruence
    ``a^-1/2 b a^-1/2`` is re-Hermitianized before its logarithm.
    """
    a_isqrt = hm.matrix_power(a, -0.5)
    m = hm.hermitianize(a_isqrt @ np.asarray(b, dtype=np.complex128) @ a_isqrt)
    return hm.frobenius_norm(hm.matrix_log(m))


def d_le(log_a, log_b):
    """Log-Euclidean distance from two precomputed matrix logarithms."""
    diff = np.asarray(log_a) - np.asarray(log_b)
    return hm.frobenius_norm(diff)


def distance(a, b, kind) -> float:
    """Convenience dispatcher taking the raw matrices."""
    kind = DistanceKind.parse(kind)
    if kind == DistanceKind.KULLBACK_LEIBLER:
        return d_kl(a, b)
    if kind == DistanceKind.AFFINE_INVARIANT:
        return d_ai(a, b)
    return d_le(hm.matrix_log(a), hm.matrix_log(b))


@dataclass(frozen=True)
class PreparedPixel:
    """One matrix plus exactly the transforms its distance needs.

    ``inv_sqrt_sigma`` is what the affine-invariant path consumes;
    ``log_sigma`` serves the log-Euclidean path, ``inv_sigma`` the KL one.
    """

    sigma: np.ndarray
    kind: DistanceKind
    recip_condition: float
    rank_deficient: bool
    log_sigma: np.ndarray | None = None
    inv_sigma: np.ndarray | None = None
    inv_sqrt_sigma: np.ndarray | None = None


def prepare_pixel(sigma, kind, cond_threshold: float = 1e-6) -> PreparedPixel:
    kind = DistanceKind.parse(kind)
    sigma = np.asarray(sigma, dtype=np.complex128)
    es = hm.eig_hermitian(sigma)
    rc = float(hm.reciprocal_condition(es.values))
    if rc < cond_threshold:
        return PreparedPixel(sigma, kind, rc, True)
    vals, vecs = es.values, es.vectors
    spectral = lambda f: hm.hermitianize((vecs * f) @ vecs.conj().T)  # noqa: E731
    if kind == DistanceKind.KULLBACK_LEIBLER:
        return PreparedPixel(sigma, kind, rc, False, inv_sigma=spectral(1.0 / vals))
    if kind == DistanceKind.LOG_EUCLIDEAN:
        return PreparedPixel(sigma, kind, rc, False, log_sigma=spectral(np.log(vals)))
    return PreparedPixel(sigma, kind, rc, False, inv_sqrt_sigma=spectral(vals**-0.5))


def pair_distance(a: PreparedPixel, b: PreparedPixel) -> float:
    """Distance between two prepared, full-rank pixels of the same kind."""
    if a.rank_deficient or b.rank_deficient:
        raise ValueError("distance involving a rank-deficient pixel is undefined")
    if a.kind == DistanceKind.KULLBACK_LEIBLER:
        return d_kl(a.sigma, b.sigma, a.inv_sigma, b.inv_sigma)
    if a.kind == DistanceKind.LOG_EUCLIDEAN:
        return d_le(a.log_sigma, b.log_sigma)
    m = hm.hermitianize(a.inv_sqrt_sigma @ b.sigma @ a.inv_sqrt_sigma)
    return hm.frobenius_norm(hm.matrix_log(m))


# --------------------------------------------------------------------------
# whole-image preparation


@dataclass(frozen=True)
class PreparedField:
    """Per-pixel cache for one filter iteration.

    ``aux`` holds inverse (KL), inverse square root (AI) or logarithm (LE);
    it is zero where ``rank_deficient`` is set.
    """

    kind: DistanceKind
    aux: np.ndarray
    recip_condition: np.ndarray
    rank_deficient: np.ndarray


@numba.njit(cache=True, parallel=True)
def _prepare_kernel(flat, kind, threshold, aux, rcond, deficient):
    n = flat.shape[0]
    for b in numba.prange(n):
        values = np.empty(3)
        vectors = np.empty((3, 3), dtype=np.complex128)
        hm.eig_one(flat[b], values, vectors)
        hi = values[0]
        lo = values[2]
        rc = lo / hi if (lo > 0.0 and hi > 0.0) else 0.0
        rcond[b] = rc
        if rc < threshold:
            deficient[b] = True
            continue
        deficient[b] = False
        f = np.empty(3)
        for k in range(3):
            if kind == 0:
                f[k] = 1.0 / values[k]
            elif kind == 1:
                f[k] = 1.0 / np.sqrt(values[k])
            else:
                f[k] = np.log(values[k])
        hm.spectral_apply(values, vectors, f, aux[b])


def prepare_field(data: np.ndarray, kind, cond_threshold: float = 1e-6) -> PreparedField:
    """Prepare every pixel of an ``(H, W, 3, 3)`` array."""
    kind = DistanceKind.parse(kind)
    data = np.asarray(data, dtype=np.complex128)
    if data.shape[-2:] != (3, 3):
        raise ValueError("prepare_field expects 3x3 matrices")
    lead = data.shape[:-2]
    flat = np.ascontiguousarray(data.reshape(-1, 3, 3))
    aux = np.zeros_like(flat)
    rcond = np.empty(flat.shape[0])
    deficient = np.empty(flat.shape[0], dtype=np.bool_)
    _prepare_kernel(flat, int(kind), float(cond_threshold), aux, rcond, deficient)
    return PreparedField(kind, aux.reshape(data.shape), rcond.reshape(lead), deficient.reshape(lead))
