"""Iterative bilateral filter for covariance-matrix images, and a boxcar.

Each output pixel is a convex combination of the matrices in its window.
A neighbour's raw weight is ``g(|x_i - x_0|, gamma_s) * g(d(S_i, S_0), gamma_r)``
with ``g(u, gamma) = exp(-u^2 / gamma^2)``; the centre's raw weight is replaced
by the largest neighbour weight, then all weights are normalized.  Pixels
whose reciprocal condition number falls below a threshold are never used as
neighbours and are copied through unchanged when they are the centre.

Iterations are synchronous: iterate ``n + 1`` is computed entirely from
iterate ``n``.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import Iterator

import numba
import numpy as np

from . import defaults
from . import hermitian as hm
from .distances import DistanceKind, PreparedField, PreparedPixel, pair_distance, prepare_field
from .field import CovarianceField


@dataclass(frozen=True)
class FilterConfig:
    kind: DistanceKind = DistanceKind.AFFINE_INVARIANT
    gamma_r: float = defaults.GAMMA_R["ai"]
    gamma_s: float = defaults.GAMMA_S
    window_half: int = defaults.WINDOW_HALF
    n_iter: int = defaults.N_ITER["ai"]
    cond_threshold: float = defaults.COND_THRESHOLD
    # replace the centre weight by the largest neighbour weight
    center_rule: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", DistanceKind.parse(self.kind))
        if not self.gamma_s > 0:
            raise ValueError(f"gamma_s must be > 0, got {self.gamma_s}")
        if not self.gamma_r > 0:
            raise ValueError(f"gamma_r must be > 0, got {self.gamma_r}")
        if int(self.n_iter) != self.n_iter or self.n_iter < 1:
            raise ValueError(f"n_iter must be an integer >= 1, got {self.n_iter}")
        if int(self.window_half) != self.window_half or self.window_half < 1:
            raise ValueError(f"window_half must be an integer >= 1, got {self.window_half}")
        if not self.cond_threshold > 0:
            raise ValueError(f"cond_threshold must be > 0, got {self.cond_threshold}")

    @classmethod
    def for_distance(cls, kind, **overrides) -> "FilterConfig":
        """Defaults appropriate to the chosen distance, with overrides."""
        kind = DistanceKind.parse(kind)
        base = dict(kind=kind, gamma_r=defaults.GAMMA_R[kind.short], n_iter=defaults.N_ITER[kind.short])
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    @property
    def window(self) -> int:
        return 2 * self.window_half + 1

    def with_(self, **changes) -> "FilterConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "distance": self.kind.short,
            "gamma_r": self.gamma_r,
            "gamma_s": self.gamma_s,
            "window": self.window,
            "n_iter": self.n_iter,
            "cond_threshold": self.cond_threshold,
            "center_rule": self.center_rule,
        }


def gaussian_kernel(u, gamma: float):
    """exp(-u^2 / gamma^2); gamma may be +inf (flat kernel)."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    return np.exp(-np.square(u) / (gamma * gamma)) if math.isfinite(gamma) else np.ones_like(np.asarray(u, float))


def spatial_kernel(window_half: int, gamma_s: float) -> np.ndarray:
    """Gaussian of the Euclidean pixel offset over the square window."""
    r = np.arange(-window_half, window_half + 1, dtype=float)
    dist = np.hypot(r[:, None], r[None, :])
    return np.asarray(gaussian_kernel(dist, gamma_s), dtype=float)


def bilateral_weights(window, kernel: np.ndarray, gamma_r: float, center_rule: bool = True) -> np.ndarray:
    """Normalized weights for one window of prepared pixels.

    ``window`` is a square object array of :class:`PreparedPixel` with the
    centre in the middle; ``None`` marks positions outside the image.  This
    is the readable reference for what the compiled kernel does.
    """
    window = np.asarray(window, dtype=object)
    n = window.shape[0]
    half = n // 2
    center: PreparedPixel = window[half, half]
    if center is None or center.rank_deficient:
        raise ValueError("centre pixel must be present and full rank")
    raw = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            px = window[a, b]
            if (a, b) == (half, half) or px is None or px.rank_deficient:
                continue
            d = pair_distance(center, px)
            raw[a, b] = kernel[a, b] * float(gaussian_kernel(d, gamma_r))
    raw[half, half] = raw.max() if center_rule else kernel[half, half]
    total = raw.sum()
    if total <= 0.0:
        raw[half, half] = 1.0
        total = 1.0
    return raw / total


# --------------------------------------------------------------------------
# compiled per-pixel kernel


@numba.njit(cache=True, nogil=True, inline="always")
def _dist2_kl(c, inv_c, nb, inv_nb):
    t1 = 0.0
    t2 = 0.0
    for a in range(3):
        for b in range(3):
            t1 += (inv_c[a, b] * nb[b, a]).real
            t2 += (inv_nb[a, b] * c[b, a]).real
    lo = min(t1, t2)
    hi = max(t1, t2)
    d = 0.5 * (lo + hi) - 3.0
    return d * d


@numba.njit(cache=True, nogil=True, inline="always")
def _dist2_le(log_c, log_nb):
    s = 0.0
    for a in range(3):
        for b in range(3):
            z = log_c[a, b] - log_nb[a, b]
            s += z.real * z.real + z.imag * z.imag
    return s


@numba.njit(cache=True, nogil=True)
def _dist2_ai(isq, nb, tmp, m):
    # tmp = isq @ nb ; m = tmp @ isq (upper triangle, then mirrored)
    for a in range(3):
        for b in range(3):
            acc = 0j
            for k in range(3):
                acc += isq[a, k] * nb[k, b]
            tmp[a, b] = acc
    for a in range(3):
        for b in range(a, 3):
            acc = 0j
            for k in range(3):
                acc += tmp[a, k] * isq[k, b]
            m[a, b] = acc
    for a in range(3):
        m[a, a] = m[a, a].real
        for b in range(a + 1, 3):
            m[b, a] = np.conj(m[a, b])
    l0, l1, l2, _ = hm.eigvals3(m)
    if l2 <= 0.0:
        return np.inf
    g0 = np.log(l0)
    g1 = np.log(l1)
    g2 = np.log(l2)
    return g0 * g0 + g1 * g1 + g2 * g2


def half_offsets(window_half: int, kernel: np.ndarray) -> np.ndarray:
    """Offsets (di, dj) covering each unordered neighbour pair once."""
    offs = []
    for di in range(0, window_half + 1):
        for dj in range(-window_half, window_half + 1):
            if di == 0 and dj <= 0:
                continue
            if kernel[di + window_half, dj + window_half] > 0.0:
                offs.append((di, dj))
    return np.array(offs, dtype=np.int64).reshape(-1, 2)


@numba.njit(cache=True, parallel=True)
def _distance_planes(sigma, aux, deficient, offsets, kind, d2):
    """d2[k, i, j] = squared distance between pixel (i, j) and (i, j) + offsets[k].

    +inf where the partner is outside the image or either pixel is rank deficient.
    """
    height = sigma.shape[0]
    width = sigma.shape[1]
    n_off = offsets.shape[0]
    for idx in numba.prange(height * width):
        i = idx // width
        j = idx - i * width
        tmp = np.empty((3, 3), dtype=np.complex128)
        m = np.empty((3, 3), dtype=np.complex128)
        for k in range(n_off):
            ii = i + offsets[k, 0]
            jj = j + offsets[k, 1]
            if ii < 0 or ii >= height or jj < 0 or jj >= width or deficient[i, j] or deficient[ii, jj]:
                d2[k, i, j] = np.inf
                continue
            if kind == 0:
                d2[k, i, j] = _dist2_kl(sigma[i, j], aux[i, j], sigma[ii, jj], aux[ii, jj])
            elif kind == 1:
                d2[k, i, j] = _dist2_ai(aux[i, j], sigma[ii, jj], tmp, m)
            else:
                d2[k, i, j] = _dist2_le(aux[i, j], aux[ii, jj])


@numba.njit(cache=True, parallel=True)
def _bilateral_pass(sigma, deficient, kernel, half, inv_gr2, lookup, d2, center_rule, out, wsum):
    """Weighted window sums.

    ``lookup[a, b]`` gives, for window position (a, b), the index into ``d2``
    (>= 0: read at the centre; < 0: index ``-1 - lookup`` read at the
    neighbour, i.e. the pair seen from the other side).
    """
    height = sigma.shape[0]
    width = sigma.shape[1]
    size = 2 * half + 1
    kc = half * size + half
    for idx in numba.prange(height * width):
        i = idx // width
        j = idx - i * width
        if deficient[i, j]:
            for a in range(3):
                for b in range(3):
                    out[i, j, a, b] = sigma[i, j, a, b]
            wsum[i, j] = np.nan
            continue
        raw = np.zeros(size * size)
        i0 = max(0, i - half)
        i1 = min(height - 1, i + half)
        j0 = max(0, j - half)
        j1 = min(width - 1, j + half)
        best = 0.0
        for ii in range(i0, i1 + 1):
            for jj in range(j0, j1 + 1):
                if ii == i and jj == j:
                    continue
                if deficient[ii, jj]:
                    continue
                a = ii - i + half
                b = jj - j + half
                fs = kernel[a, b]
                if fs == 0.0:
                    continue
                if inv_gr2 == 0.0:
                    r = fs
                else:
                    k = lookup[a, b]
                    if k >= 0:
                        dd = d2[k, i, j]
                    else:
                        dd = d2[-1 - k, ii, jj]
                    r = fs * np.exp(-dd * inv_gr2)
                raw[a * size + b] = r
                if r > best:
                    best = r
        if center_rule:
            raw[kc] = best
        else:
            raw[kc] = kernel[half, half]
        total = 0.0
        for k in range(size * size):
            total += raw[k]
        if not total > 0.0:
            for a in range(3):
                for b in range(3):
                    out[i, j, a, b] = sigma[i, j, a, b]
            wsum[i, j] = 1.0
            continue
        acc = np.zeros((3, 3), dtype=np.complex128)
        ws = 0.0
        for ii in range(i0, i1 + 1):
            for jj in range(j0, j1 + 1):
                r = raw[(ii - i + half) * size + (jj - j + half)]
                if r == 0.0:
                    continue
                w = r / total
                ws += w
                for a in range(3):
                    for b in range(3):
                        acc[a, b] += w * sigma[ii, jj, a, b]
        for a in range(3):
            out[i, j, a, a] = acc[a, a].real
            for b in range(a + 1, 3):
                z = 0.5 * (acc[a, b] + np.conj(acc[b, a]))
                out[i, j, a, b] = z
                out[i, j, b, a] = np.conj(z)
        wsum[i, j] = ws


@contextmanager
def num_threads(n: int | None):
    """Temporarily set the numba worker count (``None`` leaves it alone)."""
    if n is None:
        yield
        return
    prev = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    try:
        yield
    finally:
        numba.set_num_threads(prev)


@dataclass
class IterationResult:
    field: CovarianceField
    weight_sum: np.ndarray
    prepared: PreparedField


def filter_iteration_detail(field: CovarianceField, config: FilterConfig) -> IterationResult:
    """One synchronous pass; also returns per-pixel weight sums (NaN = unfiltered)."""
    if field.dim != 3:
        raise ValueError("the filter is implemented for 3x3 matrices")
    data = np.ascontiguousarray(field.data)
    prep = prepare_field(data, config.kind, config.cond_threshold)
    kernel = spatial_kernel(config.window_half, config.gamma_s)
    inv_gr2 = 0.0 if math.isinf(config.gamma_r) else 1.0 / (config.gamma_r * config.gamma_r)
    half = config.window_half
    offsets = half_offsets(half, kernel) if inv_gr2 > 0.0 else np.zeros((0, 2), dtype=np.int64)
    lookup = np.zeros((2 * half + 1, 2 * half + 1), dtype=np.int64)
    for k, (di, dj) in enumerate(offsets):
        lookup[half + di, half + dj] = k
        lookup[half - di, half - dj] = -1 - k
    d2 = np.empty((len(offsets),) + data.shape[:2])
    _distance_planes(data, prep.aux, prep.rank_deficient, offsets, int(config.kind), d2)
    out = np.empty_like(data)
    wsum = np.empty(data.shape[:2])
    _bilateral_pass(
        data, prep.rank_deficient, kernel, half, inv_gr2, lookup, d2,
        config.center_rule, out, wsum,
    )
    return IterationResult(field.with_data(out), wsum, prep)


def filter_iteration(field: CovarianceField, config: FilterConfig) -> CovarianceField:
    return filter_iteration_detail(field, config).field


def iterate_filter(field: CovarianceField, config: FilterConfig, threads: int | None = None) -> Iterator[CovarianceField]:
    """Yield iterates 1..n_iter."""
    current = field
    with num_threads(threads):
        for _ in range(config.n_iter):
            current = filter_iteration(current, config)
            yield current


def run_filter(field: CovarianceField, config: FilterConfig | None = None, threads: int | None = None) -> CovarianceField:
    """Apply ``config.n_iter`` iterations starting from the multi-look image."""
    config = config or FilterConfig()
    result = field
    for result in iterate_filter(field, config, threads):
        pass
    result.meta.update(config.as_dict())
    return result


def boxcar(field: CovarianceField, size: int = defaults.BOXCAR_SIZE) -> CovarianceField:
    """Unweighted mean over a size x size window, clipped at the borders."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"boxcar size must be a positive odd integer, got {size}")
    half = size // 2
    data = field.data
    h, w = data.shape[:2]
    padded = np.zeros((h + 2 * half, w + 2 * half) + data.shape[2:], dtype=np.complex128)
    padded[half:half + h, half:half + w] = data
    ones = np.zeros((h + 2 * half, w + 2 * half))
    ones[half:half + h, half:half + w] = 1.0
    acc = np.zeros_like(data)
    count = np.zeros((h, w))
    for di in range(size):
        for dj in range(size):
            acc += padded[di:di + h, dj:dj + w]
            count += ones[di:di + h, dj:dj + w]
    out = field.with_data(hm.hermitianize(acc / count[:, :, None, None]))
    out.meta.update({"method": "boxcar", "window": size})
    return out
