"""Basis changes, multi-looking and the entropy / mean-alpha decomposition."""
from __future__ import annotations

from typing import NamedTuple

import numba
import numpy as np

from . import defaults
from . import hermitian as hm
from .field import LEXICOGRAPHIC, PAULI, CovarianceField

_S = 1.0 / np.sqrt(2.0)
# k_pauli = PAULI_FROM_LEX @ k_lex, with k_lex = [Shh, sqrt2 Shv, Svv]
PAULI_FROM_LEX = np.array(
    [
        [_S, 0.0, _S],
        [_S, 0.0, -_S],
        [0.0, 1.0, 0.0],
    ],
    dtype=np.complex128,
)
LEX_FROM_PAULI = PAULI_FROM_LEX.conj().T


def pauli_from_lexicographic(c) -> np.ndarray:
    """T = U C U^H."""
    c = np.asarray(c, dtype=np.complex128)
    return hm.hermitianize(PAULI_FROM_LEX @ c @ LEX_FROM_PAULI)


def lexicographic_from_pauli(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.complex128)
    return hm.hermitianize(LEX_FROM_PAULI @ t @ PAULI_FROM_LEX)


def to_basis(field: CovarianceField, basis: str) -> CovarianceField:
    if field.basis == basis:
        return field
    conv = pauli_from_lexicographic if basis == PAULI else lexicographic_from_pauli
    out = field.with_data(conv(field.data))
    out.basis = basis
    return out


def scattering_vectors(shh, shv, svv, basis: str = PAULI) -> np.ndarray:
    """Target vectors from scattering-matrix channels (reciprocal case)."""
    shh, shv, svv = (np.asarray(x, dtype=np.complex128) for x in (shh, shv, svv))
    if basis == LEXICOGRAPHIC:
        return np.stack([shh, np.sqrt(2.0) * shv, svv], axis=-1)
    return np.stack([shh + svv, shh - svv, 2.0 * shv], axis=-1) * _S


# --------------------------------------------------------------------------
# multi-looking


def _block_mean(a: np.ndarray, faz: int, frg: int) -> np.ndarray:
    h = a.shape[0] // faz
    w = a.shape[1] // frg
    a = a[: h * faz, : w * frg]
    return a.reshape((h, faz, w, frg) + a.shape[2:]).mean(axis=(1, 3))


def multilook(field: CovarianceField, factor_az: int, factor_rg: int) -> CovarianceField:
    """Block-average covariance matrices; trailing rows/columns are dropped."""
    if factor_az < 1 or factor_rg < 1:
        raise ValueError("multilook factors must be >= 1")
    if factor_az == 1 and factor_rg == 1:
        return field.copy()
    out = field.with_data(hm.hermitianize(_block_mean(field.data, factor_az, factor_rg)))
    out.looks = field.looks * factor_az * factor_rg
    return out


def multilook_vectors(k: np.ndarray, factor_az: int, factor_rg: int, basis: str = PAULI) -> CovarianceField:
    """Sample covariance of single-look target vectors ``(H, W, d)`` over blocks."""
    if factor_az < 1 or factor_rg < 1:
        raise ValueError("multilook factors must be >= 1")
    k = np.asarray(k, dtype=np.complex128)
    outer = k[..., :, None] * k[..., None, :].conj()
    data = hm.hermitianize(_block_mean(outer, factor_az, factor_rg))
    return CovarianceField(data, looks=factor_az * factor_rg, basis=basis)


# --------------------------------------------------------------------------
# H / alpha


class HAlpha(NamedTuple):
    """Entropy in [0, 1] and mean alpha angle in radians, [0, pi/2]."""

    entropy: np.ndarray | float
    mean_alpha: np.ndarray | float


@numba.njit(cache=True, parallel=True)
def _h_alpha_kernel(flat, entropy, alpha, status):
    n = flat.shape[0]
    log3 = np.log(3.0)
    for b in numba.prange(n):
        values = np.empty(3)
        vectors = np.empty((3, 3), dtype=np.complex128)
        hm.eig_one(flat[b], values, vectors)
        lam_max = max(abs(values[0]), abs(values[2]))
        total = 0.0
        bad = False
        for k in range(3):
            if values[k] < -hm.PSD_SLACK * lam_max:
                bad = True
            if values[k] < 0.0:
                values[k] = 0.0
            total += values[k]
        if bad:
            status[b] = 2
            entropy[b] = np.nan
            alpha[b] = np.nan
            continue
        if not total > 0.0:
            status[b] = 1
            entropy[b] = np.nan
            alpha[b] = np.nan
            continue
        status[b] = 0
        h = 0.0
        a = 0.0
        for k in range(3):
            p = values[k] / total
            if p > 0.0:
                h -= p * np.log(p) / log3
            c = abs(vectors[0, k])
            if c > 1.0:
                c = 1.0
            a += p * np.arccos(c)
        entropy[b] = min(max(h, 0.0), 1.0)
        alpha[b] = min(max(a, 0.0), np.pi / 2)


def h_alpha(t, strict: bool = True) -> HAlpha:
    """Entropy (log base 3) and mean alpha of Pauli-basis coherency matrices.

    With ``strict`` a zero-trace or indefinite matrix raises; otherwise such
    pixels come back as NaN.
    """
    flat, lead = hm._stack(t)
    n = flat.shape[0]
    entropy = np.empty(n)
    alpha = np.empty(n)
    status = np.empty(n, dtype=np.int8)
    _h_alpha_kernel(flat, entropy, alpha, status)
    if strict and np.any(status):
        first = int(np.argmax(status != 0))
        why = "has zero trace" if status[first] == 1 else "is not positive semidefinite"
        raise ValueError(f"h_alpha: matrix {hm._unflat_index(first, lead)} {why}")
    if not lead:
        return HAlpha(float(entropy[0]), float(alpha[0]))
    return HAlpha(entropy.reshape(lead), alpha.reshape(lead))


def h_alpha_field(field: CovarianceField, strict: bool = False) -> HAlpha:
    return h_alpha(to_basis(field, PAULI).data, strict=strict)


def halpha_histogram(entropy, mean_alpha, bins_h: int = 50, bins_alpha: int = 45):
    """2-D counts over H in [0, 1] and alpha in [0, 90] degrees.

    Returns ``(counts, h_edges, alpha_edges_deg)``; non-finite pixels are skipped.
    """
    if bins_h < 1 or bins_alpha < 1:
        raise ValueError("bin counts must be >= 1")
    h = np.ravel(entropy)
    a = np.degrees(np.ravel(mean_alpha))
    ok = np.isfinite(h) & np.isfinite(a)
    counts, he, ae = np.histogram2d(h[ok], a[ok], bins=(bins_h, bins_alpha), range=((0.0, 1.0), (0.0, 90.0)))
    return counts.astype(np.int64), he, ae


# --------------------------------------------------------------------------
# display


def pauli_rgb(t, clip_quantile: float = defaults.RGB_CLIP_QUANTILE, gamma: float = defaults.RGB_GAMMA) -> np.ndarray:
    """Pauli colour composite: R = |T22|^1/2, G = |T33|^1/2, B = |T11|^1/2.

    Each channel is divided by its ``clip_quantile`` value over the image,
    clipped to [0, 1] and raised to ``gamma``.  Returns floats ``(..., 3)``.
    """
    t = np.asarray(t, dtype=np.complex128)
    amp = np.sqrt(np.maximum(np.stack([t[..., 1, 1].real, t[..., 2, 2].real, t[..., 0, 0].real], axis=-1), 0.0))
    flat = amp.reshape(-1, 3)
    ref = np.quantile(flat, clip_quantile, axis=0)
    # a channel with a zero quantile but nonzero content falls back to its max
    ref = np.where(ref > 0.0, ref, flat.max(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rgb = np.where(ref > 0.0, amp / np.where(ref > 0.0, ref, 1.0), 0.0)
    return np.clip(rgb, 0.0, 1.0) ** gamma
