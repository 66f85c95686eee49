"""Small Hermitian matrices and the matrix functions the filter needs.

A Hermitian matrix is carried as a complex128 ndarray of shape ``(d, d)``;
images of them as ``(..., d, d)``.  Every public function accepts either a
single matrix or a stack and returns the same leading shape.

The eigensolver is a cyclic complex Jacobi iteration compiled with numba.
It is the only eigensolver used by the package, so results do not depend
on which LAPACK numpy was linked against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

OFF_TOL = 1e-14
MAX_SWEEPS = 100
# eigenvalues in [-PSD_SLACK * lambda_max, 0] are rounding noise
PSD_SLACK = 1e-12


class NotPositiveDefinite(ValueError):
    """Raised when a matrix function needs a positive definite argument."""

    def __init__(self, eigenvalue: float, index=None):
        self.eigenvalue = float(eigenvalue)
        self.index = index
        where = "" if index is None else f" (matrix {index})"
        super().__init__(f"matrix is not positive definite{where}: eigenvalue {eigenvalue:.6g}")


class NotPositiveSemidefinite(ValueError):
    pass


class EigenNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending and orthonormal eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.values[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


# --------------------------------------------------------------------------
# compiled kernels

@numba.njit(cache=True, nogil=True)
def _jacobi(a, v, want_vectors):
    """Diagonalize Hermitian ``a`` in place; accumulate rotations into ``v``.

    Returns False if the off-diagonal mass did not fall below tolerance.
    """
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
    scale = np.sqrt(scale)
    if scale == 0.0:
        return True
    for _ in range(MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
        if np.sqrt(off) <= OFF_TOL * scale:
            return True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = np.sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if mag == 0.0:
                    continue
                ph = np.conj(apq / mag)
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # U = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
                upp = c + 0j
                upq = s + 0j
                uqp = -s * ph
                uqq = c * ph
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * upp + akq * uqp
                    a[k, q] = akp * upq + akq * uqq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = np.conj(upp) * apk + np.conj(uqp) * aqk
                    a[q, k] = np.conj(upq) * apk + np.conj(uqq) * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                if want_vectors:
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = vkp * upp + vkq * uqp
                        v[k, q] = vkp * upq + vkq * uqq
    return False


@numba.njit(cache=True, nogil=True)
def eig_one(m, values, vectors):
    """Eigen-decompose one Hermitian matrix into preallocated outputs."""
    n = m.shape[0]
    a = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            a[i, j] = m[i, j]
    v = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        v[i, i] = 1.0
    ok = _jacobi(a, v, True)
    raw = np.empty(n)
    for i in range(n):
        raw[i] = a[i, i].real
    order = np.argsort(-raw, kind="mergesort")
    for jnew in range(n):
        jold = order[jnew]
        values[jnew] = raw[jold]
        # phase: largest-modulus component made real positive
        best = 0
        bestmag = -1.0
        for i in range(n):
            mg = abs(v[i, jold])
            if mg > bestmag:
                bestmag = mg
                best = i
        ph = np.conj(v[best, jold]) / bestmag
        for i in range(n):
            vectors[i, jnew] = v[i, jold] * ph
        vectors[best, jnew] = bestmag + 0j
    return ok


@numba.njit(cache=True, nogil=True)
def eigvals_one(m, values):
    """Eigenvalues only, sorted descending."""
    n = m.shape[0]
    a = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            a[i, j] = m[i, j]
    dummy = np.empty((1, 1), dtype=np.complex128)
    ok = _jacobi(a, dummy, False)
    for i in range(n):
        values[i] = a[i, i].real
    values[:] = -np.sort(-values)
    return ok


@numba.njit(cache=True, nogil=True, inline="always")
def _cabs2(z):
    return z.real * z.real + z.imag * z.imag


@numba.njit(cache=True, nogil=True)
def eigvals3(m):
    """Unrolled Jacobi for one 3x3 Hermitian matrix, eigenvalues only.

    Same rotations and stopping rule as ``_jacobi`` but on six scalars and
    with no allocation; this sits in the innermost loop of the filter.
    Returns ``(l0, l1, l2, converged)`` with ``l0 >= l1 >= l2``.
    """
    d0 = m[0, 0].real
    d1 = m[1, 1].real
    d2 = m[2, 2].real
    a01 = m[0, 1]
    a02 = m[0, 2]
    a12 = m[1, 2]
    off = _cabs2(a01) + _cabs2(a02) + _cabs2(a12)
    scale2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off
    tol2 = OFF_TOL * OFF_TOL * scale2
    converged = scale2 == 0.0
    for _ in range(MAX_SWEEPS):
        if converged:
            break
        if off <= tol2:
            converged = True
            break
        for pq in range(3):
            if pq == 0:
                apq = a01
                dp = d0
                dq = d1
            elif pq == 1:
                apq = a02
                dp = d0
                dq = d2
            else:
                apq = a12
                dp = d1
                dq = d2
            mag = np.sqrt(_cabs2(apq))
            if mag == 0.0:
                continue
            ph = np.conj(apq / mag)
            theta = (dq - dp) / (2.0 * mag)
            if abs(theta) > 1e150:
                t = 0.5 / theta
            else:
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            dp -= t * mag
            dq += t * mag
            if pq == 0:
                # third index r = 2: (a_rp, a_rq) = (conj a02, conj a12)
                arp = np.conj(a02)
                arq = np.conj(a12)
                a02 = np.conj(c * arp - s * ph * arq)
                a12 = np.conj(s * arp + c * ph * arq)
                a01 = 0j
                d0 = dp
                d1 = dq
            elif pq == 1:
                arp = np.conj(a01)
                arq = a12
                a01 = np.conj(c * arp - s * ph * arq)
                a12 = s * arp + c * ph * arq
                a02 = 0j
                d0 = dp
                d2 = dq
            else:
                arp = a01
                arq = a02
                a01 = c * arp - s * ph * arq
                a02 = s * arp + c * ph * arq
                a12 = 0j
                d1 = dp
                d2 = dq
        off = _cabs2(a01) + _cabs2(a02) + _cabs2(a12)
    # sort descending
    if d0 < d1:
        d0, d1 = d1, d0
    if d1 < d2:
        d1, d2 = d2, d1
    if d0 < d1:
        d0, d1 = d1, d0
    return d0, d1, d2, converged


@numba.njit(cache=True, nogil=True)
def spectral_apply(values, vectors, fvals, out):
    """out = V diag(fvals) V^H, written Hermitian by construction."""
    n = values.shape[0]
    for i in range(n):
        s = 0.0
        for k in range(n):
            vik = vectors[i, k]
            s += fvals[k] * (vik.real * vik.real + vik.imag * vik.imag)
        out[i, i] = s
        for j in range(i + 1, n):
            acc = 0j
            for k in range(n):
                acc += fvals[k] * vectors[i, k] * np.conj(vectors[j, k])
            out[i, j] = acc
            out[j, i] = np.conj(acc)


@numba.njit(cache=True)
def _eig_batch(ms, values, vectors):
    for b in range(ms.shape[0]):
        if not eig_one(ms[b], values[b], vectors[b]):
            return b
    return -1


@numba.njit(cache=True)
def _eigvals_batch(ms, values):
    for b in range(ms.shape[0]):
        if not eigvals_one(ms[b], values[b]):
            return b
    return -1


# --------------------------------------------------------------------------
# helpers


def _stack(m) -> tuple[np.ndarray, tuple]:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"expected (..., d, d) square matrices, got shape {m.shape}")
    lead = m.shape[:-2]
    d = m.shape[-1]
    return np.ascontiguousarray(m.reshape(-1, d, d)), lead


def _unflat_index(flat_index: int, lead: tuple):
    if not lead:
        return None
    return tuple(int(i) for i in np.unravel_index(flat_index, lead))


def hermitianize(m) -> np.ndarray:
    """Average a matrix with its conjugate transpose.

    A matrix that is already exactly Hermitian comes back bit-identical.
    """
    m = np.asarray(m, dtype=np.complex128)
    mh = np.conj(np.swapaxes(m, -1, -2))
    out = 0.5 * (m + mh)
    d = m.shape[-1]
    idx = np.arange(d)
    out[..., idx, idx] = out[..., idx, idx].real
    return out


def is_hermitian(m, tol: float = 0.0) -> bool:
    m = np.asarray(m)
    return bool(np.all(np.abs(m - np.conj(np.swapaxes(m, -1, -2))) <= tol))


def eig_hermitian(m) -> EigenSystem:
    """Eigendecomposition by cyclic Jacobi rotations.

    Values come back sorted descending (ties keep the original diagonal
    order) and each eigenvector is phased so that its largest-modulus
    component is real and positive.
    """
    flat, lead = _stack(m)
    if not np.all(np.isfinite(flat)):
        raise ValueError("eig_hermitian: non-finite input")
    n, d = flat.shape[0], flat.shape[-1]
    values = np.empty((n, d))
    vectors = np.empty((n, d, d), dtype=np.complex128)
    bad = _eig_batch(flat, values, vectors)
    if bad >= 0:
        raise EigenNotConverged(
            f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps "
            f"for matrix {_unflat_index(bad, lead)}:\n{flat[bad]}"
        )
    return EigenSystem(values.reshape(lead + (d,)), vectors.reshape(lead + (d, d)))


def eigvalsh(m) -> np.ndarray:
    """Eigenvalues only (descending), same Jacobi iteration."""
    flat, lead = _stack(m)
    n, d = flat.shape[0], flat.shape[-1]
    values = np.empty((n, d))
    bad = _eigvals_batch(flat, values)
    if bad >= 0:
        raise EigenNotConverged(f"Jacobi iteration did not converge for matrix {_unflat_index(bad, lead)}")
    return values.reshape(lead + (d,))


def _from_spectrum(es: EigenSystem, fvals: np.ndarray) -> np.ndarray:
    v = es.vectors
    out = (v * fvals[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    return hermitianize(out)


def clamp_psd(values: np.ndarray, index_shape: tuple = ()) -> np.ndarray:
    """Zero eigenvalues that are negative only by rounding; reject the rest."""
    values = np.asarray(values, dtype=float)
    lam_max = np.max(np.abs(values), axis=-1, keepdims=True)
    floor = -PSD_SLACK * lam_max
    if np.any(values < floor):
        flat = (values < floor).reshape(-1, values.shape[-1]).any(axis=-1)
        first = int(np.argmax(flat))
        raise NotPositiveSemidefinite(
            f"matrix {_unflat_index(first, index_shape)} has eigenvalue "
            f"{values.reshape(-1, values.shape[-1])[first].min():.6g}"
        )
    return np.where(values < 0.0, 0.0, values)


def matrix_log(m) -> np.ndarray:
    es = eig_hermitian(m)
    vals = es.values
    if np.any(vals <= 0.0):
        flat = vals.reshape(-1, vals.shape[-1])
        first = int(np.argmax((flat <= 0.0).any(axis=-1)))
        raise NotPositiveDefinite(flat[first].min(), _unflat_index(first, vals.shape[:-1]))
    return _from_spectrum(es, np.log(vals))


def matrix_exp(m) -> np.ndarray:
    es = eig_hermitian(m)
    return _from_spectrum(es, np.exp(es.values))


def matrix_power(m, p: float) -> np.ndarray:
    """Real power of a positive definite matrix, e.g. ``p=-0.5``."""
    es = eig_hermitian(m)
    vals = es.values
    if np.any(vals <= 0.0):
        flat = vals.reshape(-1, vals.shape[-1])
        first = int(np.argmax((flat <= 0.0).any(axis=-1)))
        raise NotPositiveDefinite(flat[first].min(), _unflat_index(first, vals.shape[:-1]))
    return _from_spectrum(es, vals**p)


def matrix_inv(m) -> np.ndarray:
    es = eig_hermitian(m)
    vals = es.values
    d = vals.shape[-1]
    lam_max = np.max(np.abs(vals), axis=-1)
    lam_min = np.min(np.abs(vals), axis=-1)
    singular = lam_min <= d * np.finfo(float).eps * lam_max
    if np.any(singular):
        first = int(np.argmax(singular.reshape(-1)))
        raise np.linalg.LinAlgError(
            f"matrix {_unflat_index(first, vals.shape[:-1])} is singular to working precision"
        )
    return _from_spectrum(es, 1.0 / vals)


def matrix_sqrt(m) -> np.ndarray:
    """Lower-triangular factor ``A`` with ``A A^H = m``.

    A Cholesky factorization that tolerates zero pivots, so rank-deficient
    positive semidefinite matrices (e.g. ``diag(1, 0, 0)``) are accepted.
    """
    flat, lead = _stack(m)
    n, d = flat.shape[0], flat.shape[-1]
    a = hermitianize(flat)
    out = np.zeros_like(a)
    diag_scale = np.max(np.abs(a[:, np.arange(d), np.arange(d)].real), axis=-1)
    tol = PSD_SLACK * np.maximum(diag_scale, np.finfo(float).tiny)
    for k in range(d):
        piv = a[:, k, k].real - np.sum(np.abs(out[:, k, :k]) ** 2, axis=-1)
        if np.any(piv < -tol * d):
            first = int(np.argmax(piv < -tol * d))
            raise NotPositiveSemidefinite(f"matrix {_unflat_index(first, lead)} is indefinite")
        zero = piv <= tol
        lkk = np.sqrt(np.where(zero, 1.0, piv))
        out[:, k, k] = np.where(zero, 0.0, lkk)
        for i in range(k + 1, d):
            num = a[:, i, k] - np.sum(out[:, i, :k] * np.conj(out[:, k, :k]), axis=-1)
            residual = np.abs(num) ** 2 > (tol * d) * np.maximum(a[:, i, i].real, 0.0) + tol * tol
            if np.any(zero & residual):
                first = int(np.argmax(zero & residual))
                raise NotPositiveSemidefinite(f"matrix {_unflat_index(first, lead)} is indefinite")
            out[:, i, k] = np.where(zero, 0.0, num / lkk)
    return out.reshape(lead + (d, d))


def condition_number(m) -> np.ndarray | float:
    """lambda_max / lambda_min; +inf when lambda_min <= 0."""
    vals = eigvalsh(m)
    lo = vals[..., -1]
    hi = vals[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(lo > 0.0, hi / np.where(lo > 0.0, lo, 1.0), np.inf)
    return float(kappa) if kappa.ndim == 0 else kappa


def reciprocal_condition(values: np.ndarray) -> np.ndarray:
    """1/kappa from descending eigenvalues, 0 for rank-deficient input."""
    lo = values[..., -1]
    hi = values[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where((lo > 0.0) & (hi > 0.0), lo / np.where(hi > 0.0, hi, 1.0), 0.0)


def frobenius_norm(m) -> np.ndarray | float:
    m = np.asarray(m)
    out = np.sqrt(np.sum(m.real**2 + m.imag**2, axis=(-2, -1)))
    return float(out) if out.ndim == 0 else out


def add(a, b) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128) + np.asarray(b, dtype=np.complex128)


def scale(a, s: float) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128) * float(s)


def from_elements(t11, t22, t33, t12, t13, t23) -> np.ndarray:
    """Build a 3x3 Hermitian matrix from its six distinct entries."""
    return np.array(
        [
            [t11, t12, t13],
            [np.conj(t12), t22, t23],
            [np.conj(t13), np.conj(t23), t33],
        ],
        dtype=np.complex128,
    )


def upper_elements(m) -> tuple:
    """The six distinct entries (T11, T22, T33, T12, T13, T23)."""
    m = np.asarray(m)
    return (m[..., 0, 0].real, m[..., 1, 1].real, m[..., 2, 2].real, m[..., 0, 1], m[..., 0, 2], m[..., 1, 2])
