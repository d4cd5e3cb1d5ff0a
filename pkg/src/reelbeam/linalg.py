"""Dense Hermitian linear algebra used throughout the beamforming pipeline.

Matrices are plain numpy arrays. Vectors may be passed either flat or as
``(n, 1)`` columns.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import EigenConvergenceError, InvalidInputError, NotPsdError

HERMITIAN_RTOL = 1e-12
PSD_TOL = 1e-10
RANK_FRACTION = 1e-4


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def herm(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + herm(a))


def as_column(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim == 1:
        return h[:, None]
    if h.ndim == 2 and h.shape[1] == 1:
        return h
    raise InvalidInputError(f"expected a vector, got shape {h.shape}")


def check_hermitian(h, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Validate conjugate symmetry and return ``h`` as a complex array."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {h.shape}")
    scale = np.max(np.abs(h)) if h.size else 0.0
    if scale == 0.0:
        return h
    if np.max(np.abs(h - herm(h))) > rtol * scale:
        raise InvalidInputError("matrix is not Hermitian")
    return h


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    # first entry of non-negligible magnitude made real-nonnegative
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12 * max(np.max(np.abs(col)), 1e-300))
        if idx.size:
            c = col[idx[0]]
            out[:, k] = col * (np.conj(c) / abs(c))
    return out


def eig_hermitian(h) -> EigenDecomposition:
    """Eigendecomposition with eigenvalues in descending order.

    Each eigenvector is normalised so that its first non-negligible entry is
    real and nonnegative, which makes the output deterministic.
    """
    h = hermitian_part(check_hermitian(h))
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigensolver did not converge: {exc}",
                                    residual=float("nan")) from exc
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_phases(vectors[:, order])
    scale = max(np.linalg.norm(h), 1e-300)
    residual = np.linalg.norm(h - (vectors * values) @ herm(vectors))
    if residual > 1e-9 * scale and residual > 1e-290:
        raise EigenConvergenceError(
            f"eigendecomposition residual {residual:.3e} exceeds tolerance", residual=residual
        )
    return EigenDecomposition(values, vectors)


def rotation_matrix(h, n_t: int | None = None) -> np.ndarray:
    """Unitary ``U = [h/|h|, F]`` whose trailing columns span the null space of ``h hᴴ``."""
    col = as_column(h)
    if n_t is not None and col.shape[0] != n_t:
        raise InvalidInputError(f"channel has length {col.shape[0]}, expected {n_t}")
    nrm = np.linalg.norm(col)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise InvalidInputError("channel vector must be nonzero")
    hbar = col / nrm
    n = col.shape[0]
    if n == 1:
        return hbar.copy()
    # Householder QR of h̄ gives an orthonormal completion; for h̄ = e_1 it is I
    q, _ = np.linalg.qr(hbar, mode="complete")
    null_basis = q[:, 1:]
    # remove the rounding-level component along hbar and re-orthonormalise
    null_basis = null_basis - hbar @ (herm(hbar) @ null_basis)
    q, r = np.linalg.qr(null_basis)
    q = q * np.sign(np.real(np.diag(r)) + (np.real(np.diag(r)) == 0))
    return np.hstack([hbar, q])


def numeric_rank(x, fraction: float = RANK_FRACTION) -> int:
    """Number of eigenvalues at or above ``fraction`` times the eigenvalue sum."""
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError("fraction must lie in (0, 1)")
    values = eig_hermitian(x).values
    total = float(np.sum(values))
    if total <= 0.0:
        return 0
    return int(np.count_nonzero(values >= fraction * total))


def psd_factor(x, tol: float = PSD_TOL) -> np.ndarray:
    """Return ``B`` with ``B Bᴴ = x``; one column per eigenvalue at or above ``tol·tr(x)``."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    x = check_hermitian(x)
    dec = eig_hermitian(x)
    trace = float(np.real(np.trace(x)))
    if trace <= 0.0:
        if dec.values.size and dec.values[-1] < -tol * max(abs(trace), np.max(np.abs(dec.values))):
            raise NotPsdError(f"matrix has eigenvalue {dec.values[-1]:.3e}", dec.values[-1])
        return np.zeros((x.shape[0], 0), dtype=complex)
    cutoff = tol * trace
    if dec.values[-1] < -cutoff:
        raise NotPsdError(
            f"matrix is not PSD: eigenvalue {dec.values[-1]:.3e} below -{cutoff:.3e}",
            dec.values[-1],
        )
    keep = dec.values >= cutoff
    return dec.vectors[:, keep] * np.sqrt(dec.values[keep])


def is_unitary(u: np.ndarray, atol: float = 1e-8) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.linalg.norm(herm(u) @ u - np.eye(u.shape[0])) <= atol)
