"""Complex dense linear algebra shared by the beamforming solvers.

Everything here is a pure function of its inputs. Unitary factors carry a
fixed phase convention (first non-negligible entry of each column real and
positive) so repeated runs produce identical output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_RTOL = 1e-12


class InvalidInputError(ValueError):
    """Non-finite, mis-shaped or otherwise unusable input."""


class DegenerateInputError(InvalidInputError):
    """Input lacks the rank an operation needs."""


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidInputError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def rank_threshold(s: np.ndarray, shape: tuple[int, int]) -> float:
    if s.size == 0:
        return 0.0
    return max(shape) * float(s.max()) * RANK_RTOL


def numerical_rank(a, tol: float | None = None) -> int:
    a = as_matrix(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    thr = rank_threshold(s, a.shape) if tol is None else tol
    return int(np.sum(s > thr))


def fix_phase(cols: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real-positive."""
    cols = np.array(cols, dtype=complex, copy=True)
    for j in range(cols.shape[1]):
        c = cols[:, j]
        scale = np.abs(c).max() if c.size else 0.0
        if scale == 0.0:
            continue
        k = int(np.argmax(np.abs(c) > eps * scale))
        cols[:, j] = c * (np.conj(c[k]) / abs(c[k]))
    return cols


def hermitian_part(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    return 0.5 * (h + h.conj().T)


def kernel_basis(a, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis Z of the null space of a^H, i.e. a^H Z = 0.

    The result has ``rows(a) - rank(a)`` columns (possibly zero). ``tol`` is
    an absolute singular-value cutoff; by default singular values below
    ``max(shape) * s_max * 1e-12`` count as zero.
    """
    a = as_matrix(a)
    m = a.shape[0]
    if a.shape[1] == 0:
        return np.eye(m, dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    thr = rank_threshold(s, a.shape) if tol is None else tol
    r = int(np.sum(s > thr))
    return fix_phase(u[:, r:])


def orthogonal_projector_complement(a) -> np.ndarray:
    """I - A (A^H A)^{-1} A^H; requires full column rank."""
    a = as_matrix(a)
    m, n = a.shape
    if n == 0:
        return np.eye(m, dtype=complex)
    if numerical_rank(a) < n:
        raise DegenerateInputError("projector needs a full-column-rank matrix")
    q, _ = np.linalg.qr(a)
    p = np.eye(m, dtype=complex) - q @ q.conj().T
    return hermitian_part(p)


def project_out(a, x) -> np.ndarray:
    """Component of x orthogonal to the column space of a (rank-safe)."""
    a = as_matrix(a)
    x = np.asarray(x, dtype=complex)
    if a.shape[1] == 0:
        return x.copy()
    z = kernel_basis(a)
    return z @ (z.conj().T @ x)


@dataclass(frozen=True)
class GsvdFactors:
    """Joint factorisation ``fh = U C X^H`` and ``eh = V S X^H``.

    ``lambda1``/``lambda2`` hold the paired cosine/sine values per column of
    X (``lambda1`` ascending, ``lambda2`` descending, squares summing to one).
    Column j of V pairs with column j of X for j < rows(eh); column j of X
    pairs with column ``j - offset`` of U when that index is valid.
    """

    U: np.ndarray
    V: np.ndarray
    X: np.ndarray
    C: np.ndarray
    S: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    offset: int

    def u_column(self, j: int) -> np.ndarray | None:
        k = j - self.offset
        if k < 0 or k >= self.U.shape[1]:
            return None
        return self.U[:, k]


def gsvd(fh, eh) -> GsvdFactors:
    """Generalized SVD of a matrix pair sharing a column dimension.

    Built from a QR factorisation of the stacked pair followed by a
    cosine-sine split of the orthonormal factor. The stacked matrix must
    have full column rank.
    """
    fh = as_matrix(fh)
    eh = as_matrix(eh)
    if fh.shape[1] != eh.shape[1]:
        raise InvalidInputError(
            f"column mismatch: {fh.shape[1]} vs {eh.shape[1]}")
    m, p = fh.shape
    n = eh.shape[0]
    if m + n < p:
        raise DegenerateInputError("stacked pair has fewer rows than columns")
    z = np.vstack([fh, eh])
    q, rz = np.linalg.qr(z)
    if numerical_rank(rz) < p:
        raise DegenerateInputError("stacked pair is rank deficient")
    q1, q2 = q[:m], q[m:]

    # sines come from the SVD of the lower block; cosines follow from Q1 W
    if n > 0:
        _, s_all, wh = np.linalg.svd(q2, full_matrices=True)
        w = fix_phase(wh.conj().T)
        sines = np.zeros(p)
        sines[: min(n, p)] = np.clip(s_all[: min(n, p)], 0.0, 1.0)
    else:
        w = np.eye(p, dtype=complex)
        sines = np.zeros(p)
    cosines = np.sqrt(np.clip(1.0 - sines**2, 0.0, 1.0))

    # U from the columns of Q1 W that carry a non-zero cosine
    offset = max(p - m, 0)
    t = q1 @ w
    if m > 0:
        qt, rt = np.linalg.qr(t[:, offset:], mode="complete")
        d = np.diag(rt)
        ph = np.ones(len(d), dtype=complex)
        nz = np.abs(d) > 0
        ph[nz] = d[nz] / np.abs(d[nz])
        u = qt.copy()
        u[:, : len(d)] = qt[:, : len(d)] * ph
        if m > len(d):
            u[:, len(d):] = fix_phase(qt[:, len(d):])
    else:
        u = np.zeros((0, 0), dtype=complex)

    v = np.zeros((n, n), dtype=complex)
    k = min(n, p)
    t2 = q2 @ w
    big = sines[:k] > 1e-12
    v[:, :k][:, big] = t2[:, :k][:, big] / sines[:k][big]
    # complete V to a unitary matrix deterministically
    v = _complete_unitary(v, filled=np.flatnonzero(big))

    c_mat = np.zeros((m, p))
    for j in range(offset, p):
        c_mat[j - offset, j] = cosines[j]
    s_mat = np.zeros((n, p))
    for j in range(k):
        s_mat[j, j] = sines[j]

    x = rz.conj().T @ w
    return GsvdFactors(U=u, V=v, X=x, C=c_mat, S=s_mat,
                       lambda1=cosines, lambda2=sines[:k], offset=offset)


def _complete_unitary(v: np.ndarray, filled: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    if len(filled) == n:
        return v
    keep = v[:, filled]
    # re-orthonormalise the known columns, then add the complement
    fill = kernel_basis(keep) if keep.shape[1] else np.eye(n, dtype=complex)
    out = v.copy()
    empty = [j for j in range(v.shape[1]) if j not in set(filled.tolist())]
    for j, col in zip(empty, fill.T):
        out[:, j] = col
    return out


def dominant_rank_one(h, tol_ratio: float = 1e-6,
                      psd_tol: float = 1e-9) -> tuple[np.ndarray, bool]:
    """Return sqrt(lambda_1) u_1 and whether lambda_2 / lambda_1 <= tol_ratio.

    ``psd_tol`` is relative to ``max(1, lambda_1)``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if not np.all(np.isfinite(h)):
        raise InvalidInputError("matrix has non-finite entries")
    lam, vec = np.linalg.eigh(hermitian_part(h))
    lam1 = float(lam[-1])
    if lam[0] < -psd_tol * max(1.0, abs(lam1)):
        raise InvalidInputError(
            f"matrix is indefinite (min eigenvalue {lam[0]:.3e})")
    if lam1 <= 0.0:
        return np.zeros(h.shape[0], dtype=complex), True
    u1 = fix_phase(vec[:, -1:])[:, 0]
    lam2 = float(lam[-2]) if len(lam) > 1 else 0.0
    return np.sqrt(lam1) * u1, max(lam2, 0.0) / lam1 <= tol_ratio


def eig_ratio(h) -> float:
    """lambda_2 / lambda_1 of a PSD matrix (0 for the zero matrix)."""
    lam = np.linalg.eigvalsh(hermitian_part(h))
    if lam[-1] <= 0.0:
        return 0.0
    return max(float(lam[-2]) if len(lam) > 1 else 0.0, 0.0) / float(lam[-1])
