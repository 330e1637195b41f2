"""Dense complex linear algebra used by the physics modules.

Operators are plain ``numpy`` complex128 arrays. Every operator function
goes through a Hermitian eigendecomposition, so results are exact up to the
LAPACK solver precision.
"""

from __future__ import annotations

from functools import reduce
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, HermiticityError, NotPsdError

HERMITIAN_TOL = 1e-10
PSD_CLIP_TOL = 1e-12
PSD_ERROR_TOL = 1e-10
SUPPORT_TOL = 1e-14


class HermitianEigen(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a square, finite complex128 matrix."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermiticity_violation(m: np.ndarray) -> float:
    """Relative Frobenius violation ||M - M^dag|| / max(1, ||M||)."""
    m = np.asarray(m)
    return float(np.linalg.norm(m - m.conj().T) / max(1.0, np.linalg.norm(m)))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_violation(m) <= tol


def check_hermitian(m: np.ndarray) -> np.ndarray:
    m = as_matrix(m)
    v = hermiticity_violation(m)
    if v > HERMITIAN_TOL:
        raise HermiticityError(v)
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [as_matrix(o) for o in ops])


def embed_local(op: np.ndarray, j: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` in slot ``j`` of the tensor product, identities elsewhere."""
    op = as_matrix(op)
    dims = [int(d) for d in dims]
    if not 0 <= j < len(dims):
        raise DimensionError(f"slot {j} out of range for {len(dims)} subsystems")
    if op.shape[0] != dims[j]:
        raise DimensionError(f"operator of dim {op.shape[0]} does not fit slot {j} of dim {dims[j]}")
    left = int(np.prod(dims[:j], dtype=np.int64))
    right = int(np.prod(dims[j + 1:], dtype=np.int64))
    return np.kron(np.kron(np.eye(left, dtype=np.complex128), op), np.eye(right, dtype=np.complex128))


def _canonical_phases(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made real positive (first index on ties)
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)[None, :]


def hermitian_eig(m: np.ndarray) -> HermitianEigen:
    m = check_hermitian(m)
    h = 0.5 * (m + m.conj().T)
    values, vectors = np.linalg.eigh(h)
    return HermitianEigen(values, _canonical_phases(vectors))


def func_hermitian(m: np.ndarray, f: Callable[[np.ndarray], np.ndarray], complex_scale: complex = 1.0) -> np.ndarray:
    """Return ``W f(scale * L) W^dag`` for ``m = W L W^dag``."""
    values, vectors = hermitian_eig(m)
    fv = f(complex_scale * values.astype(np.complex128))
    return (vectors * fv[None, :]) @ vectors.conj().T


def exp_hermitian(m: np.ndarray, complex_scale: complex = 1.0) -> np.ndarray:
    return func_hermitian(m, np.exp, complex_scale)


def log_psd(m: np.ndarray) -> np.ndarray:
    """Matrix logarithm on the support of a PSD matrix.

    Eigenvalues in ``[-1e-12, 1e-14)`` are treated as zero and left out
    (their log contributes nothing, consistent with ``0 ln 0 = 0``).
    Anything below ``-1e-10`` raises :class:`NotPsdError`.
    """
    values, vectors = hermitian_eig(m)
    if values[0] < -PSD_ERROR_TOL:
        raise NotPsdError(float(values[0]))
    support = values >= SUPPORT_TOL
    logs = np.zeros_like(values)
    logs[support] = np.log(values[support])
    return (vectors * logs[None, :]) @ vectors.conj().T


def partial_trace(rho: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not in ``keep``; kept factors stay in ascending order."""
    rho = as_matrix(rho)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims, dtype=np.int64))
    if rho.shape[0] != total:
        raise DimensionError(f"matrix dim {rho.shape[0]} != prod(dims) = {total}")
    keep = sorted(set(int(k) for k in keep))
    if any(not 0 <= k < len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = rho.reshape(dims + dims)
    # einsum labels: row index i, column index i+n; traced slots share a label
    row = list(range(n))
    col = [i if i not in keep else i + n for i in range(n)]
    out = keep + [k + n for k in keep]
    reduced = np.einsum(t, row + col, out)
    d = int(np.prod([dims[k] for k in keep], dtype=np.int64))
    return reduced.reshape(d, d)


def psd_eigenvalues(rho: np.ndarray) -> np.ndarray:
    values = hermitian_eig(rho).values
    if values[0] < -PSD_ERROR_TOL:
        raise NotPsdError(float(values[0]))
    return values


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in nats, -tr(rho ln rho), dropping eigenvalues below the support threshold."""
    p = psd_eigenvalues(rho)
    p = p[p >= SUPPORT_TOL]
    return float(-np.sum(p * np.log(p)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, log_sigma: np.ndarray | None = None) -> float:
    """S(rho || sigma) = tr(rho ln rho) - tr(rho ln sigma), in nats.

    ``log_sigma`` may be supplied when a better conditioned logarithm of
    ``sigma`` is known (e.g. assembled factor by factor for product states).
    """
    rho = as_matrix(rho)
    if log_sigma is None:
        log_sigma = log_psd(sigma)
    neg_entropy = np.trace(rho @ log_psd(rho)).real
    cross = np.trace(rho @ log_sigma).real
    return float(neg_entropy - cross)
