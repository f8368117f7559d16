"""Dense complex linear algebra used throughout the simulator.

All routines are thin, contract-checked wrappers around LAPACK (through
numpy/scipy).  Beam and column indices are 1-based in the public API of the
other modules; arrays here are plain 0-based numpy arrays.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation, InvalidInputError, SingularMatrixError

HERMITIAN_TOL = 1e-12
SINGULAR_PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs of a Hermitian matrix, sorted by non-increasing eigenvalue.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def max_eigenvalue(self):
        return float(self.eigenvalues[0])

    @property
    def max_eigenvector(self):
        return self.eigenvectors[:, 0]


def _as_square(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ContractViolation(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A.astype(complex, copy=False)


def is_hermitian(A, tol=HERMITIAN_TOL):
    """Elementwise Hermitian test, relative to the largest entry when it exceeds one."""
    A = np.asarray(A)
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    return bool(np.all(np.abs(A - A.conj().T) <= tol * scale))


def fix_phase(u):
    """Rotate ``u`` so its largest-magnitude entry (first on ties) is real and >= 0."""
    u = np.asarray(u, dtype=complex)
    k = int(np.argmax(np.abs(u)))
    a = u[k]
    if a == 0:
        return u.copy()
    return u * (np.conj(a) / np.abs(a))


def hermitian_eig(A):
    """Full eigendecomposition of a Hermitian matrix.

    Eigenvalues are returned in non-increasing order.  Ties keep the order in
    which LAPACK returned them, and every eigenvector goes through
    :func:`fix_phase` so the output is a deterministic function of ``A``.

    Raises
    ------
    InvalidInputError
        If ``A`` has non-finite entries.
    ContractViolation
        If ``A`` is not square or not Hermitian within ``HERMITIAN_TOL``.
    """
    A = _as_square(A)
    if not is_hermitian(A):
        raise ContractViolation("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    w, U = np.linalg.eigh(A)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    U = U[:, order]
    k = np.argmax(np.abs(U), axis=0)
    lead = U[k, np.arange(U.shape[1])]
    U = U * (np.conj(lead) / np.abs(lead))
    return EigenResult(eigenvalues=w, eigenvectors=U)


def cholesky_hpd(A):
    """Lower Cholesky factor of a Hermitian positive definite matrix.

    Raises :class:`SingularMatrixError` when ``A`` is not positive definite or
    its smallest pivot falls below ``1e-14 * ||A||_F``.
    """
    A = _as_square(A)
    try:
        L = scipy.linalg.cholesky(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"matrix is not positive definite: {exc}") from None
    pivots = np.real(np.diag(L)) ** 2
    if pivots.min() < SINGULAR_PIVOT_TOL * np.linalg.norm(A):
        raise SingularMatrixError(
            f"smallest pivot {pivots.min():.3e} below {SINGULAR_PIVOT_TOL:g}*||A||_F"
        )
    return L


def solve_hpd(A, B):
    """Solve ``A X = B`` for Hermitian positive definite ``A``."""
    L = cholesky_hpd(A)
    B = np.asarray(B, dtype=complex)
    if B.shape[0] != L.shape[0]:
        raise ContractViolation(f"dimension mismatch: A is {L.shape}, B has {B.shape[0]} rows")
    return scipy.linalg.cho_solve((L, True), B, check_finite=False)


def dft_matrix(M):
    """Unitary DFT beam matrix whose column ``t`` (1-based) steers to
    ``arcsin(2t/M - 1)``:  ``V[m, t-1] = exp(j*pi*m*(2t/M - 1)) / sqrt(M)``.
    """
    M = int(M)
    if M < 1:
        raise InvalidInputError(f"antenna count must be >= 1, got {M}")
    m = np.arange(M)[:, None]
    t = np.arange(1, M + 1)[None, :]
    return np.exp(1j * np.pi * m * (2.0 * t / M - 1.0)) / np.sqrt(M)
