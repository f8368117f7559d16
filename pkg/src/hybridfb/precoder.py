"""SLNR precoders for mixed quantized / statistical channel knowledge.

Every user's beam maximizes a generalized Rayleigh quotient
``w^H N w / w^H D w``: the numerator ``N`` is ``h_hat h_hat^H`` for a
class-I user (quantized feedback) and the covariance ``Phi`` for a class-S
user, and ``D`` collects the leakage matrices of every other user plus
``I / p_d``.  With no class-S users this is the instantaneous SLNR
precoder; with no class-I users it is the statistical one.

The module also hosts the DFT-beam approximation of those precoders used
by the covariance-only rate bound.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ContractViolation, InvalidInputError, SingularMatrixError
from .numerics import fix_phase, is_hermitian, solve_hpd


@dataclass(frozen=True)
class FeedbackState:
    """What the BS knows when it builds the precoders of one cell.

    ``quantized`` holds one unit-norm quantized channel per class-I user
    (rows), ``covariances`` one spatial covariance per class-S user.
    """

    quantized: np.ndarray
    covariances: np.ndarray
    p_d: float
    M: int = field(default=None)

    def __post_init__(self):
        q = np.asarray(self.quantized, dtype=complex)
        c = np.asarray(self.covariances, dtype=complex)
        M = self.M
        if M is None:
            if q.size:
                M = q.shape[-1]
            elif c.size:
                M = c.shape[-1]
            else:
                raise ContractViolation("cannot infer the antenna count of an empty state")
        q = q.reshape(-1, M)
        c = c.reshape(-1, M, M)
        if not self.p_d > 0:
            raise InvalidInputError(f"transmit power must be positive, got {self.p_d}")
        object.__setattr__(self, "quantized", q)
        object.__setattr__(self, "covariances", c)
        object.__setattr__(self, "M", M)

    @property
    def K_I(self):
        return self.quantized.shape[0]

    @property
    def K_S(self):
        return self.covariances.shape[0]


@dataclass(frozen=True)
class PrecoderBank:
    """Unit-norm beams, class-I users first (rows) then class-S users."""

    class_I: np.ndarray
    class_S: np.ndarray
    scheme: str = "exact-slnr"

    def stacked(self):
        return np.vstack([self.class_I, self.class_S])


def _denominator(quantized_others, covariances_others, p_d, extra=None):
    M = quantized_others.shape[1]
    D = np.zeros((M, M), dtype=complex)
    if quantized_others.shape[0]:
        D = D + quantized_others.T @ quantized_others.conj()
    for C in covariances_others:
        D = D + C
    if extra is not None:
        D = D + extra
    return D + np.eye(M) / p_d


def beam_for_rank_one(h_hat, D):
    """Maximizer of ``|w^H h_hat|^2 / w^H D w``, i.e. ``D^{-1} h_hat`` normalized."""
    w = solve_hpd(D, h_hat)
    return fix_phase(w / np.linalg.norm(w))


def dominant_generalized_eigvec(N, D):
    """Unit-norm maximizer of ``w^H N w / w^H D w`` for Hermitian ``N`` and HPD ``D``.

    LAPACK whitens with the Cholesky factor ``D = L L^H``, solves the
    Hermitian problem ``L^{-1} N L^{-H} v = lambda v`` and maps back
    ``w = L^{-H} v``.
    """
    M = N.shape[0]
    try:
        _, V = scipy.linalg.eigh(N, D, subset_by_index=[M - 1, M - 1], check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"leakage matrix is not positive definite: {exc}") from None
    w = V[:, 0]
    return fix_phase(w / np.linalg.norm(w))


def _check_state(state):
    for C in state.covariances:
        if not is_hermitian(C, tol=1e-9):
            raise ContractViolation("class-S covariance is not Hermitian")
    if state.K_I + state.K_S == 0:
        raise ContractViolation("no users to precode for")


def _slnr_bank(state, extra=None):
    q, covs, p_d = state.quantized, state.covariances, state.p_d
    W_I = np.empty((state.K_I, state.M), dtype=complex)
    W_S = np.empty((state.K_S, state.M), dtype=complex)
    for i in range(state.K_I):
        others = np.delete(q, i, axis=0)
        D = _denominator(others, covs, p_d, extra)
        W_I[i] = beam_for_rank_one(q[i], D)
    for n in range(state.K_S):
        others = np.delete(covs, n, axis=0)
        D = _denominator(q, others, p_d, extra)
        W_S[n] = dominant_generalized_eigvec(covs[n], D)
    return PrecoderBank(class_I=W_I, class_S=W_S)


def slnr_precoders_hybrid(state):
    """Exact SLNR beams of one cell."""
    _check_state(state)
    return _slnr_bank(state)


def instantaneous_slnr_precoders(quantized, p_d):
    """Classical SLNR precoder driven by quantized channels only."""
    q = np.asarray(quantized, dtype=complex)
    W = np.empty_like(q)
    for i in range(q.shape[0]):
        D = _denominator(np.delete(q, i, axis=0), (), p_d)
        W[i] = beam_for_rank_one(q[i], D)
    return W


def statistical_slnr_precoders(covariances, p_d):
    """Statistical SLNR precoder driven by covariances only."""
    covs = np.asarray(covariances, dtype=complex)
    M = covs.shape[-1]
    W = np.empty((covs.shape[0], M), dtype=complex)
    for n in range(covs.shape[0]):
        D = _denominator(np.zeros((0, M), dtype=complex), np.delete(covs, n, axis=0), p_d)
        W[n] = dominant_generalized_eigvec(covs[n], D)
    return W


def slnr_precoders_multicell(states, cross_covariances):
    """Per-cell SLNR beams that also penalize leakage into other cells.

    Parameters
    ----------
    states : sequence of FeedbackState
        One per cell.
    cross_covariances : sequence of arrays
        ``cross_covariances[l]`` stacks the covariances (already scaled by
        the large-scale gains) from BS ``l`` to every user of the other
        cells, shape ``(n_l, M, M)``.  Empty stacks are allowed.

    With a single cell and no cross covariances the result is bit-identical
    to :func:`slnr_precoders_hybrid`.
    """
    if len(states) != len(cross_covariances):
        raise ContractViolation("need one cross-covariance stack per cell")
    banks = []
    for state, cross in zip(states, cross_covariances):
        _check_state(state)
        cross = np.asarray(cross, dtype=complex)
        extra = None
        if cross.size:
            extra = np.zeros((state.M, state.M), dtype=complex)
            for C in cross.reshape(-1, state.M, state.M):
                extra = extra + C
        banks.append(_slnr_bank(state, extra))
    return banks


def approx_precoder_indices(beam_covs_S, predicted_I, p_d, inter_cell=None):
    """DFT-beam indices (1-based) approximating the class-S SLNR beams.

    Class-S user ``n`` takes the beam ``l`` maximizing::

        Phi_n[l] / (sum_{q != n} Phi_q[l] + #{i : m_i == l} + inter_cell[l] + 1/p_d)

    where ``m_i`` are the predicted class-I beams.  Class-I users keep
    their predicted beam, so only the class-S indices are returned.
    """
    S = np.asarray(beam_covs_S, dtype=float)
    if S.ndim != 2:
        S = S.reshape(-1, S.shape[-1] if S.size else 1)
    K_S = S.shape[0]
    if K_S == 0:
        return np.zeros(0, dtype=int)
    M = S.shape[1]
    hits = np.zeros(M)
    for m in np.asarray(predicted_I, dtype=int):
        if not 1 <= m <= M:
            raise ContractViolation(f"beam index {m} outside [1, {M}]")
        hits[m - 1] += 1.0
    out = np.empty(K_S, dtype=int)
    for n in range(K_S):
        others = np.delete(S, n, axis=0).sum(axis=0) if K_S > 1 else np.zeros(M)
        den = others + hits
        if inter_cell is not None:
            den = den + inter_cell
        den = den + 1.0 / p_d
        out[n] = int(np.argmax(S[n] / den)) + 1
    return out
