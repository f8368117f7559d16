import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridfb.errors import ContractViolation, InvalidInputError
from hybridfb.numerics import hermitian_eig
from hybridfb.precoder import (
    FeedbackState,
    approx_precoder_indices,
    dominant_generalized_eigvec,
    instantaneous_slnr_precoders,
    slnr_precoders_hybrid,
    slnr_precoders_multicell,
    statistical_slnr_precoders,
)

from conftest import random_hpd, random_unit


def quotient(w, N, D):
    return np.real(np.vdot(w, N @ w)) / np.real(np.vdot(w, D @ w))


def sampled_max(rng, N, D, n=10_000):
    V = random_unit(rng, n, N.shape[0])
    num = np.real(np.einsum("sm,mn,sn->s", V.conj(), N, V))
    den = np.real(np.einsum("sm,mn,sn->s", V.conj(), D, V))
    return np.max(num / den)


def test_single_class_I_user_is_matched(rng):
    q = random_unit(rng, 1, 6)
    w = slnr_precoders_hybrid(FeedbackState(q, np.zeros((0, 6, 6)), 10.0, M=6)).class_I[0]
    assert abs(np.vdot(w, q[0])) == pytest.approx(1.0)
    assert np.linalg.norm(w) == pytest.approx(1.0)


def test_single_class_S_user_is_principal_eigvec(rng):
    C = random_hpd(rng, 5, rank=2)
    w = slnr_precoders_hybrid(FeedbackState(np.zeros((0, 5)), C[None], 3.0, M=5)).class_S[0]
    assert abs(np.vdot(w, hermitian_eig(C).max_eigenvector)) == pytest.approx(1.0)


def test_hybrid_precoder_maximizes_slnr(rng):
    M, p_d = 4, 5.0
    q = random_unit(rng, 1, M)
    C = random_hpd(rng, M, rank=2)[None]
    bank = slnr_precoders_hybrid(FeedbackState(q, C, p_d))
    D_I = C[0] + np.eye(M) / p_d
    N_I = np.outer(q[0], q[0].conj())
    assert quotient(bank.class_I[0], N_I, D_I) >= sampled_max(rng, N_I, D_I) * (1 - 1e-12)
    D_S = np.outer(q[0], q[0].conj()) + np.eye(M) / p_d
    assert quotient(bank.class_S[0], C[0], D_S) >= sampled_max(rng, C[0], D_S) * (1 - 1e-12)


def test_generalized_eigvec_against_whitening(rng):
    N = random_hpd(rng, 6, rank=2)
    D = random_hpd(rng, 6)
    L = np.linalg.cholesky(D)
    Li = np.linalg.inv(L)
    v = hermitian_eig(Li @ N @ Li.conj().T).max_eigenvector
    w_ref = np.linalg.solve(L.conj().T, v)
    w = dominant_generalized_eigvec(N, D)
    assert abs(np.vdot(w, w_ref)) / np.linalg.norm(w_ref) == pytest.approx(1.0)


def test_reductions_are_bit_exact(rng):
    M = 8
    q = random_unit(rng, 3, M)
    covs = np.array([random_hpd(rng, M, rank=2) for _ in range(3)])
    only_I = slnr_precoders_hybrid(FeedbackState(q, np.zeros((0, M, M)), 10.0, M=M)).class_I
    only_S = slnr_precoders_hybrid(FeedbackState(np.zeros((0, M)), covs, 10.0, M=M)).class_S
    assert np.array_equal(only_I, instantaneous_slnr_precoders(q, 10.0))
    assert np.array_equal(only_S, statistical_slnr_precoders(covs, 10.0))


def test_multicell_single_cell_reduction(rng):
    M = 6
    state = FeedbackState(random_unit(rng, 2, M), np.array([random_hpd(rng, M, 2)]), 4.0)
    single = slnr_precoders_hybrid(state)
    multi = slnr_precoders_multicell([state], [np.zeros((0, M, M))])[0]
    assert np.array_equal(single.class_I, multi.class_I)
    assert np.array_equal(single.class_S, multi.class_S)


def test_multicell_zero_coupling_decouples(rng):
    M = 6
    states = [FeedbackState(random_unit(rng, 1, M), np.array([random_hpd(rng, M, 2)]), 4.0) for _ in range(2)]
    banks = slnr_precoders_multicell(states, [np.zeros((2, M, M)), np.zeros((2, M, M))])
    for state, bank in zip(states, banks):
        ref = slnr_precoders_hybrid(state)
        assert np.allclose(ref.class_I, bank.class_I) and np.allclose(ref.class_S, bank.class_S)


def test_multicell_maximality(rng):
    M, p_d = 8, 10.0
    states = [FeedbackState(random_unit(rng, 1, M), np.array([random_hpd(rng, M, 2)]), p_d) for _ in range(2)]
    cross = [np.array([random_hpd(rng, M, 2) for _ in range(2)]) * 0.3 for _ in range(2)]
    banks = slnr_precoders_multicell(states, cross)
    for state, extra, bank in zip(states, cross, banks):
        q, C = state.quantized[0], state.covariances[0]
        X = extra.sum(axis=0)
        D = C + X + np.eye(M) / p_d
        N = np.outer(q, q.conj())
        assert quotient(bank.class_I[0], N, D) >= sampled_max(rng, N, D) * (1 - 1e-12)
        D = N + X + np.eye(M) / p_d
        assert quotient(bank.class_S[0], C, D) >= sampled_max(rng, C, D) * (1 - 1e-12)


def test_state_validation():
    with pytest.raises(InvalidInputError):
        FeedbackState(np.ones((1, 2)), np.zeros((0, 2, 2)), 0.0)
    with pytest.raises(ContractViolation):
        FeedbackState(np.zeros((0,)), np.zeros((0,)), 1.0)
    with pytest.raises(ContractViolation):
        slnr_precoders_hybrid(FeedbackState(np.zeros((0, 2)), np.zeros((0, 2, 2)), 1.0, M=2))
    with pytest.raises(ContractViolation):
        slnr_precoders_hybrid(FeedbackState(np.zeros((0, 2)), np.array([[[1, 1], [0, 1]]]), 1.0))


def test_approx_index_no_interference():
    phi = np.array([[0.1, 3.0, 2.0, 0.5]])
    assert approx_precoder_indices(phi, [], 10.0).tolist() == [2]


def test_approx_index_avoids_class_I_collision():
    # best beam 2 is taken by a class-I user; beam 3 is nearly as strong
    phi = np.array([[0.0, 3.0, 2.9, 0.0]])
    assert approx_precoder_indices(phi, [], 10.0).tolist() == [2]
    # ratios with collision: 3/(1+0.1) = 2.73 < 2.9/0.1
    assert approx_precoder_indices(phi, [2], 10.0).tolist() == [3]


def test_approx_index_identical_users_tie():
    phi = np.array([[1.0, 2.0, 1.0], [1.0, 2.0, 1.0]])
    idx = approx_precoder_indices(phi, [], 1.0)
    assert idx[0] == idx[1]


def test_approx_index_validation():
    with pytest.raises(ContractViolation):
        approx_precoder_indices(np.ones((1, 3)), [4], 1.0)
    assert approx_precoder_indices(np.zeros((0, 3)), [1], 1.0).size == 0


@given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 2**31))
def test_approx_index_is_argmax_of_ratio(K_S, K_I, seed):
    rng = np.random.default_rng(seed)
    M = 8
    phi = rng.exponential(size=(K_S, M))
    m_I = rng.integers(1, M + 1, size=K_I)
    idx = approx_precoder_indices(phi, m_I, 2.0)
    for n in range(K_S):
        ratio = [phi[n, l] / (sum(phi[q, l] for q in range(K_S) if q != n)
                              + sum(1.0 for m in m_I if m == l + 1) + 0.5) for l in range(M)]
        assert idx[n] == int(np.argmax(ratio)) + 1
