"""Sum-rate evaluation: Monte Carlo over fast fading, and covariance-only bounds.

Rates are in bits/s/Hz (log base 2) everywhere, including the bound.
"""

from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .channel import draw_channels
from .codebook import dft_codebook, effective_bits, predict_feedback, quantize, skewed_codebook
from .errors import ContractViolation, InvalidInputError
from .precoder import (
    FeedbackState,
    approx_precoder_indices,
    slnr_precoders_hybrid,
    slnr_precoders_multicell,
)

Z95 = 1.959963984540054

RATE_CSV_COLUMNS = ("scheme", "p_d_dB", "K", "B_total", "M", "sum_rate", "ci95", "trials", "seed")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass
class RateReport:
    """Monte Carlo rate estimate for one drop and one scheme."""

    per_user_rates: np.ndarray
    sum_rate: float
    trials: int
    seed: int
    scheme: str
    ci95: float
    p_d_dB: float = float("nan")
    K: int = 0
    B_total: int = 0
    M: int = 0
    trial_sum_rates: np.ndarray = field(default=None, repr=False)

    def csv_row(self):
        return [
            self.scheme, _fmt(self.p_d_dB), _fmt(self.K), _fmt(self.B_total), _fmt(self.M),
            _fmt(self.sum_rate), _fmt(self.ci95), _fmt(self.trials), _fmt(self.seed),
        ]


@dataclass
class BoundReport:
    """Effective SINRs (user order) and the covariance-only sum-rate bound."""

    effective_sinrs: np.ndarray
    value: float
    beam_indices: np.ndarray = None


def half_width(samples):
    """95% normal-approximation half-width of the mean of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return 0.0
    return float(Z95 * samples.std(ddof=1) / np.sqrt(samples.size))


# --- instantaneous SINR ------------------------------------------------------


def sinr_single_cell(h, precoders, target, p_d):
    """SINR of the user with channel ``h`` served by ``precoders[target]``.

    Every other row of ``precoders`` counts as interference, regardless of
    its user class.
    """
    W = np.atleast_2d(np.asarray(precoders, dtype=complex))
    h = np.asarray(h, dtype=complex)
    if W.shape[1] != h.shape[0]:
        raise ContractViolation("channel and precoder dimensions differ")
    g = np.abs(W.conj() @ h) ** 2
    interference = g.sum() - g[target]
    return float(g[target] / (interference + 1.0 / p_d))


def sinrs(H, W, p_d):
    """SINR of every user: row ``k`` of ``H`` is user ``k``'s channel,
    row ``k`` of ``W`` its beam."""
    G = np.abs(H.conj() @ W.T) ** 2
    sig = np.diag(G)
    return sig / (G.sum(axis=1) - sig + 1.0 / p_d)


# --- Monte Carlo ------------------------------------------------------------


def build_codebooks(drop, users, kind, bits, seed):
    """Codebook per class-I user, keyed by pooled user id.

    ``skewed`` books are shaped by the user's own-link covariance and seeded
    by ``(seed, user)`` so they are reproducible and prefix-nested in bits.
    """
    B = effective_bits(bits)
    books = {}
    if kind == "dft":
        shared = dft_codebook(drop.M, B)
        for u in users:
            books[u] = shared
    elif kind == "skewed":
        for u in users:
            cell = drop.cell_of[u]
            books[u] = skewed_codebook(drop.covariances[cell][u], B, seeding.rng(seed, u))
    else:
        raise InvalidInputError(f"unknown codebook kind {kind!r}")
    return books


def _quantized(H_own, users, books, perfect_csi):
    out = np.empty((len(users), H_own.shape[1]), dtype=complex)
    for row, u in enumerate(users):
        h = H_own[u]
        if perfect_csi:
            out[row] = h / np.linalg.norm(h)
        else:
            out[row] = quantize(h, books[u]).word
    return out


def _finish(scheme, per_trial, trials, seed, p_d_dB, K, B_total, M):
    per_user = per_trial.mean(axis=0)
    sums = per_trial.sum(axis=1)
    return RateReport(
        per_user_rates=per_user,
        sum_rate=float(per_user.sum()),
        trials=trials,
        seed=seed,
        scheme=scheme,
        ci95=half_width(sums),
        p_d_dB=p_d_dB,
        K=K,
        B_total=B_total,
        M=M,
        trial_sum_rates=sums,
    )


def monte_carlo_sum_rate(drop, classification, p_d, trials, seed, codebook="dft",
                         perfect_csi=False, codebooks=None, scheme="proposed", B_total=0):
    """Ergodic sum rate of one single-cell drop under a user classification.

    Each trial draws fresh path gains for every user (trial ``t`` uses
    ``seeding.rng(seed, t)``), quantizes the class-I channels against their
    codebooks, builds the hybrid SLNR precoder and accumulates
    ``log2(1 + SINR)`` for every user.  ``perfect_csi`` replaces the
    quantized feedback with the true channel direction.
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if drop.L != 1:
        raise ContractViolation("monte_carlo_sum_rate expects a single-cell drop; use monte_carlo_multicell")
    K, M = drop.K, drop.M
    class_I = sorted(classification.class_I)
    class_S = sorted(classification.class_S)
    if codebooks is None and not perfect_csi:
        codebooks = build_codebooks(drop, class_I, codebook, classification.bits_per_I_user,
                                    seeding.derive_seed(seed, 0xC0DE))
    covs_S = np.array([drop.spatial(0, n) for n in class_S]).reshape(len(class_S), M, M)
    steer = drop.steering[0]
    per_trial = np.empty((trials, K))
    W = np.empty((K, M), dtype=complex)
    for t in range(trials):
        H = draw_channels(steer, seeding.rng(seed, t))
        q = _quantized(H, class_I, codebooks, perfect_csi)
        bank = slnr_precoders_hybrid(FeedbackState(q, covs_S, p_d, M=M))
        W[class_I] = bank.class_I
        W[class_S] = bank.class_S
        per_trial[t] = np.log2(1.0 + sinrs(H, W, p_d))
    return _finish(scheme, per_trial, trials, seed, 10 * np.log10(p_d), K, B_total, M)


def monte_carlo_multicell(drop, classifications, p_d, trials, seed, codebook="dft",
                          perfect_csi=False, scheme="proposed", B_total=0):
    """Network sum rate of a multi-cell drop.

    ``classifications`` holds one classification per cell (pooled user
    ids).  Every BS precodes with quantized own-cell class-I channels, own
    class-S covariances, and the covariances of all other-cell users as
    leakage; users see interference from every beam in the network.
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    L, U, M = drop.L, drop.K, drop.M
    if len(classifications) != L:
        raise ContractViolation("need one classification per cell")
    cls_I = [sorted(c.class_I) for c in classifications]
    cls_S = [sorted(c.class_S) for c in classifications]
    all_I = sorted(u for c in cls_I for u in c)
    bits = classifications[0].bits_per_I_user
    books = None
    if not perfect_csi:
        books = build_codebooks(drop, all_I, codebook, bits, seeding.derive_seed(seed, 0xC0DE))
    covs_S = [np.array([drop.spatial(l, n) for n in cls_S[l]]).reshape(len(cls_S[l]), M, M)
              for l in range(L)]
    cross = []
    for l in range(L):
        outside = [u for u in range(U) if drop.cell_of[u] != l]
        cross.append(np.array([drop.spatial(l, u) for u in outside]).reshape(len(outside), M, M))
    steer = drop.steering.reshape(L * U, M, -1)
    amp = np.sqrt(drop.gains)[:, :, None]
    members = [np.flatnonzero(drop.cell_of == l) for l in range(L)]
    if L == 1:
        members = [slice(None)]
    G = np.empty((U, U))
    per_trial = np.empty((trials, U))
    W = np.empty((U, M), dtype=complex)
    for t in range(trials):
        Hn = draw_channels(steer, seeding.rng(seed, t)).reshape(L, U, M) * amp
        states = []
        for l in range(L):
            q = _quantized(Hn[l], cls_I[l], books, perfect_csi)
            states.append(FeedbackState(q, covs_S[l], p_d, M=M))
        banks = slnr_precoders_multicell(states, cross)
        for l in range(L):
            W[cls_I[l]] = banks[l].class_I
            W[cls_S[l]] = banks[l].class_S
        # G[u, v] = |g_{serving(v), u}^H w_v|^2, one matrix product per serving cell
        for l in range(L):
            G[:, members[l]] = np.abs(Hn[l].conj() @ W[members[l]].T) ** 2
        sig = np.diag(G)
        per_trial[t] = np.log2(1.0 + sig / (G.sum(axis=1) - sig + 1.0 / p_d))
    return _finish(scheme, per_trial, trials, seed, 10 * np.log10(p_d), U, B_total, M)


# --- covariance-only bound --------------------------------------------------


def _cell_beam_indices(own, is_I, B, p_d, x_min, x_max, inter_cell=None):
    """Approximate DFT beam (1-based) of every user of one cell.

    ``own`` stacks the beam-domain covariances, as seen from the serving
    BS, of the cell's users in user order.
    """
    n, M = own.shape
    idx = np.zeros(n, dtype=int)
    I_rows = np.flatnonzero(is_I)
    S_rows = np.flatnonzero(~is_I)
    for r in I_rows:
        idx[r] = predict_feedback(own[r], M, B, x_min[r], x_max[r]).beam_index
    idx[S_rows] = approx_precoder_indices(own[S_rows], idx[I_rows], p_d, inter_cell)
    return idx


def _intra_interference(own, idx):
    P = own[:, idx - 1]
    sig = np.diag(P).copy()
    off = np.where(np.eye(len(idx), dtype=bool), 0.0, P)
    return sig, off.sum(axis=1)


def _grid_bounds(x_min, x_max, K, M):
    lo = np.broadcast_to(np.asarray(1 if x_min is None else x_min, dtype=int), (K,))
    hi = np.broadcast_to(np.asarray(M if x_max is None else x_max, dtype=int), (K,))
    return lo, hi


def _class_I_ids(classification):
    return frozenset(getattr(classification, "class_I", classification))


def sum_rate_lower_bound(beam_covs, class_I, p_d, B, x_min=None, x_max=None):
    """Covariance-only sum-rate bound of a single cell.

    Class-I users get their predicted feedback beam, class-S users the
    approximate SLNR beam, and every user's effective SINR is its beam power
    in its own beam over its beam power in everyone else's beam plus
    ``1/p_d``.

    Parameters
    ----------
    beam_covs : array, shape (K, M)
        Beam-domain covariance diagonal of every user.
    class_I : collection of int or Classification
        Users feeding back quantized channels; all others are class-S.
    B : int
        Bits per class-I user (ignored when there are none).
    """
    own = np.asarray(beam_covs, dtype=float)
    K, M = own.shape
    I = _class_I_ids(class_I)
    is_I = np.array([k in I for k in range(K)], dtype=bool)
    lo, hi = _grid_bounds(x_min, x_max, K, M)
    idx = _cell_beam_indices(own, is_I, B, p_d, lo, hi)
    sig, intra = _intra_interference(own, idx)
    eff = sig / (intra + 1.0 / p_d)
    return BoundReport(effective_sinrs=eff, value=float(np.log2(1.0 + eff).sum()), beam_indices=idx)


def multicell_bound(beam_tensor, cell_of, class_I, p_d, B, x_min=None, x_max=None):
    """Network version of :func:`sum_rate_lower_bound`.

    ``beam_tensor[l, u]`` is the beam-domain covariance diagonal, scaled by
    the large-scale gain, from BS ``l`` to pooled user ``u``; ``cell_of[u]``
    is the serving cell.  Class-S beams also avoid the beam power of
    other-cell users, and effective SINRs include interference from the
    beams of every other BS.  With one cell this reproduces
    :func:`sum_rate_lower_bound` bit for bit.
    """
    G = np.asarray(beam_tensor, dtype=float)
    L, U, M = G.shape
    cell_of = np.asarray(cell_of, dtype=int)
    I = _class_I_ids(class_I)
    is_I = np.array([u in I for u in range(U)], dtype=bool)
    lo, hi = _grid_bounds(x_min, x_max, U, M)
    members = [np.flatnonzero(cell_of == l) for l in range(L)]
    idx = np.zeros(U, dtype=int)
    for l, mem in enumerate(members):
        if not mem.size:
            continue
        inter = None
        if L > 1:
            outside = np.flatnonzero(cell_of != l)
            inter = G[l, outside].sum(axis=0)
        idx[mem] = _cell_beam_indices(G[l, mem], is_I[mem], B, p_d, lo[mem], hi[mem], inter)
    eff = np.zeros(U)
    for l, mem in enumerate(members):
        if not mem.size:
            continue
        sig, intra = _intra_interference(G[l, mem], idx[mem])
        den = intra
        if L > 1:
            inter = np.zeros(len(mem))
            for j, mem_j in enumerate(members):
                if j == l or not mem_j.size:
                    continue
                inter = inter + G[j][np.ix_(mem, idx[mem_j] - 1)].sum(axis=1)
            den = den + inter
        eff[mem] = sig / (den + 1.0 / p_d)
    return BoundReport(effective_sinrs=eff, value=float(np.log2(1.0 + eff).sum()), beam_indices=idx)
