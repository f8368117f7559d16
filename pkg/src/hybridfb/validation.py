"""Acceptance checks, shared by ``hybridfb validate`` and the test suite.

Every check returns a :class:`CheckResult`; ``data`` carries the measured
quantities so callers can print or assert on them.
"""

from dataclasses import dataclass, field, replace
import math
import os
import tempfile
import time

import numpy as np

from . import seeding
from .channel import ArrayConfig, draw_channels
from .classifier import exhaustive_classify, greedy_classify, multicell_classify
from .codebook import dft_codebook, quantize, skewed_codebook
from .config import ExperimentConfig
from .experiments import aggregate, read_csv_body, run_experiment, run_grid
from .numerics import dft_matrix, hermitian_eig
from .precoder import (
    FeedbackState,
    _denominator,
    instantaneous_slnr_precoders,
    slnr_precoders_hybrid,
    statistical_slnr_precoders,
)
from .rate import monte_carlo_multicell, monte_carlo_sum_rate, multicell_bound, sum_rate_lower_bound
from .scenario import CellTopology, drop_multicell, drop_single_cell

DEFAULT_SEED = 20240607
VALIDATE_BUDGET_S = 600.0


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number} ({self.name}): {self.detail}"


def _timed(number, name, fn, *args):
    t0 = time.perf_counter()
    passed, detail, data = fn(*args)
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0, data)


def _random_unit(rng, n, M):
    Z = rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def _random_covariance(rng, M, rank):
    A = rng.standard_normal((M, rank)) + 1j * rng.standard_normal((M, rank))
    return A @ A.conj().T / rank


# --- 1 ----------------------------------------------------------------------


def check_numerics(seed):
    t0 = time.perf_counter()
    dft_err = {M: float(np.linalg.norm(dft_matrix(M).conj().T @ dft_matrix(M) - np.eye(M)))
               for M in (8, 32, 128)}
    rng = seeding.rng(seed, 1)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 65))
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        A = (X + X.conj().T) / 2
        eig = hermitian_eig(A)
        U = eig.eigenvectors
        err = np.linalg.norm((U * eig.eigenvalues) @ U.conj().T - A) / np.linalg.norm(A)
        worst = max(worst, float(err))
    seconds = time.perf_counter() - t0
    ok = max(dft_err.values()) < 1e-10 and worst < 1e-8 and seconds < 10
    return ok, (f"max DFT unitarity error {max(dft_err.values()):.2e}, worst eig reconstruction {worst:.2e}, "
                f"{seconds:.1f}s"), {"dft_errors": dft_err, "eig_worst_relative": worst, "seconds": seconds}


# --- 2 ----------------------------------------------------------------------


def check_trace_identity(seed):
    worst = 0.0
    for M in (16, 64, 128):
        for d in range(50):
            drop = drop_single_cell(4, M, math.radians(10), seeding.derive_seed(seed, 2, M, d))
            traces = drop.beam_covs().sum(axis=1)
            worst = max(worst, float(np.max(np.abs(traces - M)) / M))
    return worst < 1e-6, f"worst relative trace error {worst:.2e}", {"worst_relative": worst}


# --- 3 ----------------------------------------------------------------------


def _quotient(w, N, D):
    return float(np.real(np.vdot(w, N @ w)) / np.real(np.vdot(w, D @ w)))


def _sampled_max(rng, N, D, samples):
    V = _random_unit(rng, samples, N.shape[0])
    num = np.real(np.einsum("sm,mn,sn->s", V.conj(), N, V))
    den = np.real(np.einsum("sm,mn,sn->s", V.conj(), D, V))
    return float(np.max(num / den))


def check_precoder_maximality(seed, instances=50, samples=10_000):
    M, p_d = 8, 10.0
    rng = seeding.rng(seed, 3)
    worst_margin = np.inf
    for _ in range(instances):
        q = _random_unit(rng, 2, M)
        covs = np.array([_random_covariance(rng, M, 3) for _ in range(2)])
        bank = slnr_precoders_hybrid(FeedbackState(q, covs, p_d))
        for i in range(2):
            N = np.outer(q[i], q[i].conj())
            D = _denominator(np.delete(q, i, axis=0), covs, p_d)
            got = _quotient(bank.class_I[i], N, D)
            worst_margin = min(worst_margin, (got - _sampled_max(rng, N, D, samples)) / got)
        for n in range(2):
            D = _denominator(q, np.delete(covs, n, axis=0), p_d)
            got = _quotient(bank.class_S[n], covs[n], D)
            worst_margin = min(worst_margin, (got - _sampled_max(rng, covs[n], D, samples)) / got)
    # reductions
    reductions_ok = True
    for _ in range(instances):
        q = _random_unit(rng, 3, M)
        covs = np.array([_random_covariance(rng, M, 3) for _ in range(3)])
        only_I = slnr_precoders_hybrid(FeedbackState(q, np.zeros((0, M, M)), p_d, M=M)).class_I
        only_S = slnr_precoders_hybrid(FeedbackState(np.zeros((0, M)), covs, p_d, M=M)).class_S
        reductions_ok &= np.array_equal(only_I, instantaneous_slnr_precoders(q, p_d))
        reductions_ok &= np.array_equal(only_S, statistical_slnr_precoders(covs, p_d))
    ok = worst_margin >= -1e-12 and reductions_ok
    return ok, (f"min relative margin over sampled maximum {worst_margin:.3e}; "
                f"reductions bit-exact: {reductions_ok}"), {"worst_margin": worst_margin,
                                                            "reductions_exact": bool(reductions_ok)}


# --- 4 ----------------------------------------------------------------------


def _curves(agg):
    curves = {}
    for row in agg:
        curves.setdefault(row["scheme"], []).append((row["p_d_dB"], row["sum_rate"], row["ci95"]))
    return {k: sorted(v) for k, v in curves.items()}


def check_bound_vs_mc(seed, trials=500, drops=10):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(experiment="bound-vs-mc", M=32, K=(6,), B_total=(24,), saoa_deg=(10.0,),
                           p_d_grid=(0.0, 5.0, 10.0, 15.0, 20.0), codebook=("dft",), trials=trials,
                           drops=drops, seed=seeding.derive_seed(seed, 4))
    rows, _ = run_grid(cfg)
    curves = _curves(aggregate(rows))
    elapsed = time.perf_counter() - t0
    mc = np.array([v for _, v, _ in curves["proposed"]])
    bound = np.array([v for _, v, _ in curves["bound"]])
    perfect = np.array([v for _, v, _ in curves["perfect-csi"]])
    increasing = bool(np.all(np.diff(mc) > 0) and np.all(np.diff(bound) > 0))
    below = bool(np.all(bound < perfect))
    ok = increasing and below and elapsed < 300
    detail = (f"MC {np.round(mc, 2).tolist()}, bound {np.round(bound, 2).tolist()}, "
              f"perfect-CSI {np.round(perfect, 2).tolist()}, {elapsed:.0f}s")
    return ok, detail, {"mc": mc, "bound": bound, "perfect": perfect, "elapsed": elapsed,
                        "increasing": increasing, "below": below}


# --- 5, 6 -------------------------------------------------------------------


def _scheme_runs(rows, scheme):
    return sorted((r for r in rows if r["scheme"] == scheme), key=lambda r: r["drop"])


def check_scheme_comparison(seed, trials=500, drops=10):
    cfg = ExperimentConfig(experiment="power-sweep", M=64, K=(10,), B_total=(40,), p_d_grid=(10.0,),
                           codebook=("dft",), trials=trials, drops=drops,
                           seed=seeding.derive_seed(seed, 5))
    rows, _ = run_grid(cfg)
    curves = _curves(aggregate(rows))
    _, prop, ci_p = curves["proposed"][0]
    _, conv, ci_c = curves["conventional"][0]
    conv_bits = _scheme_runs(rows, "conventional")[0]["B_bits"]
    ok = prop - conv > ci_p + ci_c
    return ok, (f"proposed {prop:.2f} +/- {ci_p:.2f} vs conventional {conv:.2f} +/- {ci_c:.2f} "
                f"(conventional {conv_bits} bits/user)"), {
        "proposed": prop, "conventional": conv, "ci_proposed": ci_p, "ci_conventional": ci_c,
        "conventional_bits": conv_bits}


def check_few_users(seed, trials=500, drops=10):
    cfg = ExperimentConfig(experiment="power-sweep", M=64, K=(4,), B_total=(40,), p_d_grid=(10.0,),
                           codebook=("dft",), trials=trials, drops=drops,
                           seed=seeding.derive_seed(seed, 6))
    rows, _ = run_grid(cfg)
    prop = _scheme_runs(rows, "proposed")
    conv = _scheme_runs(rows, "conventional")
    K_I = [r["K_I"] for r in prop]
    all_I = sum(k == 4 for k in K_I)
    agree = [abs(p["sum_rate"] - c["sum_rate"]) <= p["ci95"] + c["ci95"]
             for p, c in zip(prop, conv) if p["K_I"] == 4]
    ok = all_I >= 8 and all(agree)
    return ok, (f"greedy kept all 4 users class-I in {all_I}/{drops} drops (K_I per drop {K_I}); "
                f"rates agree in {sum(agree)}/{len(agree)} of those drops"), {
        "K_I": K_I, "all_class_I": all_I, "agree": agree}


# --- 7 ----------------------------------------------------------------------


def check_classifier(seed, instances=100, K=6, M=16, B_total=24, p_d=10.0):
    ratios, endpoint_ok, oracle_ok = [], 0, 0
    for d in range(instances):
        drop = drop_single_cell(K, M, math.radians(10), seeding.derive_seed(seed, 7, d))
        covs = drop.beam_covs()
        g = greedy_classify(covs, B_total, p_d)
        e = exhaustive_classify(covs, B_total, p_d)
        endpoint_ok += g.bound_value >= max(g.candidate_bounds[0], g.candidate_bounds[-1])
        oracle_ok += e.bound_value >= g.bound_value
        ratios.append(g.bound_value / e.bound_value)
    ratios = np.array(ratios)
    ok = endpoint_ok == instances and oracle_ok == instances
    detail = (f"endpoints dominated {endpoint_ok}/{instances}, oracle >= greedy {oracle_ok}/{instances}; "
              f"greedy/exhaustive ratio min {ratios.min():.4f} median {np.median(ratios):.4f} "
              f"optimal in {int(np.sum(ratios == 1.0))}/{instances}")
    return ok, detail, {"ratios": ratios}


# --- 8 ----------------------------------------------------------------------


def check_codebooks(seed, users=100, per_user=10, M=32, bits=range(1, 7)):
    cfg = ArrayConfig(M)
    align = {"dft": {B: [] for B in bits}, "skewed": {B: [] for B in bits}}
    dft = {B: dft_codebook(M, B) for B in bits}
    for d in range(users):
        drop = drop_single_cell(1, M, math.radians(10), seeding.derive_seed(seed, 8, d))
        H = draw_channels(np.repeat(drop.steering[0], per_user, axis=0), seeding.rng(seed, 8, d, 1))
        for B in bits:
            sk = skewed_codebook(drop.covariances[0][0], B, seeding.rng(seed, 8, d, 2))
            for h in H:
                align["dft"][B].append(quantize(h, dft[B]).alignment)
                align["skewed"][B].append(quantize(h, sk).alignment)
    means = {k: [float(np.mean(v[B])) for B in bits] for k, v in align.items()}
    monotone = all(np.all(np.diff(m) >= 0) for m in means.values())
    a_s, a_d = np.array(align["skewed"][4]), np.array(align["dft"][4])
    se = a_s.std(ddof=1) / np.sqrt(a_s.size) + a_d.std(ddof=1) / np.sqrt(a_d.size)
    gap = a_s.mean() - a_d.mean()
    ok = monotone and gap > se
    detail = (f"mean alignment B=1..6 dft {np.round(means['dft'], 3).tolist()} "
              f"skewed {np.round(means['skewed'], 3).tolist()}; B=4 gap {gap:.3f} > {se:.3f}")
    return ok, detail, {"means": means, "gap": gap, "se": se}


# --- 9 ----------------------------------------------------------------------


def _decoupled(drop):
    mask = np.zeros_like(drop.gains)
    mask[drop.cell_of, np.arange(drop.K)] = 1.0
    out = replace(drop, gains=drop.gains * mask)
    return out


def check_multicell(seed, trials=500, drops=10):
    # L = 1 reductions
    bitmatch = True
    for d in range(5):
        drop = drop_single_cell(5, 16, math.radians(10), seeding.derive_seed(seed, 9, 0, d))
        covs = drop.beam_covs()
        g = greedy_classify(covs, 15, 10.0)
        gm = multicell_classify(drop.beam_tensor, drop.cell_of, 15, 10.0)[0]
        bitmatch &= g.candidate_bounds == gm.candidate_bounds and g.class_I == gm.class_I
        bitmatch &= (sum_rate_lower_bound(covs, g, 10.0, g.bits_per_I_user).value
                     == multicell_bound(drop.beam_tensor, drop.cell_of, g, 10.0, g.bits_per_I_user).value)
        a = monte_carlo_sum_rate(drop, g, 10.0, 20, d)
        b = monte_carlo_multicell(drop, [g], 10.0, 20, d)
        bitmatch &= np.array_equal(a.trial_sum_rates, b.trial_sum_rates)
    # decoupling
    topology = CellTopology()
    worst = 0.0
    for d in range(5):
        drop = _decoupled(drop_multicell(topology, 3, seeding.derive_seed(seed, 9, 1, d), 32, math.radians(10)))
        class_I = [u for u in range(drop.K) if u % 2 == 0]
        net = multicell_bound(drop.beam_tensor, drop.cell_of, class_I, 10.0, 4).value
        parts = 0.0
        for l in range(drop.L):
            mine = np.flatnonzero(drop.cell_of == l)
            local_I = [i for i, u in enumerate(mine) if u in class_I]
            parts += sum_rate_lower_bound(drop.beam_covs(l), local_I, 10.0, 4).value
        worst = max(worst, abs(net - parts))
    # desk-scale sweep
    cfg = ExperimentConfig(experiment="multicell-power-sweep", M=32, K=(9,), B_total=(27,),
                           p_d_grid=(10.0,), codebook=("dft",), trials=trials, drops=drops,
                           shadow_sigma_db=8.0, pathloss_exponent=2.2,
                           seed=seeding.derive_seed(seed, 9, 2))
    curves = _curves(aggregate(run_grid(cfg)[0]))
    prop, conv = curves["proposed"][0][1], curves["conventional"][0][1]
    ok = bitmatch and worst < 1e-9 and prop >= conv
    detail = (f"L=1 bit-match {bitmatch}; decoupling error {worst:.1e}; "
              f"3-cell proposed {prop:.2f} vs conventional {conv:.2f}")
    return ok, detail, {"bitmatch": bitmatch, "decoupling_error": worst, "proposed": prop,
                        "conventional": conv}


# --- 10 ---------------------------------------------------------------------


def check_determinism(seed, out_dir=None, elapsed_before=0.0):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(experiment="power-sweep", M=16, K=(4,), B_total=(12,), p_d_grid=(0.0, 10.0),
                           codebook=("dft", "skewed"), trials=20, drops=2, seed=seed)
    base = out_dir or tempfile.mkdtemp(prefix="hybridfb-determinism-")
    first = run_experiment(cfg, out_dir=os.path.join(base, "a"))
    second = run_experiment(cfg, out_dir=os.path.join(base, "b"), threads=2)
    identical = all(read_csv_body(first[k]) == read_csv_body(second[k])
                    for k in ("runs", "aggregate", "classification"))
    total = elapsed_before + time.perf_counter() - t0
    ok = identical and total < VALIDATE_BUDGET_S
    return ok, f"CSV bodies identical: {identical}; validate suite {total:.0f}s (budget {VALIDATE_BUDGET_S:.0f}s)", {
        "identical": identical, "total_seconds": total}


CHECKS = (
    (1, "numerics", check_numerics),
    (2, "beam-power trace", check_trace_identity),
    (3, "precoder maximality", check_precoder_maximality),
    (4, "bound vs Monte Carlo", check_bound_vs_mc),
    (5, "scheme comparison", check_scheme_comparison),
    (6, "few-user regime", check_few_users),
    (7, "classifier guarantees", check_classifier),
    (8, "codebook quality", check_codebooks),
    (9, "multi-cell consistency", check_multicell),
)


def run_check(number, seed=DEFAULT_SEED, out_dir=None, elapsed_before=0.0):
    if number == 10:
        return _timed(10, "determinism", check_determinism, seed, out_dir, elapsed_before)
    for n, name, fn in CHECKS:
        if n == number:
            return _timed(n, name, fn, seed)
    raise KeyError(number)


def run_all(seed=DEFAULT_SEED, out_dir=None, report=print):
    results = []
    elapsed = 0.0
    for n in range(1, 11):
        res = run_check(n, seed, out_dir, elapsed)
        elapsed += res.seconds
        results.append(res)
        if report is not None:
            report(res.line())
    return results
