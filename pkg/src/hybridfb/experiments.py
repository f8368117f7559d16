"""Sweep runner: drops x grid points x schemes, written as CSV tables."""

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
import csv
import datetime
import itertools
import math
import os

import numpy as np

from . import seeding
from .classifier import (
    CLASSIFICATION_CSV_COLUMNS,
    conventional_classification,
    exhaustive_classify,
    fixed_classification,
    greedy_classify,
    multicell_classify,
)
from .rate import RATE_CSV_COLUMNS, _fmt, db_to_linear, half_width, monte_carlo_multicell, monte_carlo_sum_rate
from .scenario import CellTopology, LargeScaleModel, conventional_baseline, drop_multicell, drop_single_cell

RUN_COLUMNS = RATE_CSV_COLUMNS + ("codebook", "saoa_deg", "drop", "K_I", "B_bits")
AGGREGATE_COLUMNS = ("scheme", "codebook", "p_d_dB", "K", "B_total", "M", "saoa_deg",
                     "drops", "mean_K_I", "sum_rate", "ci95", "trials")
CLASSIFICATION_COLUMNS = ("method", "p_d_dB", "K", "B_total", "saoa_deg", "drop") + CLASSIFICATION_CSV_COLUMNS

_TRIAL_STREAM = 1


def drop_seed(base, drop_index, K):
    return seeding.derive_seed(base, drop_index, K)


def trial_seed(seed_of_drop):
    """Shared by every scheme and grid point of a drop (common random numbers)."""
    return seeding.derive_seed(seed_of_drop, _TRIAL_STREAM)


def _grid(cfg):
    return (cfg.x_min, cfg.grid_max)


def build_drop(cfg, K, saoa_deg, drop_index):
    seed = drop_seed(cfg.seed, drop_index, K)
    saoa = math.radians(saoa_deg)
    if cfg.experiment == "multicell-power-sweep":
        topology = CellTopology(L=cfg.cells, cell_radius=cfg.cell_radius, min_distance=cfg.min_distance)
        large_scale = LargeScaleModel(cfg.shadow_sigma_db, cfg.pathloss_exponent, cfg.min_distance)
        return drop_multicell(topology, K // cfg.cells, seed, cfg.M, saoa, large_scale,
                              path_count=cfg.paths, spacing_ratio=cfg.spacing_ratio)
    return drop_single_cell(K, cfg.M, saoa, seed, path_count=cfg.paths, spacing_ratio=cfg.spacing_ratio)


def _row(scheme, codebook, p_d_dB, K, B_total, M, saoa, drop, K_I, bits, value, ci95, trials, seed):
    return {
        "scheme": scheme, "p_d_dB": p_d_dB, "K": K, "B_total": B_total, "M": M,
        "sum_rate": value, "ci95": ci95, "trials": trials, "seed": seed,
        "codebook": codebook, "saoa_deg": saoa, "drop": drop, "K_I": K_I, "B_bits": bits,
    }


def _mc_row(report, codebook, saoa, drop, cls, p_d_dB):
    row = _row(report.scheme, codebook, p_d_dB, report.K, report.B_total, report.M, saoa, drop,
               cls.K_I, cls.bits_per_I_user, report.sum_rate, report.ci95, report.trials, report.seed)
    row["_samples"] = report.trial_sum_rates
    return row


def _class_rows(method, cls, p_d_dB, K, B_total, saoa, drop):
    return [[method, _fmt(p_d_dB), str(K), str(B_total), _fmt(saoa), str(drop)] + r for r in cls.csv_rows()]


def run_unit(cfg, K, B_total, saoa_deg, drop_index):
    """Every scheme and power point of one drop.  Returns (run rows, classification rows)."""
    drop = build_drop(cfg, K, saoa_deg, drop_index)
    tseed = trial_seed(drop.seed)
    x_min, x_max = _grid(cfg)
    rows, class_rows = [], []
    multicell = cfg.experiment == "multicell-power-sweep"
    for p_d_dB in cfg.p_d_grid:
        p_d = float(db_to_linear(p_d_dB))
        ctx = dict(p_d_dB=p_d_dB, K=K, B_total=B_total, saoa=saoa_deg, drop=drop_index)

        if multicell:
            cells = multicell_classify(drop.beam_tensor, drop.cell_of, B_total, p_d, x_min, x_max)
            pooled = cells[0]
            rows.append(_row("bound", "none", p_d_dB, K, B_total, cfg.M, saoa_deg, drop_index,
                             sum(c.K_I for c in cells), pooled.bits_per_I_user, pooled.bound_value,
                             0.0, 0, drop.seed))
            for c in cells:
                class_rows += _class_rows("greedy", c, **ctx)
            conv = conventional_classification(K, B_total)
            for kind in cfg.codebook:
                rep = monte_carlo_multicell(drop, cells, p_d, cfg.trials, tseed, codebook=kind,
                                            scheme="proposed", B_total=B_total)
                row = _mc_row(rep, kind, saoa_deg, drop_index, pooled, p_d_dB)
                row["K_I"] = sum(c.K_I for c in cells)
                rows.append(row)
                rep = conventional_baseline(drop, B_total, kind, p_d, cfg.trials, tseed)
                rows.append(_mc_row(rep, kind, saoa_deg, drop_index, conv, p_d_dB))
            continue

        beam_covs = drop.beam_covs()
        greedy = greedy_classify(beam_covs, B_total, p_d, x_min, x_max)
        class_rows += _class_rows("greedy", greedy, **ctx)
        rows.append(_row("bound", "none", p_d_dB, K, B_total, cfg.M, saoa_deg, drop_index,
                         greedy.K_I, greedy.bits_per_I_user, greedy.bound_value, 0.0, 0, drop.seed))

        if cfg.experiment == "bound-vs-mc":
            for kind in cfg.codebook:
                rep = monte_carlo_sum_rate(drop, greedy, p_d, cfg.trials, tseed, codebook=kind,
                                           B_total=B_total)
                rows.append(_mc_row(rep, kind, saoa_deg, drop_index, greedy, p_d_dB))
            perfect = fixed_classification(K, range(K), 0)
            rep = monte_carlo_sum_rate(drop, perfect, p_d, cfg.trials, tseed, perfect_csi=True,
                                       scheme="perfect-csi", B_total=B_total)
            rows.append(_mc_row(rep, "none", saoa_deg, drop_index, perfect, p_d_dB))
            continue

        conv = conventional_classification(K, B_total)
        for kind in cfg.codebook:
            rep = monte_carlo_sum_rate(drop, greedy, p_d, cfg.trials, tseed, codebook=kind,
                                       B_total=B_total)
            rows.append(_mc_row(rep, kind, saoa_deg, drop_index, greedy, p_d_dB))
            rep = conventional_baseline(drop, B_total, kind, p_d, cfg.trials, tseed)
            rows.append(_mc_row(rep, kind, saoa_deg, drop_index, conv, p_d_dB))

        if cfg.experiment == "bit-allocation-compare":
            best = exhaustive_classify(beam_covs, B_total, p_d, x_min, x_max)
            class_rows += _class_rows("exhaustive", best, **ctx)
            rows.append(_row("bound-exhaustive", "none", p_d_dB, K, B_total, cfg.M, saoa_deg, drop_index,
                             best.K_I, best.bits_per_I_user, best.bound_value, 0.0, 0, drop.seed))
            for kind in cfg.codebook:
                rep = monte_carlo_sum_rate(drop, best, p_d, cfg.trials, tseed, codebook=kind,
                                           scheme="exhaustive", B_total=B_total)
                rows.append(_mc_row(rep, kind, saoa_deg, drop_index, best, p_d_dB))
    return rows, class_rows


def _run_unit_packed(args):
    return run_unit(*args)


def _sort_key(row):
    return (row["scheme"], row["codebook"], row["K"], row["B_total"], row["saoa_deg"], row["p_d_dB"], row["drop"])


def aggregate(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[(r["scheme"], r["codebook"], r["p_d_dB"], r["K"], r["B_total"], r["M"], r["saoa_deg"])].append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[3], k[4], k[6], k[2])):
        members = sorted(groups[key], key=lambda r: r["drop"])
        values = np.array([r["sum_rate"] for r in members])
        samples = [r.get("_samples") for r in members]
        if all(s is not None for s in samples):
            ci = half_width(np.concatenate(samples))
        else:
            ci = half_width(values)
        out.append({
            "scheme": key[0], "codebook": key[1], "p_d_dB": key[2], "K": key[3], "B_total": key[4],
            "M": key[5], "saoa_deg": key[6], "drops": len(members),
            "mean_K_I": float(np.mean([r["K_I"] for r in members])),
            "sum_rate": float(values.mean()), "ci95": ci, "trials": members[0]["trials"],
        })
    return out


def run_grid(cfg, threads=1):
    """All drops and grid points of a sweep; rows come back deterministically sorted."""
    units = [(cfg, K, B, s, d) for K, B, s in itertools.product(cfg.K, cfg.B_total, cfg.saoa_deg)
             for d in range(cfg.drops)]
    if threads > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_unit_packed, units))
    else:
        results = [run_unit(*u) for u in units]
    rows = [r for res in results for r in res[0]]
    class_rows = [r for res in results for r in res[1]]
    rows.sort(key=_sort_key)
    class_rows.sort(key=lambda r: (r[0], int(r[2]), int(r[3]), float(r[4]), float(r[1]), int(r[5]), int(r[6])))
    return rows, class_rows


def write_csv(path, columns, rows):
    """Header comment with a timestamp, then a header row, then ``rows``.

    Everything below the comment depends only on the inputs.
    """
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# generated {stamp}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [_fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in columns]
            w.writerow(row)


def run_experiment(cfg, out_dir=None, threads=1):
    """Run the configured experiment and write its CSV files.

    Returns a dict of the written paths.  ``validate`` runs the acceptance
    checks instead and also returns their results under ``"checks"``.
    """
    out_dir = cfg.output if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    if cfg.experiment == "validate":
        from .validation import run_all

        checks = run_all(seed=cfg.seed, out_dir=os.path.join(out_dir, "validate-scratch"))
        path = os.path.join(out_dir, "validate.csv")
        write_csv(path, ("criterion", "name", "passed", "detail", "seconds"),
                  [[str(c.number), c.name, "PASS" if c.passed else "FAIL", c.detail, f"{c.seconds:.1f}"]
                   for c in checks])
        return {"validate": path, "checks": checks}
    rows, class_rows = run_grid(cfg, threads)
    paths = {
        "runs": os.path.join(out_dir, "runs.csv"),
        "aggregate": os.path.join(out_dir, "aggregate.csv"),
        "classification": os.path.join(out_dir, "classification.csv"),
        "config": os.path.join(out_dir, "config.txt"),
    }
    write_csv(paths["runs"], RUN_COLUMNS, rows)
    write_csv(paths["aggregate"], AGGREGATE_COLUMNS, aggregate(rows))
    write_csv(paths["classification"], CLASSIFICATION_COLUMNS, class_rows)
    with open(paths["config"], "w", encoding="utf-8") as fh:
        fh.write(replace(cfg, output=out_dir).to_text())
    return paths


def read_csv_body(path):
    """CSV contents without the timestamp comment, for comparisons."""
    with open(path, encoding="utf-8") as fh:
        return "".join(line for line in fh if not line.startswith("#"))
