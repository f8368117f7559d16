"""User classification into instantaneous-feedback (class-I) and
statistical-feedback (class-S) users.

The objective is the covariance-only sum-rate bound.  Class-I users share
the bit budget evenly, ``B = floor(B_total / K_I)``.
"""

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

from .errors import CapacityError, InvalidInputError
from .rate import multicell_bound, sum_rate_lower_bound

EXHAUSTIVE_MAX_USERS = 12

CLASSIFICATION_CSV_COLUMNS = ("user_id", "class", "B_bits", "chosen_f", "bound_value")


@dataclass(frozen=True)
class Classification:
    """Outcome of a classification run.

    ``candidate_bounds[d]`` is the best bound found with ``K - d`` class-I
    users, so index 0 is the all-class-I split and index ``K`` the
    all-class-S split.  Fixed (non-optimized) classifications leave it empty.
    """

    K: int
    class_S_ordered: tuple
    class_I: tuple
    bits_per_I_user: int
    candidate_bounds: tuple = ()
    chosen_f: int = None
    removal_order: tuple = ()

    @property
    def class_S(self):
        return tuple(sorted(self.class_S_ordered))

    @property
    def K_I(self):
        return len(self.class_I)

    @property
    def bound_value(self):
        if not self.candidate_bounds:
            return float("nan")
        return self.candidate_bounds[self.K - self.chosen_f]

    def csv_rows(self):
        I = set(self.class_I)
        f = self.K_I if self.chosen_f is None else self.chosen_f
        rows = []
        for u in sorted(set(self.class_I) | set(self.class_S_ordered)):
            is_I = u in I
            rows.append([
                str(u), "I" if is_I else "S", str(self.bits_per_I_user if is_I else 0),
                str(f), repr(float(self.bound_value)),
            ])
        return rows


def bits_per_user(B_total, K_I):
    """Even split of the budget over the class-I users (0 when there are none)."""
    return B_total // K_I if K_I > 0 else 0


def fixed_classification(K, class_I, bits, users=None):
    """Classification imposed from outside, e.g. the conventional all-class-I scheme."""
    users = range(K) if users is None else users
    class_I = tuple(sorted(class_I))
    class_S = tuple(u for u in users if u not in set(class_I))
    return Classification(K=K, class_S_ordered=class_S, class_I=class_I, bits_per_I_user=int(bits),
                          chosen_f=len(class_I))


def conventional_classification(K, B_total, users=None):
    """Every user class-I with ``ceil(B_total / K)`` bits."""
    users = list(range(K)) if users is None else list(users)
    return fixed_classification(len(users), users, math.ceil(B_total / len(users)), users)


def _greedy(users, B_total, objective):
    """Greedy demotion from class-I to class-S.

    ``objective(class_I_frozenset, bits)`` returns the bound of a split.  The
    user whose demotion yields the largest bound is moved at every step
    (ties: lowest user id); after all ``K + 1`` splits are scored, the first
    maximum (i.e. the one with the most class-I users) is kept.
    """
    users = list(users)
    K = len(users)
    if K < 1:
        raise InvalidInputError("need at least one user")
    if B_total < 0:
        raise InvalidInputError(f"bit budget must be >= 0, got {B_total}")
    active = set(users)
    bounds = [objective(frozenset(active), bits_per_user(B_total, K))]
    order = []
    for f in range(K - 1, -1, -1):
        bits = bits_per_user(B_total, f)
        best_u, best_val = None, -np.inf
        for u in sorted(active):
            val = objective(frozenset(active - {u}), bits)
            if val > best_val:
                best_u, best_val = u, val
        active.remove(best_u)
        order.append(best_u)
        bounds.append(best_val)
    d = int(np.argmax(bounds))
    chosen_f = K - d
    class_S = tuple(order[:d])
    class_I = tuple(sorted(set(users) - set(class_S)))
    return Classification(
        K=K,
        class_S_ordered=class_S,
        class_I=class_I,
        bits_per_I_user=bits_per_user(B_total, chosen_f),
        candidate_bounds=tuple(float(b) for b in bounds),
        chosen_f=chosen_f,
        removal_order=tuple(order),
    )


def _single_cell_objective(beam_covs, p_d, x_min, x_max):
    cache = {}

    def objective(class_I, bits):
        key = (class_I, bits if class_I else 0)
        if key not in cache:
            cache[key] = sum_rate_lower_bound(beam_covs, class_I, p_d, bits, x_min, x_max).value
        return cache[key]

    return objective


def greedy_classify(beam_covs, B_total, p_d, x_min=None, x_max=None):
    """Greedy classification of a single cell.

    ``beam_covs`` has shape ``(K, M)``: one beam-domain covariance diagonal
    per user.
    """
    beam_covs = np.asarray(beam_covs, dtype=float)
    objective = _single_cell_objective(beam_covs, p_d, x_min, x_max)
    return _greedy(range(beam_covs.shape[0]), B_total, objective)


def exhaustive_classify(beam_covs, B_total, p_d, x_min=None, x_max=None):
    """Best split over all ``2^K`` partitions (K <= 12).

    Ties go to the lexicographically smallest class-S set.
    ``candidate_bounds`` holds the best bound for each class-I count.
    """
    beam_covs = np.asarray(beam_covs, dtype=float)
    K = beam_covs.shape[0]
    if K > EXHAUSTIVE_MAX_USERS:
        raise CapacityError(f"exhaustive search limited to {EXHAUSTIVE_MAX_USERS} users, got {K}")
    if K < 1:
        raise InvalidInputError("need at least one user")
    objective = _single_cell_objective(beam_covs, p_d, x_min, x_max)
    users = range(K)
    best_per_f = [-np.inf] * (K + 1)
    best = None
    for n_S in range(K + 1):
        f = K - n_S
        bits = bits_per_user(B_total, f)
        for class_S in combinations(users, n_S):
            val = objective(frozenset(users) - frozenset(class_S), bits)
            best_per_f[n_S] = max(best_per_f[n_S], val)
            if best is None or val > best[0] or (val == best[0] and class_S < best[1]):
                best = (val, class_S)
    class_S = best[1]
    chosen_f = K - len(class_S)
    return Classification(
        K=K,
        class_S_ordered=tuple(class_S),
        class_I=tuple(u for u in users if u not in class_S),
        bits_per_I_user=bits_per_user(B_total, chosen_f),
        candidate_bounds=tuple(float(b) for b in best_per_f),
        chosen_f=chosen_f,
    )


def multicell_classify(beam_tensor, cell_of, B_total, p_d, x_min=None, x_max=None):
    """Greedy classification of a whole network with the network bound.

    Returns one :class:`Classification` per cell (pooled user ids).  All of
    them share the network-wide candidate bounds, chosen class-I count and
    per-user bits ``floor(B_total / K_I_network)``.
    """
    G = np.asarray(beam_tensor, dtype=float)
    cell_of = np.asarray(cell_of, dtype=int)
    cache = {}

    def objective(class_I, bits):
        key = (class_I, bits if class_I else 0)
        if key not in cache:
            cache[key] = multicell_bound(G, cell_of, class_I, p_d, bits, x_min, x_max).value
        return cache[key]

    pooled = _greedy(range(G.shape[1]), B_total, objective)
    return split_by_cell(pooled, cell_of, G.shape[0])


def split_by_cell(pooled, cell_of, L):
    cells = []
    for l in range(L):
        mine = {int(u) for u in np.flatnonzero(np.asarray(cell_of) == l)}
        cells.append(Classification(
            K=pooled.K,
            class_S_ordered=tuple(u for u in pooled.class_S_ordered if u in mine),
            class_I=tuple(u for u in pooled.class_I if u in mine),
            bits_per_I_user=pooled.bits_per_I_user,
            candidate_bounds=pooled.candidate_bounds,
            chosen_f=pooled.chosen_f,
            removal_order=pooled.removal_order,
        ))
    return cells
