"""Scenario assembly: user drops, large-scale fading and the conventional baseline.

A :class:`Drop` freezes everything that stays constant while fast fading
varies: user positions, per-link path angles, large-scale gains and the
resulting covariances.  Single-cell drops are the ``L = 1`` special case
with unit large-scale gains.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from . import seeding
from .channel import (
    AngularProfile,
    ArrayConfig,
    PathSet,
    analytical_beam_covariance,
    draw_paths,
    steering_matrix,
)
from .classifier import conventional_classification, split_by_cell
from .errors import InvalidInputError
from .rate import monte_carlo_multicell, monte_carlo_sum_rate

DEFAULT_PATHS = 20


@dataclass(frozen=True)
class CellTopology:
    """Three-sector wrap-around layout.

    BSs sit on the vertices of an equilateral triangle of side
    ``cell_radius * sqrt(3)``; every BS serves the 120-degree sector facing
    the triangle centroid, out to ``cell_radius``.
    """

    L: int = 3
    cell_radius: float = 500.0
    min_distance: float = 100.0
    sector_width: float = 2 * math.pi / 3

    def __post_init__(self):
        if self.L < 1:
            raise InvalidInputError(f"cell count must be >= 1, got {self.L}")
        if not 0 < self.min_distance < self.cell_radius:
            raise InvalidInputError("need 0 < min_distance < cell_radius")

    @cached_property
    def bs_positions(self):
        if self.L == 1:
            return np.zeros((1, 2))
        side = self.cell_radius * math.sqrt(3)
        circum = side / math.sqrt(3) if self.L == 3 else side / (2 * math.sin(math.pi / self.L))
        ang = math.pi / 2 + 2 * math.pi * np.arange(self.L) / self.L
        return circum * np.stack([np.cos(ang), np.sin(ang)], axis=1)

    @cached_property
    def boresights(self):
        """Array broadside direction (radians) of every BS: toward the centroid."""
        if self.L == 1:
            return np.zeros(1)
        c = self.bs_positions
        return np.arctan2(-c[:, 1], -c[:, 0])


@dataclass(frozen=True)
class LargeScaleModel:
    """``gain = z / (d / r_h)^nu`` with ``10 log10 z ~ N(0, shadow_sigma_dB^2)``."""

    shadow_sigma_dB: float = 8.0
    pathloss_exponent: float = 2.2
    reference_distance: float = 100.0

    def gain(self, distance, shadow_dB=0.0):
        return 10.0 ** (np.asarray(shadow_dB) / 10.0) / (np.asarray(distance) / self.reference_distance) ** self.pathloss_exponent

    def draw_shadowing_dB(self, rng, shape):
        return self.shadow_sigma_dB * rng.standard_normal(shape)


@dataclass(frozen=True)
class Drop:
    """One realization of network geometry.

    ``paths[l][u]`` / ``covariances[l][u]`` describe the link from BS ``l``
    to pooled user ``u`` at unit power; ``gains[l, u]`` is its large-scale
    gain.  ``cell_of[u]`` is the serving cell of user ``u``.
    """

    cfg: ArrayConfig
    cell_of: np.ndarray
    profiles: tuple
    paths: tuple
    gains: np.ndarray
    covariances: tuple
    seed: int
    positions: np.ndarray = None
    bs_positions: np.ndarray = None
    shadowing_dB: np.ndarray = field(default=None, repr=False)

    @property
    def L(self):
        return self.gains.shape[0]

    @property
    def K(self):
        return self.gains.shape[1]

    @property
    def M(self):
        return self.cfg.M

    def spatial(self, l, u):
        return self.gains[l, u] * self.covariances[l][u].spatial

    def beam_diag(self, l, u):
        return self.gains[l, u] * self.covariances[l][u].beam_diag

    @cached_property
    def beam_tensor(self):
        """Scaled beam-domain covariances, shape ``(L, K, M)``."""
        return np.array([[self.beam_diag(l, u) for u in range(self.K)] for l in range(self.L)])

    def beam_covs(self, l=0):
        """Scaled beam covariances of the users served by cell ``l``, as seen by its BS."""
        mine = np.flatnonzero(self.cell_of == l)
        return self.beam_tensor[l, mine]

    @cached_property
    def steering(self):
        """Steering matrices of every link, shape ``(L, K, M, P)``."""
        return np.array([[steering_matrix(self.cfg, self.paths[l][u].aoas) for u in range(self.K)]
                         for l in range(self.L)])

    def to_manifest(self):
        """Plain-text description sufficient to rebuild the drop."""
        lines = [
            "# hybridfb drop manifest v1",
            f"M = {self.M}",
            f"spacing_ratio = {self.cfg.spacing_ratio!r}",
            f"L = {self.L}",
            f"K = {self.K}",
            f"seed = {self.seed}",
        ]
        for u in range(self.K):
            pos = "" if self.positions is None else f" {float(self.positions[u, 0])!r} {float(self.positions[u, 1])!r}"
            lines.append(f"user {u} {int(self.cell_of[u])}{pos}")
        for l in range(self.L):
            for u in range(self.K):
                prof = self.profiles[l][u]
                aoas = ",".join(repr(float(a)) for a in self.paths[l][u].aoas)
                lines.append(
                    f"link {l} {u} {float(self.gains[l, u])!r} {float(prof.mean_aoa)!r} {float(prof.spread)!r} {aoas}"
                )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_manifest(cls, text):
        meta, users, links = {}, {}, {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("user "):
                parts = line.split()
                pos = tuple(float(x) for x in parts[3:5]) if len(parts) >= 5 else None
                users[int(parts[1])] = (int(parts[2]), pos)
            elif line.startswith("link "):
                parts = line.split()
                l, u = int(parts[1]), int(parts[2])
                aoas = np.array([float(a) for a in parts[6].split(",")])
                links[l, u] = (float(parts[3]), float(parts[4]), float(parts[5]), aoas)
            else:
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
        cfg = ArrayConfig(int(meta["M"]), float(meta["spacing_ratio"]))
        L, K = int(meta["L"]), int(meta["K"])
        cell_of = np.array([users[u][0] for u in range(K)])
        positions = None
        if all(users[u][1] is not None for u in range(K)):
            positions = np.array([users[u][1] for u in range(K)])
        gains = np.array([[links[l, u][0] for u in range(K)] for l in range(L)])
        profiles = tuple(tuple(AngularProfile(links[l, u][1], links[l, u][2], len(links[l, u][3]))
                               for u in range(K)) for l in range(L))
        paths = tuple(tuple(PathSet(links[l, u][3]) for u in range(K)) for l in range(L))
        covs = tuple(tuple(analytical_beam_covariance(cfg, p) for p in row) for row in paths)
        return cls(cfg=cfg, cell_of=cell_of, profiles=profiles, paths=paths, gains=gains,
                   covariances=covs, seed=int(meta["seed"]), positions=positions)


def wrap_to_half_plane(angle):
    """Map an arbitrary direction to the ULA-equivalent AoA in [-pi/2, pi/2]."""
    return float(np.arcsin(np.clip(np.sin(angle), -1.0, 1.0)))


def drop_single_cell(K, M, saoa, seed, path_count=DEFAULT_PATHS, spacing_ratio=0.5):
    """``K`` users with uniform mean AoAs on [-pi/2, pi/2] and angular spread ``saoa`` (radians)."""
    if K < 1:
        raise InvalidInputError(f"need at least one user, got K={K}")
    cfg = ArrayConfig(M, spacing_ratio)
    geo = seeding.rng(seed, 0)
    means = geo.uniform(-np.pi / 2, np.pi / 2, size=K)
    profiles = tuple(AngularProfile(float(a), float(saoa), path_count) for a in means)
    paths = tuple(draw_paths(p, seeding.rng(seed, 1, 0, k)) for k, p in enumerate(profiles))
    covs = tuple(analytical_beam_covariance(cfg, p) for p in paths)
    return Drop(cfg=cfg, cell_of=np.zeros(K, dtype=int), profiles=(profiles,), paths=(paths,),
                gains=np.ones((1, K)), covariances=(covs,), seed=int(seed))


def _sample_sector_user(rng, topology, l):
    bs = topology.bs_positions[l]
    while True:
        r = math.sqrt(rng.uniform(topology.min_distance ** 2, topology.cell_radius ** 2))
        phi = topology.boresights[l] + rng.uniform(-topology.sector_width / 2, topology.sector_width / 2)
        pos = bs + r * np.array([math.cos(phi), math.sin(phi)])
        if np.all(np.linalg.norm(topology.bs_positions - pos, axis=1) >= topology.min_distance):
            return pos


def drop_multicell(topology, K_per_cell, seed, M, saoa, large_scale=None,
                   path_count=DEFAULT_PATHS, spacing_ratio=0.5):
    """Multi-cell drop: users uniform over each BS's sector, beyond ``min_distance``.

    The link from BS ``l`` to a user has mean AoA equal to the user's
    direction relative to that BS's broadside (folded to the front half
    plane), independent path angles, and gain from ``large_scale`` with
    i.i.d. shadowing per link.
    """
    large_scale = LargeScaleModel(reference_distance=topology.min_distance) if large_scale is None else large_scale
    if np.isscalar(K_per_cell):
        K_per_cell = [int(K_per_cell)] * topology.L
    if len(K_per_cell) != topology.L:
        raise InvalidInputError("K_per_cell must list one count per cell")
    cfg = ArrayConfig(M, spacing_ratio)
    geo = seeding.rng(seed, 0)
    positions, cell_of = [], []
    for l, n in enumerate(K_per_cell):
        for _ in range(n):
            positions.append(_sample_sector_user(geo, topology, l))
            cell_of.append(l)
    positions = np.array(positions).reshape(-1, 2)
    cell_of = np.array(cell_of, dtype=int)
    U = len(cell_of)
    L = topology.L
    bs = topology.bs_positions
    delta = positions[None, :, :] - bs[:, None, :]
    dist = np.linalg.norm(delta, axis=2)
    shadow = large_scale.draw_shadowing_dB(seeding.rng(seed, 2), (L, U))
    gains = large_scale.gain(dist, shadow)
    direction = np.arctan2(delta[..., 1], delta[..., 0]) - topology.boresights[:, None]
    profiles, paths, covs = [], [], []
    for l in range(L):
        prow, pathrow, crow = [], [], []
        for u in range(U):
            prof = AngularProfile(wrap_to_half_plane(direction[l, u]), float(saoa), path_count)
            ps = draw_paths(prof, seeding.rng(seed, 1, l, u))
            prow.append(prof)
            pathrow.append(ps)
            crow.append(analytical_beam_covariance(cfg, ps))
        profiles.append(tuple(prow))
        paths.append(tuple(pathrow))
        covs.append(tuple(crow))
    return Drop(cfg=cfg, cell_of=cell_of, profiles=tuple(profiles), paths=tuple(paths), gains=gains,
                covariances=tuple(covs), seed=int(seed), positions=positions, bs_positions=bs,
                shadowing_dB=shadow)


def conventional_baseline(drop, B_total, codebook, p_d, trials, seed):
    """All users feed back ``ceil(B_total / K)`` bits; SLNR precoding.

    In a multi-cell drop the per-cell precoders still account for
    inter-cell leakage.
    """
    if drop.L == 1:
        cls = conventional_classification(drop.K, B_total)
        return monte_carlo_sum_rate(drop, cls, p_d, trials, seed, codebook=codebook,
                                    scheme="conventional", B_total=B_total)
    pooled = conventional_classification(drop.K, B_total)
    cells = split_by_cell(pooled, drop.cell_of, drop.L)
    return monte_carlo_multicell(drop, cells, p_d, trials, seed, codebook=codebook,
                                 scheme="conventional", B_total=B_total)
