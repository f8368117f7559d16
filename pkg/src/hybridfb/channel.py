"""One-ring multipath channels for a ULA and their (beam-domain) covariances.

A user's channel is ``h = P**-0.5 * sum_p gamma_p * a(theta_p)`` with
``gamma_p ~ CN(0, 1)``.  Path angles are drawn once per drop and held fixed
while the gains are redrawn for every fast-fading trial, so all
expectations here are over the gains only.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnsupportedConfigurationError
from .numerics import dft_matrix

DIRICHLET_EPS = 1e-9


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array with ``M`` elements spaced ``spacing_ratio`` wavelengths apart."""

    M: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise InvalidInputError(f"antenna count must be a positive integer, got {self.M}")
        if not self.spacing_ratio > 0:
            raise InvalidInputError(f"spacing ratio must be positive, got {self.spacing_ratio}")


@dataclass(frozen=True)
class AngularProfile:
    """Mean AoA, angular spread (both radians) and number of paths of one user."""

    mean_aoa: float
    spread: float
    path_count: int = 20

    def __post_init__(self):
        if not -np.pi / 2 - 1e-12 <= self.mean_aoa <= np.pi / 2 + 1e-12:
            raise InvalidInputError(f"mean AoA {self.mean_aoa} outside [-pi/2, pi/2]")
        if not self.spread >= 0:
            raise InvalidInputError(f"angular spread must be >= 0, got {self.spread}")
        if self.path_count < 1:
            raise InvalidInputError(f"path count must be >= 1, got {self.path_count}")

    @property
    def interval(self):
        return self.mean_aoa - self.spread / 2, self.mean_aoa + self.spread / 2


@dataclass(frozen=True)
class PathSet:
    """Realized path angles (radians) of one link."""

    aoas: np.ndarray

    @property
    def path_count(self):
        return len(self.aoas)


@dataclass(frozen=True)
class CovariancePair:
    """Spatial covariance and its beam-domain diagonal ``diag(V^H Phi V)``."""

    spatial: np.ndarray
    beam_diag: np.ndarray

    def scaled(self, gain):
        return CovariancePair(spatial=gain * self.spatial, beam_diag=gain * self.beam_diag)


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def steering_vector(cfg, theta):
    """ULA response ``a(theta)[m] = exp(j 2 pi (d/lambda) m sin(theta))``."""
    if not np.isfinite(theta):
        raise InvalidInputError("theta must be finite")
    m = np.arange(cfg.M)
    return np.exp(2j * np.pi * cfg.spacing_ratio * m * np.sin(theta))


def steering_matrix(cfg, aoas):
    """Steering vectors of all ``aoas`` stacked as columns, shape ``(M, P)``."""
    aoas = np.asarray(aoas, dtype=float)
    m = np.arange(cfg.M)[:, None]
    return np.exp(2j * np.pi * cfg.spacing_ratio * m * np.sin(aoas)[None, :])


def draw_paths(profile, seed):
    """Draw ``P`` i.i.d. AoAs uniformly on the profile's interval."""
    lo, hi = profile.interval
    rng = _as_rng(seed)
    u = rng.random(profile.path_count)
    return PathSet(aoas=lo + (hi - lo) * u)


def draw_gains(rng, shape):
    """i.i.d. CN(0, 1) samples."""
    g = rng.standard_normal(shape + (2,))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)


def draw_channel(cfg, paths, seed, gains=None):
    """One fast-fading realization ``h`` for fixed path angles.

    ``gains`` overrides the random path gains (used by tests to pin ``h``).
    """
    A = steering_matrix(cfg, paths.aoas)
    if gains is None:
        gains = draw_gains(_as_rng(seed), (paths.path_count,))
    gains = np.asarray(gains, dtype=complex)
    return A @ gains / np.sqrt(paths.path_count)


def draw_channels(steering, rng):
    """Channels of several links from their steering matrices.

    ``steering`` has shape ``(K, M, P)``; the result has shape ``(K, M)``.
    Gains are drawn in link order from ``rng``.
    """
    K, _, P = steering.shape
    gains = draw_gains(rng, (K, P))
    return np.einsum("kmp,kp->km", steering, gains) / np.sqrt(P)


def dirichlet_beam_power(M, aoas):
    """Per-beam power ``|sin(M pi b / 2) / sin(pi b / 2)|^2 / M`` for every
    beam (rows) and path (columns), ``b = sin(theta) - 2t/M + 1``.

    The removable singularity at ``b = 0`` (mod 2) evaluates to ``M``.
    """
    aoas = np.asarray(aoas, dtype=float)
    t = np.arange(1, M + 1)[:, None]
    beta = np.sin(aoas)[None, :] - 2.0 * t / M + 1.0
    den = np.sin(np.pi * beta / 2)
    num = np.sin(M * np.pi * beta / 2)
    small = np.abs(den) < DIRICHLET_EPS
    ratio_sq = np.where(small, float(M) ** 2, (num / np.where(small, 1.0, den)) ** 2)
    return ratio_sq / M


def analytical_beam_covariance(cfg, paths):
    """Covariance of ``h`` conditioned on the path angles.

    ``beam_diag[t]`` follows the closed-form Dirichlet-kernel expression;
    ``spatial`` is the exact expectation ``(1/P) sum_p a(theta_p) a(theta_p)^H``,
    whose beam-domain diagonal coincides with ``beam_diag``.
    """
    if cfg.spacing_ratio != 0.5:
        raise UnsupportedConfigurationError(
            "beam-domain covariance needs half-wavelength spacing, got "
            f"d/lambda = {cfg.spacing_ratio}"
        )
    P = paths.path_count
    beam_diag = dirichlet_beam_power(cfg.M, paths.aoas).sum(axis=1) / P
    A = steering_matrix(cfg, paths.aoas)
    spatial = A @ A.conj().T / P
    return CovariancePair(spatial=spatial, beam_diag=beam_diag)


def beam_domain_approximation(cov):
    """The DFT-diagonal approximation ``V diag(beam_diag) V^H``."""
    V = dft_matrix(len(cov.beam_diag))
    return (V * cov.beam_diag[None, :]) @ V.conj().T


def empirical_covariance(cfg, paths, sample_count, seed):
    """Sample covariance over ``sample_count`` fast-fading draws."""
    if sample_count < 1:
        raise InvalidInputError(f"sample_count must be >= 1, got {sample_count}")
    rng = _as_rng(seed)
    A = steering_matrix(cfg, paths.aoas)
    G = draw_gains(rng, (paths.path_count, sample_count))
    H = A @ G / np.sqrt(paths.path_count)
    spatial = H @ H.conj().T / sample_count
    V = dft_matrix(cfg.M)
    beam_diag = np.real(np.einsum("mt,mn,nt->t", V.conj(), spatial, V))
    return CovariancePair(spatial=spatial, beam_diag=beam_diag)
