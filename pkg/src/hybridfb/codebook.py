"""Quantization codebooks and covariance-only feedback prediction.

Three constructions are provided:

* ``dft`` -- phase-grid codewords ``exp(j pi m (2u/X - 1)) / sqrt(M)``,
  independent of channel statistics;
* ``skewed`` -- isotropic vectors coloured by the user's covariance square
  root;
* ``prediction-grid`` -- phase-grid codewords restricted to a user's dominant
  beam interval ``[x_min, x_max]``, used only to forecast feedback from
  statistics.

Codeword indices are 1-based.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import ContractViolation, DegenerateCovarianceError, InvalidInputError
from .numerics import hermitian_eig

# Codebooks with more words are never materialized; per-user bit loads above
# this are clipped (X = 4096 already oversamples M = 128 beams 32 times).
MAX_CODEBOOK_BITS = 12
# Above this many words the prediction argmax is evaluated per beam instead of
# per codeword.
_ENUMERATION_LIMIT = 1 << 16

KINDS = ("dft", "skewed", "prediction-grid")


@dataclass(frozen=True)
class Codebook:
    kind: str
    bits: int
    words: np.ndarray  # shape (X, M), one unit-norm codeword per row
    grid_params: tuple = None

    @property
    def size(self):
        return self.words.shape[0]

    @property
    def M(self):
        return self.words.shape[1]

    def word(self, index):
        """Codeword by 1-based index."""
        return self.words[index - 1]

    def to_text(self):
        """Serialize as text: ``#`` header lines, then one codeword per line
        with comma-separated ``re:im`` entries."""
        lines = [f"# kind = {self.kind}", f"# bits = {self.bits}", f"# M = {self.M}"]
        if self.grid_params is not None:
            lines.append(f"# grid = {self.grid_params[0]},{self.grid_params[1]}")
        for w in self.words:
            lines.append(",".join(f"{z.real!r}:{z.imag!r}" for z in w.tolist()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        meta = {}
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            row = []
            for pair in line.split(","):
                re_, im = pair.split(":")
                row.append(complex(float(re_), float(im)))
            rows.append(row)
        grid = None
        if "grid" in meta:
            lo, hi = meta["grid"].split(",")
            grid = (int(lo), int(hi))
        words = np.array(rows, dtype=complex)
        bits = int(meta.get("bits", round(math.log2(len(rows)))))
        return cls(kind=meta.get("kind", "dft"), bits=bits, words=words, grid_params=grid)


@dataclass(frozen=True)
class QuantizationResult:
    index: int
    word: np.ndarray
    alignment: float


@dataclass(frozen=True)
class PredictedFeedback:
    codeword_index: int
    beam_index: int


def _check_bits(B):
    if int(B) != B or B < 0:
        raise InvalidInputError(f"feedback bits must be a non-negative integer, got {B}")
    if B > MAX_CODEBOOK_BITS:
        raise InvalidInputError(
            f"{B} bits exceeds the materializable limit of {MAX_CODEBOOK_BITS}; clip with effective_bits()"
        )
    return int(B)


def effective_bits(B):
    """Per-user bit load actually used for a materialized codebook."""
    return min(int(B), MAX_CODEBOOK_BITS)


def _phase_grid(M, phases):
    m = np.arange(M)[None, :]
    return np.exp(1j * np.pi * m * np.asarray(phases)[:, None]) / np.sqrt(M)


def dft_codebook(M, B):
    B = _check_bits(B)
    X = 1 << B
    u = np.arange(1, X + 1)
    return Codebook(kind="dft", bits=B, words=_phase_grid(M, 2.0 * u / X - 1.0))


def covariance_sqrt(spatial):
    """Hermitian square root with negative eigenvalues clamped to zero."""
    eig = hermitian_eig(spatial)
    lam = np.sqrt(np.maximum(eig.eigenvalues, 0.0))
    U = eig.eigenvectors
    return (U * lam[None, :]) @ U.conj().T


def skewed_codebook(cov, B, seed):
    """Covariance-shaped random codebook ``Phi^(1/2) f_u / ||Phi^(1/2) f_u||``.

    The ``f_u`` are drawn sequentially from one stream, so under a fixed seed
    the ``B``-bit book is a prefix of the ``B+1``-bit book.
    """
    B = _check_bits(B)
    spatial = np.asarray(getattr(cov, "spatial", cov))
    if not np.any(np.abs(spatial) > 0):
        raise DegenerateCovarianceError("covariance is identically zero")
    X = 1 << B
    M = spatial.shape[0]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal((X, M, 2))
    F = g[..., 0] + 1j * g[..., 1]
    F /= np.linalg.norm(F, axis=1, keepdims=True)
    W = F @ covariance_sqrt(spatial).T
    norms = np.linalg.norm(W, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DegenerateCovarianceError("covariance annihilated a codebook seed vector")
    return Codebook(kind="skewed", bits=B, words=W / norms)


def _check_grid(M, x_min, x_max):
    if x_max is None:
        x_max = M
    if int(x_min) != x_min or int(x_max) != x_max:
        raise InvalidInputError(f"grid bounds must be integers, got ({x_min}, {x_max})")
    x_min, x_max = int(x_min), int(x_max)
    if not 1 <= x_min <= x_max <= M:
        raise InvalidInputError(f"grid bounds must satisfy 1 <= x_min <= x_max <= M, got ({x_min}, {x_max}, M={M})")
    return x_min, x_max


def grid_phase(M, X, u, x_min, x_max):
    """Phase parameter of prediction-grid codeword ``u``."""
    return (2.0 * x_min / M - 1.0) + u * 2.0 * (x_max - x_min) / (M * X)


def prediction_grid_codebook(M, B, x_min=1, x_max=None):
    B = _check_bits(B)
    x_min, x_max = _check_grid(M, x_min, x_max)
    X = 1 << B
    u = np.arange(1, X + 1)
    words = _phase_grid(M, grid_phase(M, X, u, x_min, x_max))
    return Codebook(kind="prediction-grid", bits=B, words=words, grid_params=(x_min, x_max))


def quantize(h, book):
    """Codeword maximizing ``|h^H c_u|^2``; ties go to the lowest index."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (book.M,):
        raise ContractViolation(f"channel of shape {h.shape} does not match codebook dimension {book.M}")
    gains = np.abs(book.words.conj() @ h) ** 2
    u = int(np.argmax(gains))
    energy = float(np.real(np.vdot(h, h)))
    alignment = 0.0 if energy == 0 else min(1.0, max(0.0, gains[u] / energy))
    return QuantizationResult(index=u + 1, word=book.words[u], alignment=alignment)


def round_half_away(x):
    """Nearest integer, halves rounded away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def grid_beam_index(u, X, x_min, x_max):
    """Beam ``round(x_min + (x_max - x_min) u / X)`` in exact arithmetic."""
    v = Fraction(x_min) + Fraction((x_max - x_min) * u, X)
    return math.floor(v + Fraction(1, 2))


def predict_feedback(beam_cov, M, B, x_min=1, x_max=None):
    """Forecast a user's feedback codeword from its beam-domain covariance.

    Codeword ``u`` of the prediction grid points at beam
    ``round(x_min + (x_max - x_min) u / X)``; the predicted codeword is the
    first one whose beam carries the most power.  ``B`` may exceed
    :data:`MAX_CODEBOOK_BITS` since no codebook is materialized.
    """
    beam_cov = np.asarray(beam_cov, dtype=float)
    if beam_cov.shape != (M,):
        raise ContractViolation(f"beam covariance must have length M={M}, got {beam_cov.shape}")
    if np.any(beam_cov < 0):
        raise InvalidInputError("beam covariance has negative entries")
    if not np.any(beam_cov > 0):
        raise DegenerateCovarianceError("beam covariance is identically zero")
    if int(B) != B or B < 0:
        raise InvalidInputError(f"feedback bits must be a non-negative integer, got {B}")
    x_min, x_max = _check_grid(M, x_min, x_max)
    X = 1 << int(B)
    span = x_max - x_min
    if X <= _ENUMERATION_LIMIT:
        u = np.arange(1, X + 1, dtype=np.int64)
        beams = (2 * X * x_min + 2 * span * u + X) // (2 * X)
        best = int(np.argmax(beam_cov[beams - 1]))
        u_star = best + 1
    else:
        # span < X here, so consecutive codewords never skip a beam and the
        # first codeword landing on beam m is the smallest u with
        # x_min + span*u/X >= m - 1/2.
        lo = grid_beam_index(1, X, x_min, x_max)
        hi = grid_beam_index(X, X, x_min, x_max)
        m_best = lo + int(np.argmax(beam_cov[lo - 1:hi]))
        if m_best == lo:
            u_star = 1
        else:
            u_star = max(1, -((-(2 * X * (m_best - x_min) - X)) // (2 * span)))
    beam = min(max(grid_beam_index(u_star, X, x_min, x_max), 1), M)
    return PredictedFeedback(codeword_index=u_star, beam_index=beam)
