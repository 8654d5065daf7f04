"""Channel model: complex-to-real embedding, random generation, equalizers.

A complex N x K channel is handled through its real 2N x 2K embedding
[[Re, -Im], [Im, Re]]; all detectors operate on the real model
y = H x + n with noise covariance (N0 / 2) * I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative cutoff below which a singular value counts as zero.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class NoiseSpec:
    """Noise spectral density; the real-noise covariance is (n0 / 2) * I."""

    n0: float

    def __post_init__(self):
        if not np.isfinite(self.n0) or self.n0 < 0:
            raise ValueError(f"noise density must be finite and >= 0, got {self.n0}")


@dataclass(frozen=True)
class ComplexChannel:
    """Complex channel matrix, N receive x K transmit antennas."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] < e.shape[1] or e.shape[1] < 1:
            raise ValueError(f"channel must be N x K with N >= K >= 1, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "entries", e)


def embed_complex(mat) -> np.ndarray:
    """Real embedding of a complex matrix or vector.

    Matrices map to [[Re, -Im], [Im, Re]]; vectors stack Re over Im.  The
    embedding is a ring homomorphism, so embed(A) @ embed(B) == embed(A @ B).
    """
    if isinstance(mat, ComplexChannel):
        mat = mat.entries
    m = np.asarray(mat, dtype=complex)
    re, im = m.real, m.imag
    if m.ndim == 1:
        return np.concatenate([re, im])
    if m.ndim != 2:
        raise ValueError(f"expected a matrix or vector, got ndim={m.ndim}")
    return np.block([[re, -im], [im, re]])


def generate_channel(rng: np.random.Generator, kc: int) -> ComplexChannel:
    """Draw a kc x kc complex channel with N(0, 1) real and imaginary parts.

    Every entry of the real embedding is then zero-mean unit-variance; the
    complex entries have variance 2.
    """
    if kc < 1:
        raise ValueError(f"need at least one antenna, got kc={kc}")
    re = rng.standard_normal((kc, kc))
    im = rng.standard_normal((kc, kc))
    return ComplexChannel(re + 1j * im)


def generate_real_channel(rng: np.random.Generator, k: int) -> np.ndarray:
    """Unstructured k x k real i.i.d. N(0, 1) channel.

    Comparison variant without the block structure the complex embedding
    imposes; the simulation default uses generate_channel + embed_complex.
    """
    if k < 1:
        raise ValueError(f"need at least one dimension, got k={k}")
    return rng.standard_normal((k, k))


def pseudo_inverse(h) -> np.ndarray:
    """Left pseudo-inverse of a full-column-rank real matrix.

    Raises if any singular value falls below RANK_RTOL times the largest,
    naming the offending index.
    """
    h = np.asarray(h, dtype=float)
    u, s, vt = np.linalg.svd(h, full_matrices=False)
    tol = RANK_RTOL * s[0] if s.size else 0.0
    bad = np.flatnonzero(s <= tol)
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"rank-deficient matrix: singular value {i} is {s[i]:.3e}"
            f" (tolerance {tol:.3e})"
        )
    return (vt.T / s) @ u.T


def lmmse_inverse(h, noise: NoiseSpec) -> np.ndarray:
    """Regularized equalizer Ht (H Ht + N0 I)^-1 (real case)."""
    h = np.asarray(h, dtype=float)
    gram = h @ h.T + noise.n0 * np.eye(h.shape[0])
    try:
        inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError as err:
        raise ValueError(
            f"equalizer Gram matrix is singular (n0={noise.n0})"
        ) from err
    return h.T @ inv


def mmse_error_matrix(hplus, h, noise: NoiseSpec) -> np.ndarray:
    """Residual interference-plus-noise matrix [Hplus H - I, N0 Hplus].

    With an exact pseudo-inverse the left block vanishes and only the noise
    block remains.
    """
    hplus = np.asarray(hplus, dtype=float)
    h = np.asarray(h, dtype=float)
    left = hplus @ h - np.eye(hplus.shape[0])
    return np.hstack([left, noise.n0 * hplus])


def apply_channel(h, x, noise: NoiseSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """y = H x + n with i.i.d. N(0, N0/2) noise; n0=0 gives the exact product."""
    h = np.asarray(h, dtype=float)
    y = h @ np.asarray(x, dtype=float)
    if noise.n0 > 0:
        if rng is None:
            raise ValueError("an rng stream is required when n0 > 0")
        y = y + np.sqrt(noise.n0 / 2.0) * rng.standard_normal(h.shape[0])
    return y


@dataclass(frozen=True)
class RealChannel:
    """Real channel with its cached equalizer matrix."""

    h: np.ndarray
    hplus: np.ndarray
    kind: str  # "zf-inverse" or "lmmse-inverse"

    @classmethod
    def from_real(cls, h, kind: str = "zf-inverse", noise: NoiseSpec | None = None) -> "RealChannel":
        h = np.asarray(h, dtype=float)
        if kind == "zf-inverse":
            hplus = pseudo_inverse(h)
        elif kind == "lmmse-inverse":
            hplus = lmmse_inverse(h, noise if noise is not None else NoiseSpec(0.0))
        else:
            raise ValueError(f"unknown equalizer kind {kind!r}")
        return cls(h=h, hplus=hplus, kind=kind)

    @classmethod
    def from_complex(cls, channel, kind: str = "zf-inverse", noise: NoiseSpec | None = None) -> "RealChannel":
        return cls.from_real(embed_complex(channel), kind=kind, noise=noise)
