"""PAM constellations, quantizers, and the additive bit mapping.

The real-valued model of an M-QAM link carries sqrt(M)-PAM symbols per
dimension, drawn from the odd integers {+-1, +-3, ..., +-(sqrt(M)-1)}.
The modulus detector additionally needs a scale tau chosen so that the
distance from 2 to the largest point of tau*A is half the point spacing,
which gives tau = 2**(1 - log2(sqrt(M))).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PamAlphabet:
    """Real PAM point set for one dimension of an M-QAM constellation."""

    m: int                 # complex QAM cardinality, power of 4
    sqrt_m: int
    points: np.ndarray     # odd integers, ascending
    nbits: int             # log2(sqrt_m) bits per real symbol
    tau: float             # modulus scale, 2**(1 - nbits)
    energy: float          # mean square of points, (m - 1) / 3


def make_alphabet(m: int) -> PamAlphabet:
    """Build the sqrt(M)-PAM alphabet for M-QAM, M a power of 4."""
    if m < 4:
        raise ValueError(f"modulation order must be >= 4, got {m}")
    nbits = round(np.log2(m) / 2)
    if 4**nbits != m:
        raise ValueError(f"modulation order must be a power of 4, got {m}")
    sqrt_m = 2**nbits
    points = np.arange(-(sqrt_m - 1), sqrt_m, 2, dtype=np.int64)
    return PamAlphabet(
        m=m,
        sqrt_m=sqrt_m,
        points=points,
        nbits=nbits,
        tau=2.0 ** (1 - nbits),
        energy=(m - 1) / 3.0,
    )


def quantize_pam(v, alphabet: PamAlphabet, scale: float = 1.0):
    """Quantize to the nearest point of scale*points.

    Ties go to the point of smaller absolute value, and between +-p to -p,
    so quantization is deterministic and platform independent.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    order = sorted(alphabet.points.tolist(), key=lambda p: (abs(p), p))
    pts = scale * np.asarray(order, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    d = np.abs(v_arr[..., None] - pts)
    idx = np.argmin(d, axis=-1)  # first hit wins, order encodes the tie rule
    out = pts[idx]
    return out if v_arr.ndim else float(out)


def quantize_int(v):
    """Nearest integer; halfway ties round to the even integer."""
    out = np.rint(np.asarray(v, dtype=float)).astype(np.int64)
    return out if np.ndim(v) else int(out)


def quantize_even_int(v):
    """Nearest even integer; halfway ties round toward smaller magnitude."""
    h = np.asarray(v, dtype=float) / 2.0
    out = (2 * np.sign(h) * np.ceil(np.abs(h) - 0.5)).astype(np.int64)
    return out if np.ndim(v) else int(out)


def bits_to_symbol(u) -> int:
    """Map +-1 bits (index 0 is the weight-1 layer) to an odd PAM point."""
    u = np.asarray(u, dtype=np.int64)
    if u.ndim != 1 or not np.all(np.abs(u) == 1):
        raise ValueError("bit vector must be one-dimensional with +-1 entries")
    weights = 2 ** np.arange(u.size, dtype=np.int64)
    return int(u @ weights)


def symbol_to_bits(x: int, nbits: int) -> np.ndarray:
    """Invert bits_to_symbol; x must be odd with |x| <= 2**nbits - 1."""
    x = int(x)
    if x % 2 == 0 or abs(x) > 2**nbits - 1:
        raise ValueError(f"symbol {x} is not an odd point of the {nbits}-bit alphabet")
    u = np.empty(nbits, dtype=np.int64)
    res = x
    for b in range(nbits - 1, -1, -1):
        u[b] = 1 if res > 0 else -1
        res -= u[b] * 2**b
    return u


def random_symbols(rng: np.random.Generator, alphabet: PamAlphabet, k: int) -> np.ndarray:
    """Draw k i.i.d. uniform symbols from the alphabet."""
    if k < 1:
        raise ValueError(f"need at least one symbol, got k={k}")
    idx = rng.integers(0, alphabet.sqrt_m, size=k)
    return alphabet.points[idx].astype(float)
