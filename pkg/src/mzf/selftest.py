"""Quick self-contained property suites for the selftest CLI subcommand."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .alphabet import bits_to_symbol, make_alphabet, random_symbols, symbol_to_bits
from .channel import generate_real_channel
from .detect import LARDetector, MLDetector, MZFDetector, ZFDetector
from .intsearch import IlsProblem, lll_reduce, solve_brute, solve_sd
from .modarith import mod_recover


@dataclass(frozen=True)
class SelfTestResult:
    name: str
    passed: bool
    detail: str


def _fold_round_trip(rng: np.random.Generator, instances: int) -> SelfTestResult:
    failures = 0
    for _ in range(instances):
        alpha = Fraction(rng.integers(1, 5))
        z = Fraction(int(rng.integers(-1999, 2000)), 1000) * alpha  # |z| < 2 alpha
        n_terms = int(rng.integers(1, 6))
        p = [2 * int(v) for v in rng.integers(-6, 7, size=n_terms)]
        b = [2 * int(v) + 1 for v in rng.integers(-6, 7, size=n_terms)]
        y = z + alpha * sum(pi * bi for pi, bi in zip(p, b))
        parity_odd = (sum(p) // 2) % 2 == 1
        if mod_recover(y, alpha, parity_odd) != z:
            failures += 1
    return SelfTestResult(
        "fold round trip (exact rationals)",
        failures == 0,
        f"{instances - failures}/{instances} recovered exactly",
    )


def _sphere_vs_brute(rng: np.random.Generator, instances: int) -> SelfTestResult:
    failures = 0
    for i in range(instances):
        h = generate_real_channel(rng, 4)
        hplus = np.linalg.pinv(h)
        basis = -hplus
        tau = 1.0 if i % 2 == 0 else 0.5
        problem = IlsProblem(tau * hplus[i % 4], basis)
        cache = lll_reduce(basis.T)
        sd = solve_sd(problem, cache=cache)
        brute = solve_brute(problem, bound=8)
        if abs(sd.cost - brute.cost) > 1e-9 * max(1.0, brute.cost):
            failures += 1
    return SelfTestResult(
        "sphere search equals box oracle",
        failures == 0,
        f"{instances - failures}/{instances} matched",
    )


def _lll_validity(rng: np.random.Generator, instances: int) -> SelfTestResult:
    failures = 0
    for _ in range(instances):
        m = rng.standard_normal((8, 8))
        red = lll_reduce(m)
        if not np.allclose(red.bbar, m @ red.t, atol=1e-9):
            failures += 1
    return SelfTestResult(
        "reduction reconstructs its input",
        failures == 0,
        f"{instances - failures}/{instances} valid",
    )


def _noiseless_recovery(rng: np.random.Generator, channels: int) -> SelfTestResult:
    failures = 0
    detectors = [
        ZFDetector,
        lambda modulation: MZFDetector(modulation=modulation, solver="sd"),
        lambda modulation: MZFDetector(modulation=modulation, variant="bitwise"),
        lambda modulation: MZFDetector(modulation=modulation, variant="feedback"),
        MLDetector,
        LARDetector,
    ]
    for i in range(channels):
        k = int(rng.choice([2, 4]))
        m = int(rng.choice([4, 16]))
        alphabet = make_alphabet(m)
        h = generate_real_channel(rng, k)
        x = random_symbols(rng, alphabet, k)
        y = h @ x
        for factory in detectors:
            det = factory(m).fit(h)
            if not np.array_equal(det.detect(y).symbols, x):
                failures += 1
    return SelfTestResult(
        "noiseless detection is exact",
        failures == 0,
        f"{channels} channels x {len(detectors)} detectors, {failures} failures",
    )


def _bit_map_bijection() -> SelfTestResult:
    ok = True
    for nbits in (1, 2, 3, 4):
        alphabet = make_alphabet(4**nbits)
        seen = set()
        for point in alphabet.points:
            u = symbol_to_bits(int(point), nbits)
            seen.add(tuple(u))
            ok = ok and bits_to_symbol(u) == point
        ok = ok and len(seen) == alphabet.sqrt_m
    return SelfTestResult("bit map is a bijection", ok, "orders 4..256")


def run_selftest(seed: int = 0) -> list[SelfTestResult]:
    rng = np.random.default_rng(seed)
    return [
        _fold_round_trip(rng, 20000),
        _sphere_vs_brute(rng, 40),
        _lll_validity(rng, 40),
        _noiseless_recovery(rng, 25),
        _bit_map_bijection(),
    ]
