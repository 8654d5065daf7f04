"""MIMO detector suite with a fit/predict estimator API.

fit() performs the per-coherence-interval preprocessing (equalizer
matrices, lattice reduction, per-layer even-integer searches) and predict()
detects individual channel observations, so one fitted detector serves every
observation drawn while the channel stays constant.  All detectors share
sklearn-style conventions: constructor arguments are stored verbatim,
get_params/set_params expose them, and fitted state carries a trailing
underscore.
"""

from __future__ import annotations

import inspect
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .alphabet import (
    bits_to_symbol,
    make_alphabet,
    quantize_pam,
    quantize_int,
    symbol_to_bits,
)
from .channel import (
    ComplexChannel,
    NoiseSpec,
    embed_complex,
    lmmse_inverse,
    mmse_error_matrix,
    pseudo_inverse,
)
from .intsearch import IlsProblem, lll_reduce, solve_brute, solve_lll, solve_sd
from .modarith import ParityContext, branch_parity, mod_recover

MZF_VARIANTS = ("plain", "scaled-alpha", "bitwise", "feedback")
SOLVERS = ("sd", "lll", "brute")
EQUALIZERS = ("zf", "lmmse")
PARITY_MODES = ("derived", "paper-literal")
NOISE_WEIGHTINGS = ("printed", "physical")
LAR_MODES = ("shifted", "literal")


@dataclass(frozen=True)
class PerturbationPlan:
    """Per-layer preprocessing result for the modulus detectors.

    q is the even perturbation (all zero when the layer is degenerate),
    combining_row is (tau * delta_k + alpha * q) @ Hplus precomputed, and
    zf_row is the plain equalizer row tau * delta_k @ Hplus used whenever the
    modulus is bypassed.
    """

    layer: int
    bit_layer: int  # 1-based bit layer; 0 for symbol-wise plans
    q: np.ndarray
    tau: float
    alpha: float
    combining_row: np.ndarray
    zf_row: np.ndarray
    degenerate: bool
    parity: ParityContext
    cost: float
    exact: bool


@dataclass(frozen=True)
class DetectionResult:
    """Hard decisions for one observation.

    symbols hold alphabet points, bits the +-1 matrix (column 0 is the
    weight-1 layer), layer_z the pre-quantization diagnostics: a vector for
    symbol-wise detectors, one column per bit stage otherwise.
    """

    symbols: np.ndarray
    bits: np.ndarray
    layer_z: np.ndarray


def is_degenerate(q, k: int) -> bool:
    """True when the perturbation touches no layer other than k."""
    q = np.asarray(q)
    return bool(np.all(np.delete(q, k) == 0))


def optimize_alpha(q, k: int, tau: float, hplus) -> tuple[float, np.ndarray]:
    """Best modulus scale >= 1 for a fixed perturbation.

    Minimizes ||(tau * delta_k + alpha * q) Hplus||^2 over |alpha| >= 1 in
    closed form.  A negative unconstrained optimum is absorbed by flipping
    the sign of q (still even), so the returned pair always has alpha >= 1.
    """
    q = np.asarray(q, dtype=np.int64)
    if not q.any():
        raise ValueError("alpha optimization needs a nonzero perturbation")
    hplus = np.asarray(hplus, dtype=float)
    d = tau * hplus[k]
    u = q @ hplus
    a0 = -float(d @ u) / float(u @ u)
    if a0 < 0:
        q = -q
        a0 = -a0
    return max(a0, 1.0), q


def _coerce_real_channel(channel) -> np.ndarray:
    """Accept a real matrix, a complex matrix, or a ComplexChannel."""
    if isinstance(channel, ComplexChannel):
        return embed_complex(channel)
    h = np.asarray(channel)
    if np.iscomplexobj(h):
        return embed_complex(h)
    h = h.astype(float)
    if h.ndim != 2 or h.shape[0] < h.shape[1] or h.shape[1] < 1:
        raise ValueError(f"channel must be N x K with N >= K >= 1, got {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("channel entries must be finite")
    return h


class MimoDetector:
    """Base class wiring the estimator conventions; subclasses implement
    _fit(h, n0) and _detect_one(y)."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"unknown parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def fit(self, channel, n0: float = 0.0):
        h = _coerce_real_channel(channel)
        if n0 < 0:
            raise ValueError(f"noise density must be >= 0, got {n0}")
        self.h_ = h
        self.k_ = h.shape[1]
        self.n0_ = float(n0)
        self.alphabet_ = make_alphabet(self.modulation)
        self._fit(h, float(n0))
        return self

    def _fit(self, h: np.ndarray, n0: float) -> None:
        raise NotImplementedError

    def _detect_one(self, y: np.ndarray) -> DetectionResult:
        raise NotImplementedError

    def _check_fitted(self):
        if not hasattr(self, "h_"):
            raise RuntimeError(f"{type(self).__name__} must be fitted before detecting")

    def detect(self, y) -> DetectionResult:
        """Full detection record for a single observation vector."""
        self._check_fitted()
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.h_.shape[0]:
            raise ValueError(f"observation length {y.size} != {self.h_.shape[0]}")
        return self._detect_one(y)

    def predict(self, y) -> np.ndarray:
        """Detected symbols; accepts a single observation or a stack of rows."""
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return self.detect(y).symbols
        return np.stack([self.detect(row).symbols for row in y])

    def predict_bits(self, y) -> np.ndarray:
        """Detected +-1 bits, shaped like predict() with a trailing nbits axis."""
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return self.detect(y).bits
        return np.stack([self.detect(row).bits for row in y])

    def _result_from_symbols(self, symbols, layer_z) -> DetectionResult:
        nbits = self.alphabet_.nbits
        bits = np.stack([symbol_to_bits(int(s), nbits) for s in symbols])
        return DetectionResult(
            symbols=np.asarray(symbols, dtype=float),
            bits=bits,
            layer_z=np.asarray(layer_z, dtype=float),
        )


class ZFDetector(MimoDetector):
    """Linear detection through the pseudo-inverse, quantized per layer."""

    def __init__(self, modulation: int = 4):
        self.modulation = modulation

    def _fit(self, h, n0):
        self.hplus_ = pseudo_inverse(h)

    def _detect_one(self, y):
        est = self.hplus_ @ y
        symbols = quantize_pam(est, self.alphabet_)
        return self._result_from_symbols(symbols, est)


class LMMSEDetector(MimoDetector):
    """Linear detection through the regularized inverse; needs n0 at fit."""

    def __init__(self, modulation: int = 4):
        self.modulation = modulation

    def _fit(self, h, n0):
        self.hplus_ = lmmse_inverse(h, NoiseSpec(n0))

    def _detect_one(self, y):
        est = self.hplus_ @ y
        symbols = quantize_pam(est, self.alphabet_)
        return self._result_from_symbols(symbols, est)


class MLDetector(MimoDetector):
    """Exhaustive minimum-distance detection over the full symbol grid.

    Candidate count sqrt(M)**K is capped by max_candidates; distance ties
    resolve to the lexicographically smallest symbol vector because the grid
    is enumerated in ascending order.
    """

    def __init__(self, modulation: int = 4, max_candidates: int = 10**7):
        self.modulation = modulation
        self.max_candidates = max_candidates

    def _fit(self, h, n0):
        k = h.shape[1]
        n_cand = self.alphabet_.sqrt_m**k
        if n_cand > self.max_candidates:
            raise ValueError(
                f"{n_cand:.3e} candidates exceed the cap {self.max_candidates:.0e};"
                " reduce K or the modulation order"
            )
        pts = self.alphabet_.points.astype(float)
        self.candidates_ = np.array(list(itertools.product(pts, repeat=k)))
        self.candidate_images_ = self.candidates_ @ h.T

    def _detect_one(self, y):
        resid = self.candidate_images_ - y
        costs = np.einsum("ij,ij->i", resid, resid)
        idx = int(np.argmin(costs))  # first minimum = lexicographic tie-break
        symbols = self.candidates_[idx]
        return self._result_from_symbols(symbols, self.candidate_images_[idx])


class LARDetector(MimoDetector):
    """Reduction-aided linear detection: equalize in the reduced basis,
    round to integers, map back through the unimodular transform.

    The default shifted mode first maps the odd symbol grid onto the integers
    through y' = (y + H 1) / 2 so the rounding lattice matches the symbol
    lattice; literal mode rounds the unshifted equalized vector and is kept
    for comparison.
    """

    def __init__(self, modulation: int = 4, delta: float = 0.75, mode: str = "shifted"):
        self.modulation = modulation
        self.delta = delta
        self.mode = mode

    def _fit(self, h, n0):
        if self.mode not in LAR_MODES:
            raise ValueError(f"mode must be one of {LAR_MODES}, got {self.mode!r}")
        self.reduction_ = lll_reduce(h, self.delta)
        self.hbar_inv_ = np.linalg.pinv(self.reduction_.bbar)
        self.shift_ = h @ np.ones(h.shape[1])

    def _detect_one(self, y):
        t = self.reduction_.t
        if self.mode == "shifted":
            z = quantize_int(self.hbar_inv_ @ ((y + self.shift_) / 2.0))
            raw = 2 * (t @ z) - 1
        else:
            z = quantize_int(self.hbar_inv_ @ y)
            raw = t @ z
        symbols = quantize_pam(raw.astype(float), self.alphabet_)
        return self._result_from_symbols(symbols, raw.astype(float))


class MZFDetector(MimoDetector):
    """Modulus detection: allow even-integer interference per layer, strip it
    with a mod-4*alpha fold, then quantize.

    variant selects the algorithm family:
      "plain"        per-layer even perturbations at the alphabet scale tau;
      "scaled-alpha" plain plus a closed-form modulus rescale per layer;
      "bitwise"      one perturbation search per bit layer at tau(n) = 2**(1-n),
                     each bit read off by a sign;
      "feedback"     bitwise decisions fed back layer by layer, reusing one
                     tau = 1 search for all stages.

    equalizer="lmmse" replaces the pseudo-inverse by the regularized inverse
    and optimizes the perturbations against the residual interference plus
    noise matrix instead of the inverse alone.  parity="paper-literal"
    reproduces the unconditional fold branch of the published pseudo-code
    instead of the derived parity rule.  noise_weighting picks the noise
    block weight of the residual matrix: "printed" uses n0, "physical"
    the amplitude-correct sqrt(n0 / 2).
    """

    def __init__(
        self,
        modulation: int = 4,
        variant: str = "plain",
        solver: str = "sd",
        equalizer: str = "zf",
        parity: str = "derived",
        sd_budget: int = 10**6,
        brute_bound: int = 8,
        lll_delta: float = 0.75,
        noise_weighting: str = "printed",
    ):
        self.modulation = modulation
        self.variant = variant
        self.solver = solver
        self.equalizer = equalizer
        self.parity = parity
        self.sd_budget = sd_budget
        self.brute_bound = brute_bound
        self.lll_delta = lll_delta
        self.noise_weighting = noise_weighting

    def _validate_params(self):
        for name, value, allowed in (
            ("variant", self.variant, MZF_VARIANTS),
            ("solver", self.solver, SOLVERS),
            ("equalizer", self.equalizer, EQUALIZERS),
            ("parity", self.parity, PARITY_MODES),
            ("noise_weighting", self.noise_weighting, NOISE_WEIGHTINGS),
        ):
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")

    def _fit(self, h, n0):
        self._validate_params()
        k = h.shape[1]
        alphabet = self.alphabet_
        if self.equalizer == "zf":
            self.hplus_ = pseudo_inverse(h)
            effective = self.hplus_
        else:
            self.hplus_ = lmmse_inverse(h, NoiseSpec(n0))
            if self.noise_weighting == "printed":
                effective = mmse_error_matrix(self.hplus_, h, NoiseSpec(n0))
            else:
                left = self.hplus_ @ h - np.eye(k)
                effective = np.hstack([left, math.sqrt(n0 / 2.0) * self.hplus_])
        basis = -effective
        self.reduction_ = lll_reduce(basis.T, self.lll_delta)

        if self.variant == "bitwise":
            stages = [(n, 2.0 ** (1 - n)) for n in range(1, alphabet.nbits + 1)]
        elif self.variant == "feedback":
            stages = [(0, 1.0)]
        else:
            stages = [(0, alphabet.tau)]

        plans = []
        for layer in range(k):
            per_layer = []
            for bit_layer, tau in stages:
                per_layer.append(
                    self._plan_layer(layer, bit_layer, tau, effective, basis)
                )
            plans.append(per_layer)
        self.plans_ = plans

    def _plan_layer(self, layer, bit_layer, tau, effective, basis) -> PerturbationPlan:
        problem = IlsProblem(tau * effective[layer], basis)
        if self.solver == "sd":
            sol = solve_sd(problem, self.sd_budget, self.reduction_)
        elif self.solver == "lll":
            sol = solve_lll(problem, self.reduction_)
        else:
            sol = solve_brute(problem, self.brute_bound)
        q = sol.q
        zf_row = tau * self.hplus_[layer]
        nlayers = self.alphabet_.nbits if bit_layer else 1
        if is_degenerate(q, layer):
            # self-only perturbations never beat q = 0 when tau <= 1; keep the
            # plain equalizer row so degenerate layers match ZF bit for bit
            q = np.zeros_like(q)
            return PerturbationPlan(
                layer=layer,
                bit_layer=bit_layer,
                q=q,
                tau=tau,
                alpha=1.0,
                combining_row=zf_row.copy(),
                zf_row=zf_row,
                degenerate=True,
                parity=ParityContext(0, bit_layer, nlayers),
                cost=problem.cost(q),
                exact=sol.exact,
            )
        alpha = 1.0
        if self.variant == "scaled-alpha":
            alpha, q = optimize_alpha(q, layer, tau, self.hplus_)
        combining = tau * self.hplus_[layer] + alpha * (q @ self.hplus_)
        cost_row = tau * effective[layer] + alpha * (q @ effective)
        return PerturbationPlan(
            layer=layer,
            bit_layer=bit_layer,
            q=q,
            tau=tau,
            alpha=alpha,
            combining_row=combining,
            zf_row=zf_row,
            degenerate=False,
            parity=ParityContext(int(q.sum()) // 2, bit_layer, nlayers),
            cost=float(cost_row @ cost_row),
            exact=sol.exact,
        )

    def _fold(self, r, plan: PerturbationPlan, stage: int | None = None):
        """Modulus recovery with the configured branch rule."""
        if self.parity == "paper-literal":
            return mod_recover(r, plan.alpha, True)
        ctx = plan.parity
        if stage is not None:
            ctx = ParityContext(ctx.half_q_sum, stage, self.alphabet_.nbits)
        return mod_recover(r, plan.alpha, branch_parity(ctx))

    def _detect_one(self, y):
        if self.variant == "bitwise":
            return self._detect_bitwise(y)
        if self.variant == "feedback":
            return self._detect_feedback(y)
        return self._detect_symbolwise(y)

    def _detect_symbolwise(self, y):
        alphabet = self.alphabet_
        tau = alphabet.tau
        z = np.empty(self.k_)
        symbols = np.empty(self.k_)
        for k in range(self.k_):
            plan = self.plans_[k][0]
            if plan.degenerate:
                z[k] = plan.zf_row @ y
            else:
                z[k] = self._fold(plan.combining_row @ y, plan)
            symbols[k] = round(quantize_pam(z[k], alphabet, scale=tau) / tau)
        return self._result_from_symbols(symbols, z)

    def _detect_bitwise(self, y):
        alphabet = self.alphabet_
        nbits = alphabet.nbits
        z = np.empty((self.k_, nbits))
        bits = np.empty((self.k_, nbits), dtype=np.int64)
        for k in range(self.k_):
            top_degenerate = self.plans_[k][nbits - 1].degenerate
            for j in range(nbits):
                plan = self.plans_[k][j]
                n = plan.bit_layer
                if n == nbits and top_degenerate:
                    z[k, j] = plan.zf_row @ y
                else:
                    z[k, j] = self._fold(plan.combining_row @ y, plan)
                bits[k, j] = 1 if z[k, j] >= 0 else -1
        symbols = np.array([bits_to_symbol(bits[k]) for k in range(self.k_)], dtype=float)
        return DetectionResult(symbols=symbols, bits=bits, layer_z=z)

    def _detect_feedback(self, y):
        alphabet = self.alphabet_
        nbits = alphabet.nbits
        z = np.empty((self.k_, nbits))
        bits = np.empty((self.k_, nbits), dtype=np.int64)
        yhat = y.astype(float).copy()
        for n in range(1, nbits + 1):
            for k in range(self.k_):
                plan = self.plans_[k][0]
                if plan.degenerate:
                    if self.parity == "paper-literal" or n == nbits:
                        z[k, n - 1] = plan.zf_row @ yhat
                    else:
                        # stripped of its own perturbation the layer still has
                        # undetected higher bits to fold away
                        z[k, n - 1] = self._fold(plan.zf_row @ yhat, plan, stage=n)
                else:
                    z[k, n - 1] = self._fold(plan.combining_row @ yhat, plan, stage=n)
                bits[k, n - 1] = 1 if z[k, n - 1] >= 0 else -1
            yhat = (yhat - self.h_ @ bits[:, n - 1].astype(float)) / 2.0
        symbols = np.array([bits_to_symbol(bits[k]) for k in range(self.k_)], dtype=float)
        return DetectionResult(symbols=symbols, bits=bits, layer_z=z)
