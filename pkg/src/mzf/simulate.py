"""Monte Carlo experiment runner with deterministic per-trial substreams.

Trial i of an experiment draws everything from default_rng([seed, i]), so
results are reproducible bit for bit regardless of how trials are split
across worker processes.  Within a trial all detectors see the same channel,
symbols, and noise, which pairs the comparison and removes common randomness
from detector-vs-detector gaps.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .alphabet import make_alphabet, random_symbols, symbol_to_bits
from .channel import embed_complex, generate_channel, generate_real_channel
from .detect import (
    LARDetector,
    LMMSEDetector,
    MLDetector,
    MZFDetector,
    ZFDetector,
)
from .metrics import BerAccumulator, detector_gains, snr_to_n0

DETECTOR_KINDS = ("zf", "lmmse", "ml", "lar", "mzf", "mzf-ext1", "mzf-ext2", "mzf-ext3")
MZF_KIND_VARIANTS = {
    "mzf": "plain",
    "mzf-ext1": "scaled-alpha",
    "mzf-ext2": "bitwise",
    "mzf-ext3": "feedback",
}
CSV_COLUMNS = ("detector", "snr_db", "bit_layer", "ber", "ser", "mean_gain_db", "trials", "wall_time_ms")


@dataclass(frozen=True)
class DetectorSpec:
    """Parsed form of a detector id string 'kind[+equalizer][:solver]'."""

    kind: str
    equalizer: str = "zf"
    solver: str = "sd"

    @property
    def label(self) -> str:
        label = self.kind
        if self.equalizer != "zf":
            label += f"+{self.equalizer}"
        if self.kind in MZF_KIND_VARIANTS:
            label += f":{self.solver}"
        return label


def parse_detector_spec(text: str) -> DetectorSpec:
    body, _, solver = text.partition(":")
    kind, _, equalizer = body.partition("+")
    kind = kind.strip().lower()
    if kind not in DETECTOR_KINDS:
        raise ValueError(f"unknown detector kind {kind!r}; choose from {DETECTOR_KINDS}")
    equalizer = equalizer.strip().lower() or "zf"
    solver = solver.strip().lower() or "sd"
    if equalizer not in ("zf", "lmmse"):
        raise ValueError(f"unknown equalizer {equalizer!r} in {text!r}")
    if solver not in ("sd", "lll", "brute"):
        raise ValueError(f"unknown solver {solver!r} in {text!r}")
    if kind not in MZF_KIND_VARIANTS and equalizer != "zf":
        raise ValueError(f"detector {kind!r} takes no equalizer suffix")
    return DetectorSpec(kind=kind, equalizer=equalizer, solver=solver)


@dataclass(frozen=True)
class SimConfig:
    """Everything one experiment run depends on."""

    modulation: int = 4
    kc: int | None = None          # complex antennas; real dimension is 2 kc
    k_real: int | None = None      # unstructured real channel dimension
    snr_db: tuple = (10.0,)
    trials: int = 1000
    detectors: tuple = ("zf", "mzf:sd")
    seed: int = 0
    lll_delta: float = 0.75
    sd_budget: int = 10**6
    brute_bound: int = 8
    parity_mode: str = "derived"
    lar_mode: str = "shifted"
    noise_weighting: str = "printed"
    timing: bool = True
    workers: int = 1

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.snr_db:
            raise ValueError("snr_db must not be empty")
        if (self.kc is None) == (self.k_real is None):
            raise ValueError("exactly one of kc and k_real must be set")
        if self.kc is not None and self.kc < 1:
            raise ValueError(f"kc must be >= 1, got {self.kc}")
        if self.k_real is not None and self.k_real < 1:
            raise ValueError(f"k_real must be >= 1, got {self.k_real}")
        if not self.detectors:
            raise ValueError("detectors must not be empty")
        if self.parity_mode not in ("derived", "paper-literal"):
            raise ValueError(f"parity_mode must be derived or paper-literal, got {self.parity_mode!r}")
        if self.lar_mode not in ("shifted", "literal"):
            raise ValueError(f"lar_mode must be shifted or literal, got {self.lar_mode!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        make_alphabet(self.modulation)  # raises on a bad modulation order
        for spec in self.detectors:
            parse_detector_spec(spec)


@dataclass(frozen=True)
class SimRecord:
    detector: str
    snr_db: float
    bit_layer: str  # "1", "2", ... or "all"
    ber: float
    ser: float
    mean_gain_db: float
    trials: int
    wall_time_ms: int

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


def build_detector(spec: DetectorSpec, cfg: SimConfig):
    if spec.kind == "zf":
        return ZFDetector(modulation=cfg.modulation)
    if spec.kind == "lmmse":
        return LMMSEDetector(modulation=cfg.modulation)
    if spec.kind == "ml":
        return MLDetector(modulation=cfg.modulation)
    if spec.kind == "lar":
        return LARDetector(modulation=cfg.modulation, delta=cfg.lll_delta, mode=cfg.lar_mode)
    return MZFDetector(
        modulation=cfg.modulation,
        variant=MZF_KIND_VARIANTS[spec.kind],
        solver=spec.solver,
        equalizer=spec.equalizer,
        parity=cfg.parity_mode,
        sd_budget=cfg.sd_budget,
        brute_bound=cfg.brute_bound,
        lll_delta=cfg.lll_delta,
        noise_weighting=cfg.noise_weighting,
    )


def _noise_dependent(spec: DetectorSpec) -> bool:
    return spec.kind == "lmmse" or spec.equalizer == "lmmse"


def _trial_channel(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.kc is not None:
        return embed_complex(generate_channel(rng, cfg.kc))
    return generate_real_channel(rng, cfg.k_real)


def _count_exhausted(det, spec: DetectorSpec) -> int:
    """Sphere-search plans that ran out of budget (approximate fallback)."""
    if spec.solver != "sd" or not hasattr(det, "plans_"):
        return 0
    return sum(not p.exact for row in det.plans_ for p in row)


def _run_trials(cfg: SimConfig, trial_indices) -> tuple[dict, np.ndarray, int]:
    """Process a batch of trials; returns accumulators keyed by
    (detector index, snr index), per-(detector, snr) wall times in ns, and
    the number of budget-exhausted sphere searches."""
    specs = [parse_detector_spec(s) for s in cfg.detectors]
    alphabet = make_alphabet(cfg.modulation)
    n_snr = len(cfg.snr_db)
    n0s = [snr_to_n0(s, alphabet) for s in cfg.snr_db]
    acc: dict = {}
    times = np.zeros((len(specs), n_snr), dtype=np.int64)
    exhausted = 0

    for trial in trial_indices:
        rng = np.random.default_rng([cfg.seed, trial])
        h = _trial_channel(cfg, rng)
        k = h.shape[1]
        draws = []
        for _ in range(n_snr):
            x = random_symbols(rng, alphabet, k)
            noise = rng.standard_normal(h.shape[0])
            draws.append((x, noise))
        truths = [
            (x, np.stack([symbol_to_bits(int(s), alphabet.nbits) for s in x]))
            for x, _ in draws
        ]

        for d_idx, spec in enumerate(specs):
            det = build_detector(spec, cfg)
            fit_shared = not _noise_dependent(spec)
            t0 = time.perf_counter_ns()
            if fit_shared:
                det.fit(h)
                gains = detector_gains(det) if hasattr(det, "plans_") else []
                exhausted += _count_exhausted(det, spec)
            shared_cost_ns = time.perf_counter_ns() - t0 if fit_shared else 0
            for s_idx in range(n_snr):
                t1 = time.perf_counter_ns()
                if not fit_shared:
                    det.fit(h, n0=n0s[s_idx].n0)
                    gains = detector_gains(det) if hasattr(det, "plans_") else []
                    exhausted += _count_exhausted(det, spec)
                x, noise = draws[s_idx]
                y = h @ x + np.sqrt(n0s[s_idx].n0 / 2.0) * noise
                result = det.detect(y)
                times[d_idx, s_idx] += time.perf_counter_ns() - t1
                cell = acc.get((d_idx, s_idx))
                if cell is None:
                    cell = BerAccumulator(k=k, nbits=alphabet.nbits)
                    acc[(d_idx, s_idx)] = cell
                cell.accumulate(truths[s_idx][0], truths[s_idx][1], result)
                cell.add_gains(trial, gains)
            times[d_idx, :] += shared_cost_ns // n_snr
    return acc, times, exhausted


def _worker_count(cfg: SimConfig) -> int:
    cap = os.environ.get("MZF_THREADS")
    workers = cfg.workers
    if cap:
        workers = min(workers, max(1, int(cap)))
    return min(workers, cfg.trials)


def _pool_context():
    # fork keeps workers usable from any parent (no __main__ re-import) and
    # is cheaper; fall back to spawn where fork does not exist
    methods = multiprocessing.get_all_start_methods()
    return multiprocessing.get_context("fork" if "fork" in methods else "spawn")


def _chunks(n_trials: int, n_chunks: int) -> list[list[int]]:
    return [list(range(i, n_trials, n_chunks)) for i in range(n_chunks)]


def run_experiment(cfg: SimConfig) -> list[SimRecord]:
    """Run the configured sweep and return one record per
    (detector, SNR point, bit layer) plus an aggregate "all" row each."""
    cfg.validate()
    workers = _worker_count(cfg)
    if workers == 1:
        acc, times, exhausted = _run_trials(cfg, range(cfg.trials))
    else:
        parts = _chunks(cfg.trials, workers)
        with _pool_context().Pool(workers) as pool:
            results = pool.starmap(_run_trials, [(cfg, part) for part in parts])
        acc, times, exhausted = results[0]
        for other_acc, other_times, other_exhausted in results[1:]:
            times += other_times
            exhausted += other_exhausted
            for key, cell in other_acc.items():
                if key in acc:
                    acc[key].merge(cell)
                else:
                    acc[key] = cell
    if exhausted:
        print(
            f"warning: {exhausted} sphere searches hit the node budget and "
            "returned approximate perturbations",
            file=sys.stderr,
        )

    alphabet = make_alphabet(cfg.modulation)
    specs = [parse_detector_spec(s) for s in cfg.detectors]
    records = []
    for d_idx, spec in enumerate(specs):
        for s_idx, snr in enumerate(cfg.snr_db):
            cell = acc[(d_idx, s_idx)]
            ms = int(times[d_idx, s_idx] // 1_000_000) if cfg.timing else 0
            for bit_layer in range(1, alphabet.nbits + 1):
                records.append(
                    SimRecord(
                        detector=spec.label,
                        snr_db=float(snr),
                        bit_layer=str(bit_layer),
                        ber=float(cell.ber_layer(bit_layer)),
                        ser=float(cell.ser),
                        mean_gain_db=float(cell.mean_gain_db),
                        trials=cell.trials,
                        wall_time_ms=ms,
                    )
                )
            records.append(
                SimRecord(
                    detector=spec.label,
                    snr_db=float(snr),
                    bit_layer="all",
                    ber=float(cell.ber),
                    ser=float(cell.ser),
                    mean_gain_db=float(cell.mean_gain_db),
                    trials=cell.trials,
                    wall_time_ms=ms,
                )
            )
    return records


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # builtin repr: shortest exact decimal
    return str(value)


def emit(records: list[SimRecord], fmt: str, path: str) -> None:
    """Write records as CSV (fixed column set, LF endings) or JSON."""
    if not records:
        raise ValueError("nothing to emit")
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for rec in records:
                writer.writerow([_fmt(v) for v in rec.as_dict().values()])
    elif fmt == "json":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            json.dump([rec.as_dict() for rec in records], fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def load_records(path: str) -> list[SimRecord]:
    """Read back a JSON record file (inverse of emit for fmt='json')."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [SimRecord(**item) for item in data]


@dataclass(frozen=True)
class GainSample:
    trial: int
    layer: int
    gain_db: float


def _gain_trials(cfg: SimConfig, trial_indices) -> list[GainSample]:
    spec = parse_detector_spec(cfg.detectors[0])
    if spec.kind not in MZF_KIND_VARIANTS:
        raise ValueError("gain experiments need a modulus detector first in the list")
    samples = []
    for trial in trial_indices:
        rng = np.random.default_rng([cfg.seed, trial])
        h = _trial_channel(cfg, rng)
        det = build_detector(spec, cfg).fit(h)
        for g in detector_gains(det):
            samples.append(GainSample(trial=trial, layer=g.layer, gain_db=g.gain_db))
    return samples


def run_gain_experiment(cfg: SimConfig) -> list[GainSample]:
    """Per-layer post-processing SNR gain samples over random channels."""
    cfg.validate()
    workers = _worker_count(cfg)
    if workers == 1:
        return _gain_trials(cfg, range(cfg.trials))
    parts = _chunks(cfg.trials, workers)
    with _pool_context().Pool(workers) as pool:
        results = pool.starmap(_gain_trials, [(cfg, part) for part in parts])
    samples = [s for part in results for s in part]
    samples.sort(key=lambda s: (s.trial, s.layer))
    return samples


def emit_gain_samples(samples: list[GainSample], path: str) -> None:
    if not samples:
        raise ValueError("nothing to emit")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("trial", "layer", "gain_db"))
        for s in samples:
            writer.writerow((s.trial, s.layer, repr(s.gain_db)))
