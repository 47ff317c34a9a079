"""End-to-end ISAC evaluation: BASK over the RIS with context-driven configuration choice.

Every episode draws its perturber walk, data bits and unit noise samples
from the episode seed alone. All strategies and SNR points therefore see the
same world, and strategy comparisons are paired.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from richris.inference import InferenceBank, Mode, flatten_complex, mlp_forward
from richris.noise import INFINITE_SNR, NoiseModel, add_awgn, reference_power
from richris.optimizer import CodeBook, ConfigPair, lookup, random_configs
from richris.scenario import SHAPES, PerturberState, Shape

__all__ = [
    "INFINITE_SNR",
    "NoiseModel",
    "add_awgn",
    "reference_power",
    "bask_detect",
    "Strategy",
    "EpisodeSpec",
    "Metrics",
    "ContextTracker",
    "perturber_walk",
    "run_episode",
    "snr_sweep",
    "rssi_constellation",
    "CalibrationMismatch",
]


class CalibrationMismatch(ValueError):
    pass


def bask_detect(y, tau):
    """1 when |y| exceeds the threshold, else 0."""
    if not tau > 0:
        raise ValueError("detection threshold must be positive")
    return int(abs(y) > tau)


class Strategy(enum.Enum):
    SELF_ADAPTIVE = "self_adaptive"
    PERFECT_CONTEXT = "perfect_context"
    CONTEXT_IGNORANT = "context_ignorant"


STRATEGIES = tuple(Strategy)


@dataclass(frozen=True)
class EpisodeSpec:
    n_symbols: int
    snr_db: float
    strategy: Strategy
    step: float = 0.01
    shape_change: float = 0.01
    bootstrap: int = 8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if not self.n_symbols >= self.bootstrap >= 1:
            raise ValueError("need n_symbols >= bootstrap >= 1")
        if not 0.0 <= self.shape_change <= 1.0:
            raise ValueError("shape-change probability must lie in [0, 1]")
        if not 0.0 <= self.step <= 1.0:
            raise ValueError("walk step must lie in [0, 1]")


@dataclass
class Metrics:
    """Post-bootstrap results; sensing fields are NaN for strategies that do not sense."""

    ber: float
    shape_accuracy: float
    localization_error: float
    n_symbols: int
    bit_errors: int
    level0: float
    level1: float
    trace: list = field(default_factory=list, repr=False)


def perturber_walk(n, step, shape_change, rng, shapes=SHAPES):
    """Reflecting +-step walk on [0, 1]; the shape switches to another with probability ``shape_change``."""
    p = float(rng.uniform())
    s = int(rng.integers(len(shapes)))
    moves = rng.integers(0, 2, n) * 2 - 1
    changes = rng.uniform(size=n) < shape_change
    hops = rng.integers(1, len(shapes), n)
    out = []
    for t in range(n):
        out.append(PerturberState(p, shapes[s]))
        p += step * moves[t]
        if p > 1.0:
            p = 2.0 - p
        elif p < 0.0:
            p = -p
        if changes[t]:
            s = (s + int(hops[t])) % len(shapes)
    return out


class ContextTracker:
    """Fuses per-symbol estimates into the context used for the next configuration choice.

    Shape log-probabilities accumulate with exponential forgetting; the
    position is the median of the most recent estimates.
    """

    def __init__(self, forgetting=0.8, window=5):
        self.forgetting = forgetting
        self.window = window
        self.logp = np.zeros(len(SHAPES))
        self.recent = deque(maxlen=window)

    def reset(self, probs, p_hat):
        self.logp = np.log(np.maximum(probs, 1e-12))
        self.recent.clear()
        self.recent.append(float(p_hat))

    def update(self, probs, p_hat):
        self.logp = self.forgetting * self.logp + np.log(np.maximum(probs, 1e-12))
        self.recent.append(float(p_hat))

    @property
    def shape(self):
        return Shape(int(np.argmax(self.logp)))

    @property
    def position(self):
        return float(np.median(self.recent))


def _episode_streams(seed):
    walk, bits, ue, aux = np.random.SeedSequence(int(seed)).spawn(4)
    return (np.random.default_rng(walk), np.random.default_rng(bits), np.random.default_rng(ue),
            np.random.default_rng(aux))


def check_artifacts(book: CodeBook, bank_a: InferenceBank, bank_b: InferenceBank):
    if bank_a is not None and bank_a.mode is not Mode.A:
        raise CalibrationMismatch("bootstrap bank must be Mode A")
    if bank_b is not None:
        if bank_b.mode is not Mode.B:
            raise CalibrationMismatch("tracking bank must be Mode B")
        if sorted(bank_b.pairs) != book.configs():
            raise CalibrationMismatch("Mode B bank is not keyed by the code-book configurations")
    hashes = {x.scenario_hash for x in (book, bank_a, bank_b) if x is not None}
    if len(hashes) > 1:
        raise CalibrationMismatch("calibration artifacts come from different scenarios")


def run_episode(engine, spec: EpisodeSpec, codebook: CodeBook, bank_a=None, bank_b=None, baseline=None,
                p_ref=None, keep_trace=False):
    """Simulate one BASK episode and score the post-bootstrap symbols."""
    strategy = spec.strategy
    if strategy is Strategy.CONTEXT_IGNORANT and baseline is None:
        raise CalibrationMismatch("context-ignorant strategy needs a baseline pair")
    if strategy is Strategy.SELF_ADAPTIVE and (bank_a is None or bank_b is None):
        raise CalibrationMismatch("self-adaptive strategy needs Mode A and Mode B banks")
    check_artifacts(codebook, bank_a, bank_b)
    if p_ref is None:
        p_ref = (bank_b or bank_a).p_ref
    noise = NoiseModel(float(spec.snr_db), p_ref)
    walk_rng, bit_rng, ue_rng, aux_rng = _episode_streams(spec.seed)
    states = perturber_walk(spec.n_symbols, spec.step, spec.shape_change, walk_rng)
    bits = bit_rng.integers(0, 2, spec.n_symbols)
    length = engine.trajectory_length
    tracker = ContextTracker()
    sensing = strategy is Strategy.SELF_ADAPTIVE

    if sensing:
        series = bank_a.series_configs
        k = len(series)
        meas = []
        for t in range(spec.bootstrap):
            h = engine.channel(series[t % k], states[t])[1:]
            meas.append(add_awgn(h, noise, aux_rng))
            if len(meas) == k or t == spec.bootstrap - 1:
                # a short bootstrap repeats its measurements to fill the series
                fp = flatten_complex(np.concatenate([meas[i % len(meas)] for i in range(k)]))
                pair = bank_a.pair_for()
                tracker.reset(mlp_forward(pair.shape, fp), np.clip(mlp_forward(pair.position, fp), 0, 1))
                meas = []

    errors = hits = 0
    loc = 0.0
    levels = {0: [], 1: []}
    trace = []
    for t in range(spec.bootstrap, spec.n_symbols):
        state = states[t]
        if strategy is Strategy.SELF_ADAPTIVE:
            est_shape, est_p = tracker.shape, tracker.position
            pair = lookup(codebook, est_p, est_shape)
            hits += int(est_shape == state.shape)
            loc += abs(est_p - state.p) * length
        elif strategy is Strategy.PERFECT_CONTEXT:
            pair = lookup(codebook, state.p, state.shape)
        else:
            pair = baseline
        bit = int(bits[t])
        cfg = pair.config(bit)
        h = engine.channel(cfg, state)
        y = complex(add_awgn(h[0], noise, ue_rng))
        detected = bask_detect(y, pair.tau)
        errors += int(detected != bit)
        levels[bit].append(abs(y))
        z = add_awgn(h[1:], noise, aux_rng)
        if sensing:
            models = bank_b.pair_for(cfg)
            fp = flatten_complex(z)
            tracker.update(mlp_forward(models.shape, fp), np.clip(mlp_forward(models.position, fp), 0, 1))
        if keep_trace:
            trace.append((t, state.p, int(state.shape), bit, detected, abs(y)))
    n = spec.n_symbols - spec.bootstrap
    if n == 0:
        nan = float("nan")
        return Metrics(nan, nan, nan, 0, 0, nan, nan, trace)
    return Metrics(
        errors / n,
        hits / n if sensing else float("nan"),
        loc / n if sensing else float("nan"),
        n,
        errors,
        float(np.mean(levels[0])) if levels[0] else float("nan"),
        float(np.mean(levels[1])) if levels[1] else float("nan"),
        trace,
    )


def episode_seed(master, index):
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


def _mean_se(values):
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if len(v) == 0:
        return float("nan"), float("nan")
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else float("nan")
    return float(v.mean()), se


@dataclass
class SweepRow:
    snr_db: float
    strategy: Strategy
    ber: float
    ber_se: float
    shape_accuracy: float
    shape_accuracy_se: float
    localization_error: float
    localization_error_se: float
    level0: float
    level0_se: float
    level1: float
    level1_se: float
    n_symbols: int
    episode_ber: list = field(default_factory=list, repr=False)


def snr_sweep(engine, snrs, n_episodes, n_symbols, codebook, bank_a, bank_b, baseline, seed=0,
              strategies=STRATEGIES, bootstrap=8, step=0.01, shape_change=0.01, p_ref=None):
    """Mean and standard error over episodes for every (SNR, strategy).

    Episode ``i`` uses the same derived seed at every SNR and for every
    strategy, so results do not depend on the evaluation order.
    """
    if n_episodes < 3:
        raise ValueError("need at least three episodes per point")
    check_artifacts(codebook, bank_a, bank_b)
    snrs = [float(s) for s in snrs]
    results = {(s, st): [] for s in snrs for st in strategies}
    for i in range(n_episodes):
        es = episode_seed(seed, i)
        for snr in snrs:
            for st in strategies:
                spec = EpisodeSpec(n_symbols, snr, st, step, shape_change, bootstrap, es)
                results[(snr, st)].append(run_episode(engine, spec, codebook, bank_a, bank_b, baseline, p_ref))
    rows = []
    for snr in snrs:
        for st in strategies:
            ms = results[(snr, st)]
            cols = [_mean_se([getattr(m, f) for m in ms]) for f in
                    ("ber", "shape_accuracy", "localization_error", "level0", "level1")]
            rows.append(SweepRow(snr, st, *[x for c in cols for x in c], sum(m.n_symbols for m in ms),
                                 [m.ber for m in ms]))
    return rows


def paired_difference(row_a: SweepRow, row_b: SweepRow):
    """Mean and standard error of per-episode BER(a) - BER(b)."""
    d = np.asarray(row_a.episode_ber) - np.asarray(row_b.episode_ber)
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(len(d)))


@dataclass
class Constellation:
    random: np.ndarray
    native: np.ndarray
    cross: np.ndarray


def rssi_constellation(engine, state: PerturberState, n_random, native: ConfigPair, cross: ConfigPair, seed=0):
    """Complex UE channels for random configs plus the native and a cross-context pair ('0', '1')."""
    configs = random_configs(np.random.default_rng(seed), n_random, engine.n_pixels)
    h_rand = engine.channels(configs, state)[:, 0] if n_random else np.zeros(0, dtype=complex)
    h_nat = engine.channels(np.stack([native.c0, native.c1]), state)[:, 0]
    h_cross = engine.channels(np.stack([cross.c0, cross.c1]), state)[:, 0]
    return Constellation(h_rand, h_nat, h_cross)
