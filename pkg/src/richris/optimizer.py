"""Discrete RIS configuration search for BASK symbol pairs and code-book construction."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from richris.scenario import SHAPES, PerturberState, Shape, config_from_int, config_to_int


class ObjectiveKind(enum.Enum):
    MAX_RSSI = "max_rssi"
    MIN_RSSI = "min_rssi"
    MAX_MEAN_RSSI = "max_mean_rssi"
    MIN_MEAN_RSSI = "min_mean_rssi"

    @property
    def sign(self):
        return 1.0 if self in (ObjectiveKind.MAX_RSSI, ObjectiveKind.MAX_MEAN_RSSI) else -1.0

    @property
    def is_mean(self):
        return self in (ObjectiveKind.MAX_MEAN_RSSI, ObjectiveKind.MIN_MEAN_RSSI)


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind
    states: tuple

    def __post_init__(self):
        states = self.states
        if isinstance(states, PerturberState):
            states = (states,)
        object.__setattr__(self, "states", tuple(states))
        if not self.states:
            raise ValueError("objective needs at least one perturber state")
        if not self.kind.is_mean and len(self.states) != 1:
            raise ValueError(f"{self.kind.value} is evaluated at exactly one perturber state")

    def score(self, rssi):
        """Score from UE RSSI values with shape (..., n_states)."""
        return self.kind.sign * np.mean(rssi, axis=-1)


def evaluate_objective(engine, objective: Objective, config):
    rssi = [abs(engine.channel(config, s)[0]) for s in objective.states]
    return float(objective.score(np.array(rssi)))


def _pool_rssi(engine, states, configs):
    return np.stack([np.abs(engine.channels(configs, s)[:, 0]) for s in states], axis=-1)


def random_configs(rng, n, n_bits=25):
    return rng.integers(0, 2, size=(n, n_bits), dtype=np.uint8)


def random_pool_best(engine, objective: Objective, n=100, seed=0):
    """Best of ``n`` uniformly drawn configurations."""
    if n < 1:
        raise ValueError("pool size must be at least 1")
    rng = np.random.default_rng(seed)
    pool = random_configs(rng, n, engine.n_pixels)
    scores = objective.score(_pool_rssi(engine, objective.states, pool))
    best = int(np.argmax(scores))
    return pool[best].copy(), float(scores[best])


@dataclass
class GreedyResult:
    config: np.ndarray
    score: float
    start_score: float
    trace: list
    sweeps: int
    accepted: int


def greedy_bitflip(engine, objective: Objective, start, pixels=None, max_sweeps=100):
    """Sweep macro-pixels in ascending order, keeping any flip that strictly improves the score.

    Stops after a sweep without changes. ``trace`` holds the best score after
    every tested flip, so it is non-decreasing. ``pixels`` restricts the search
    to a subset (the rest stay as in ``start``).
    """
    if pixels is None:
        pixels = np.arange(engine.n_pixels)
    states = [engine.factorize(start, s) for s in objective.states]
    score = float(objective.score(np.array([abs(f.channel[0]) for f in states])))
    start_score = score
    trace = [score]
    sweeps = accepted = 0
    changed = True
    while changed and sweeps < max_sweeps:
        changed = False
        sweeps += 1
        for m in pixels:
            cand = np.array([abs(f.scan([m])[0, 0]) for f in states])
            new = float(objective.score(cand))
            if new > score:
                states = [f.flip(m) for f in states]
                score = new
                changed = True
                accepted += 1
            trace.append(score)
    config = states[0].config.copy()
    # re-evaluate from a fresh solve so the reported score carries no update drift
    final = evaluate_objective(engine, objective, config)
    return GreedyResult(config, final, start_score, trace, sweeps, accepted)


class PairError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConfigPair:
    """BASK configurations for '0' (low RSSI) and '1' (high RSSI) with calibrated levels."""

    c0: np.ndarray
    c1: np.ndarray
    r0: float
    r1: float

    def __post_init__(self):
        if not self.r1 > self.r0 >= 0:
            raise PairError(f"calibrated levels must satisfy r1 > r0 >= 0 (r0={self.r0}, r1={self.r1})")

    @property
    def tau(self):
        return 0.5 * (self.r0 + self.r1)

    def config(self, bit):
        return self.c1 if bit else self.c0

    def to_dict(self):
        return {
            "c0": config_to_int(self.c0),
            "c1": config_to_int(self.c1),
            "r0": self.r0,
            "r1": self.r1,
            "tau": self.tau,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(config_from_int(d["c0"]), config_from_int(d["c1"]), float(d["r0"]), float(d["r1"]))


def _pair_from_pool(engine, states, seed, n_pool, max_kind, min_kind):
    rng = np.random.default_rng(seed)
    pool = random_configs(rng, n_pool, engine.n_pixels)
    rssi = _pool_rssi(engine, states, pool)
    hi = Objective(max_kind, states)
    lo = Objective(min_kind, states)
    start1 = pool[int(np.argmax(hi.score(rssi)))]
    start0 = pool[int(np.argmax(lo.score(rssi)))]
    g1 = greedy_bitflip(engine, hi, start1)
    g0 = greedy_bitflip(engine, lo, start0)
    return g0, g1, rssi


def optimize_pair(engine, state: PerturberState, seed=0, n_pool=100):
    """Greedy-optimized ('0', '1') pair at one perturber state, seeded by a shared random pool."""
    g0, g1, _ = _pair_from_pool(
        engine, (state,), seed, n_pool, ObjectiveKind.MAX_RSSI, ObjectiveKind.MIN_RSSI
    )
    return ConfigPair(g0.config, g1.config, -g0.score, g1.score)


def context_ignorant_pair(engine, samples, seed=0, n_pool=100):
    """Fixed pair optimized for the mean RSSI over many perturber states."""
    samples = tuple(samples)
    g0, g1, _ = _pair_from_pool(
        engine, samples, seed, n_pool, ObjectiveKind.MAX_MEAN_RSSI, ObjectiveKind.MIN_MEAN_RSSI
    )
    return ConfigPair(g0.config, g1.config, -g0.score, g1.score)


def entry_seed(master_seed, bin_index, shape):
    """Per-entry seed, independent of construction order."""
    ss = np.random.SeedSequence([int(master_seed), int(bin_index), int(shape)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def n_bins_for(length, resolution):
    if not resolution > 0:
        raise ValueError("code-book resolution must be positive")
    # tolerate rounding in length / (length / n)
    return max(1, int(math.ceil(length / resolution - 1e-9)))


@dataclass
class CodeBook:
    """Optimized pairs keyed by (position bin, shape); bins evenly split p in [0, 1]."""

    resolution: float
    length: float
    entries: dict = field(default_factory=dict)
    seed: int = 0
    scenario_hash: str = ""

    @property
    def n_bins(self):
        return n_bins_for(self.length, self.resolution)

    @property
    def bin_centers(self):
        return (np.arange(self.n_bins) + 0.5) / self.n_bins

    def bin_index(self, p):
        n = self.n_bins
        x = min(1.0, max(0.0, float(p))) * n
        if abs(x - round(x)) < 1e-9:
            x = float(round(x))
        return int(min(n - 1, max(0, math.ceil(x) - 1)))

    def state(self, bin_index, shape):
        return PerturberState(float(self.bin_centers[bin_index]), Shape.parse(shape))

    def configs(self):
        """Distinct configurations used by the book, as sorted integers."""
        out = set()
        for pair in self.entries.values():
            out.add(config_to_int(pair.c0))
            out.add(config_to_int(pair.c1))
        return sorted(out)

    def to_dict(self):
        return {
            "resolution": self.resolution,
            "trajectory_length": self.length,
            "n_bins": self.n_bins,
            "bin_centers": self.bin_centers.tolist(),
            "shapes": [s.name.lower() for s in SHAPES],
            "seed": self.seed,
            "scenario_hash": self.scenario_hash,
            "entries": [
                {"bin": b, "shape": Shape(s).name.lower(), **pair.to_dict()}
                for (b, s), pair in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_dict(cls, d):
        book = cls(float(d["resolution"]), float(d["trajectory_length"]), {}, int(d["seed"]), d.get("scenario_hash", ""))
        for e in d["entries"]:
            book.entries[(int(e["bin"]), int(Shape.parse(e["shape"])))] = ConfigPair.from_dict(e)
        return book

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class CodeBookError(RuntimeError):
    pass


def build_codebook(engine, resolution, shapes=SHAPES, seed=0, bins=None, n_pool=100, scenario_hash=""):
    """Optimize a pair at every (bin centre, shape); ``bins`` limits which bins are filled."""
    book = CodeBook(float(resolution), engine.trajectory_length, {}, int(seed), scenario_hash)
    fill_entries(engine, book, [(b, s) for b in (range(book.n_bins) if bins is None else bins) for s in shapes], n_pool)
    return book


def fill_entries(engine, book: CodeBook, keys, n_pool=100):
    for b, s in keys:
        key = (int(b), int(Shape.parse(s)))
        if key in book.entries:
            continue
        try:
            book.entries[key] = optimize_pair(
                engine, book.state(*key), entry_seed(book.seed, *key), n_pool
            )
        except Exception as exc:
            raise CodeBookError(f"code-book entry bin={key[0]} shape={Shape(key[1]).name.lower()} failed: {exc}") from exc
    return book


def lookup(book: CodeBook, p_hat, shape):
    """Entry whose bin centre is nearest to clamp(p_hat); ties go to the lower bin."""
    key = (book.bin_index(p_hat), int(Shape.parse(shape)))
    return book.entries[key]


def pair_levels(engine, pair: ConfigPair, state):
    """RSSI of (c0, c1) at a perturber state."""
    h = engine.channels(np.stack([pair.c0, pair.c1]), state)[:, 0]
    return float(abs(h[0])), float(abs(h[1]))


def separation(engine, pair, state):
    r0, r1 = pair_levels(engine, pair, state)
    return r1 - r0


def separation_db(engine, pair, state):
    r0, r1 = pair_levels(engine, pair, state)
    return 20.0 * np.log10(r1 / r0)


def resolution_sweep(engine, resolutions, eval_positions, shape=Shape.CROSS, seed=0, n_pool=100):
    """Mean normalized separation of the looked-up pair versus per-position optimization.

    For each true position ``p`` the ratio is
    ``sep(lookup pair at p) / sep(pair optimized at p)``, clipped to [-1, 1].
    Returns rows ``(resolution, mean_ratio, stderr, n_bins)``.
    """
    resolutions = list(resolutions)
    if resolutions != sorted(resolutions):
        raise ValueError("resolutions must be sorted")
    shape = Shape.parse(shape)
    exact = []
    for i, p in enumerate(eval_positions):
        state = PerturberState(float(p), shape)
        pair = optimize_pair(engine, state, entry_seed(seed + 1_000_003, i, shape), n_pool)
        exact.append(separation(engine, pair, state))
    rows = []
    for res in resolutions:
        book = CodeBook(float(res), engine.trajectory_length, {}, int(seed))
        keys = sorted({(book.bin_index(p), int(shape)) for p in eval_positions})
        fill_entries(engine, book, keys, n_pool)
        ratios = []
        for p, ref in zip(eval_positions, exact):
            state = PerturberState(float(p), shape)
            sep = separation(engine, lookup(book, p, shape), state)
            ratios.append(float(np.clip(sep / ref, -1.0, 1.0)))
        ratios = np.array(ratios)
        stderr = float(ratios.std(ddof=1) / np.sqrt(len(ratios))) if len(ratios) > 1 else 0.0
        rows.append((float(res), float(ratios.mean()), stderr, book.n_bins))
    return rows
