import json

import numpy as np
import pytest

from oracles import exhaustive_best, subset_pool_best
from richris.optimizer import (
    CodeBook,
    ConfigPair,
    Objective,
    ObjectiveKind,
    PairError,
    build_codebook,
    context_ignorant_pair,
    entry_seed,
    evaluate_objective,
    greedy_bitflip,
    lookup,
    n_bins_for,
    optimize_pair,
    pair_levels,
    random_pool_best,
)
from richris.scenario import N_PIXELS, PerturberState, Shape, config_from_int


@pytest.fixture(scope="module")
def state():
    return PerturberState(0.35, Shape.CROSS)


@pytest.mark.parametrize("kind", [ObjectiveKind.MAX_RSSI, ObjectiveKind.MIN_RSSI])
def test_greedy_bracketed_by_pool_and_exhaustive(engine, state, kind):
    rng = np.random.default_rng(11)
    pixels = np.sort(rng.choice(N_PIXELS, 10, replace=False))
    base = rng.integers(0, 2, N_PIXELS).astype(np.uint8)
    obj = Objective(kind, state)
    start, pool_score = subset_pool_best(engine, obj, base, pixels, 100, rng)
    g = greedy_bitflip(engine, obj, start, pixels=pixels)
    _, best = exhaustive_best(engine, obj, start, pixels)
    assert pool_score - 1e-12 <= g.score <= best + 1e-12
    others = np.setdiff1d(np.arange(N_PIXELS), pixels)
    assert np.array_equal(g.config[others], start[others])


def test_greedy_trace_monotone_and_reproducible(engine, state):
    obj = Objective(ObjectiveKind.MAX_RSSI, state)
    start, _ = random_pool_best(engine, obj, seed=3)
    g = greedy_bitflip(engine, obj, start)
    assert np.all(np.diff(g.trace) >= 0)
    assert len(g.trace) == 1 + g.sweeps * N_PIXELS
    assert g.score == pytest.approx(evaluate_objective(engine, obj, g.config), rel=1e-9)
    assert g.trace[-1] == pytest.approx(g.score, rel=1e-8)
    again = greedy_bitflip(engine, obj, start)
    assert np.array_equal(again.config, g.config)


def test_greedy_is_a_local_optimum(engine, state):
    obj = Objective(ObjectiveKind.MIN_RSSI, state)
    start, _ = random_pool_best(engine, obj, seed=4)
    g = greedy_bitflip(engine, obj, start)
    for m in range(N_PIXELS):
        c = g.config.copy()
        c[m] ^= 1
        assert evaluate_objective(engine, obj, c) <= g.score + 1e-12


def test_objective_validation(state):
    with pytest.raises(ValueError):
        Objective(ObjectiveKind.MAX_RSSI, (state, state))
    with pytest.raises(ValueError):
        Objective(ObjectiveKind.MAX_MEAN_RSSI, ())
    assert Objective(ObjectiveKind.MIN_MEAN_RSSI, [state, state]).score(np.array([1.0, 3.0])) == -2.0


def test_pool_size_validated(engine, state):
    with pytest.raises(ValueError):
        random_pool_best(engine, Objective(ObjectiveKind.MAX_RSSI, state), n=0)


def test_optimized_pair_is_separated(engine, state):
    pair = optimize_pair(engine, state, seed=0, n_pool=30)
    r0, r1 = pair_levels(engine, pair, state)
    assert r0 == pytest.approx(pair.r0, rel=1e-9)
    assert r1 == pytest.approx(pair.r1, rel=1e-9)
    assert pair.r1 > 3 * pair.r0
    assert pair.tau == pytest.approx(0.5 * (pair.r0 + pair.r1))


def test_context_ignorant_pair_uses_mean(engine):
    states = [PerturberState(p, s) for p, s in ((0.1, 0), (0.5, 1), (0.9, 2))]
    pair = context_ignorant_pair(engine, states, seed=1, n_pool=20)
    lv = np.array([pair_levels(engine, pair, s) for s in states])
    assert pair.r0 == pytest.approx(lv[:, 0].mean(), rel=1e-9)
    assert pair.r1 == pytest.approx(lv[:, 1].mean(), rel=1e-9)


def test_pair_requires_ordered_levels():
    c = np.zeros(N_PIXELS, dtype=np.uint8)
    with pytest.raises(PairError):
        ConfigPair(c, c, 0.5, 0.5)
    with pytest.raises(PairError):
        ConfigPair(c, c, -0.1, 0.5)


def test_entry_seed_independent_of_order():
    assert entry_seed(0, 3, 1) == entry_seed(0, 3, 1)
    assert len({entry_seed(0, b, s) for b in range(8) for s in range(3)}) == 24


def test_bin_count_tolerates_rounding():
    assert n_bins_for(6.0, 6.0 / 16) == 16
    assert n_bins_for(6.0, 6.0 / 64) == 64
    assert n_bins_for(6.0, 10.0) == 1
    with pytest.raises(ValueError):
        n_bins_for(6.0, 0.0)


def _toy_book():
    book = CodeBook(1.5, 6.0, {}, 7, "abc")
    rng = np.random.default_rng(0)
    for b in range(book.n_bins):
        for s in range(3):
            c0, c1 = rng.integers(0, 2, (2, N_PIXELS)).astype(np.uint8)
            book.entries[(b, s)] = ConfigPair(c0, c1, 0.1 * b + 0.01, 0.5 + s)
    return book


def test_codebook_round_trip(tmp_path):
    book = _toy_book()
    path = tmp_path / "book.json"
    book.save(path)
    back = CodeBook.load(path)
    assert back.n_bins == 4 and back.seed == 7 and back.scenario_hash == "abc"
    for key, pair in book.entries.items():
        other = back.entries[key]
        assert np.array_equal(other.c0, pair.c0) and np.array_equal(other.c1, pair.c1)
        assert other.r0 == pair.r0 and other.r1 == pair.r1
    doc = json.loads(path.read_text())
    assert doc["bin_centers"] == [0.125, 0.375, 0.625, 0.875]
    assert config_from_int(doc["entries"][0]["c0"]).shape == (N_PIXELS,)


def test_lookup_ties_and_clamping():
    book = _toy_book()
    assert book.bin_index(0.25) == 0
    assert book.bin_index(0.2501) == 1
    assert book.bin_index(0.5) == 1
    assert book.bin_index(-3.0) == 0
    assert book.bin_index(7.0) == 3
    assert lookup(book, 0.9, "circle") is book.entries[(3, 1)]


def test_codebook_configs_sorted_unique():
    book = _toy_book()
    cfgs = book.configs()
    assert cfgs == sorted(set(cfgs))
    assert len(cfgs) <= 2 * len(book.entries)


def test_build_codebook_subset(engine):
    book = build_codebook(engine, engine.trajectory_length / 4, bins=[1], n_pool=10, seed=2)
    assert sorted(book.entries) == [(1, 0), (1, 1), (1, 2)]
    again = build_codebook(engine, engine.trajectory_length / 4, bins=[1], n_pool=10, seed=2)
    assert book.to_dict() == again.to_dict()
