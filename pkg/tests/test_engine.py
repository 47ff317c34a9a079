import numpy as np
import pytest

from richris.physics import channel_matrix
from richris.scenario import N_PIXELS, PerturberState, ScenarioError, Shape, compile_scenario
from richris.noise import sample_states


def _direct(spec, cfg, state):
    return channel_matrix(compile_scenario(spec, state, cfg), method="solve").values[:, 0]


def test_engine_matches_full_solve(spec, engine):
    rng = np.random.default_rng(0)
    for state in sample_states(rng, 4):
        cfg = rng.integers(0, 2, N_PIXELS)
        ref = _direct(spec, cfg, state)
        got = engine.channel(cfg, state)
        assert np.max(np.abs(got - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_batched_paths_agree(engine):
    rng = np.random.default_rng(1)
    cfgs = rng.integers(0, 2, (6, N_PIXELS))
    states = sample_states(rng, 5)
    by_state = np.stack([engine.channels(cfgs, s) for s in states], axis=1)
    by_config = np.stack([engine.channels_at_states(c, states) for c in cfgs])
    np.testing.assert_allclose(by_state, by_config, rtol=1e-9, atol=1e-14)


def test_flip_scan_and_flip_match_fresh_solves(engine):
    rng = np.random.default_rng(2)
    state = PerturberState(0.6, Shape.CIRCLE)
    cfg = rng.integers(0, 2, N_PIXELS).astype(np.uint8)
    fs = engine.factorize(cfg, state)
    scan = fs.scan()
    for m in (0, 7, 24):
        c = cfg.copy()
        c[m] ^= 1
        ref = engine.channels(c, state)[0]
        np.testing.assert_allclose(scan[m], ref, rtol=1e-8, atol=1e-14)
    chain = fs
    for m in rng.integers(0, N_PIXELS, 30):
        chain = chain.flip(int(m))
    ref = engine.channels(chain.config, state)[0]
    np.testing.assert_allclose(chain.channel, ref, rtol=1e-8, atol=1e-14)
    assert chain.n_updates == 30
    np.testing.assert_allclose(chain.refresh().channel, ref, rtol=1e-10)


def test_clearance_violation_raises(engine, document):
    from richris.engine import ChannelEngine
    from richris.scenario import ScenarioSpec

    document["trajectory"]["vertices"] = [[2.5, 4.5], [12.0, 4.5]]
    e = ChannelEngine(ScenarioSpec.from_dict(document))
    with pytest.raises(ScenarioError):
        e.channel(np.zeros(N_PIXELS, dtype=np.uint8), PerturberState(1.0))


def test_object_changes_channel(engine):
    cfg = np.zeros(N_PIXELS, dtype=np.uint8)
    a = engine.channel(cfg, PerturberState(0.2, Shape.CROSS))
    b = engine.channel(cfg, PerturberState(0.8, Shape.CROSS))
    c = engine.channel(cfg, PerturberState(0.2, Shape.SQUARE))
    assert np.linalg.norm(a - b) > 1e-3 * np.linalg.norm(a)
    assert np.linalg.norm(a - c) > 1e-3 * np.linalg.norm(a)


def test_caches_are_bounded(spec):
    from richris.engine import ChannelEngine

    e = ChannelEngine(spec, cache_size=2)
    cfg = np.zeros(N_PIXELS, dtype=np.uint8)
    first = e.channels(cfg, PerturberState(0.1))
    for p in (0.2, 0.3, 0.4):
        e.channels(cfg, PerturberState(p))
    assert len(e._reduced.data) == 2
    np.testing.assert_array_equal(e.channels(cfg, PerturberState(0.1)), first)
