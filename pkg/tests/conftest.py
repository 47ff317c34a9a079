import copy

import numpy as np
import pytest

from richris.engine import ChannelEngine
from richris.scenario import (
    CompiledScenario,
    PerturberState,
    Shape,
    default_document,
    default_scenario,
)


@pytest.fixture(scope="session")
def spec():
    return default_scenario()


@pytest.fixture(scope="session")
def engine(spec):
    return ChannelEngine(spec, cache_size=2048)


@pytest.fixture
def document():
    return copy.deepcopy(default_document())


def random_scenario(rng, n_scatter=20, weak=False, n_pixels=3):
    """Small random compiled scenario: TX, UE, 8 aux, a few RIS pixels and free scatterers."""
    n_ris = 4 * n_pixels
    n = 10 + n_ris + n_scatter
    while True:
        pos = rng.uniform(0.0, 6.0, (n, 2))
        d = np.hypot(*(pos[:, None] - pos[None]).transpose(2, 0, 1))
        if d[np.triu_indices(n, 1)].min() > 0.15:
            break
    f0 = rng.uniform(0.8, 1.2, n)
    chi = rng.uniform(0.3, 0.6, n)
    gamma = rng.uniform(0.5, 1.0, n) * (1e-3 if weak else 1.0)
    chi = np.maximum(chi, 0.26 * gamma * f0**2)
    index = {
        "tx": np.array([0]),
        "ue": np.array([1]),
        "aux": np.arange(2, 10),
        "ris": np.arange(10, 10 + n_ris),
        "wall": np.arange(10 + n_ris, n),
        "object": np.arange(0),
    }
    from richris.physics import DipoleProperties

    on = DipoleProperties(1.0, 0.3, 1.0)
    off = DipoleProperties(2.5, 1.875, 1.0)
    return CompiledScenario(
        pos, f0, chi, gamma, index, index["ris"].reshape(n_pixels, 4), on, off,
        np.zeros(n_pixels, dtype=np.uint8), PerturberState(0.0, Shape.CROSS),
    )


SMALL_MANIFEST = {
    "resolution": 3.0,
    "positions_a": 60,
    "positions_b": 40,
    "hidden": [16],
    "baseline_samples": 5,
    "n_pool": 20,
    "reference_samples": 50,
    "mode_a": {"snr_range": [-20.0, 40.0], "epochs": 5},
    "mode_b": {"epochs": 5},
}


@pytest.fixture(scope="session")
def small_artifacts(engine):
    """Quick low-fidelity calibration for plumbing tests."""
    from richris.calibration import Manifest, calibrate

    return calibrate(Manifest.from_dict(dict(SMALL_MANIFEST)), engine=engine)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def report_criterion(request):
    """Record one pass/fail line for the terminal summary."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail):
        results[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
