import numpy as np
import pytest
from dataclasses import replace

from conftest import random_scenario
from oracles import born_series, swap_ports
from richris.physics import (
    ChannelMatrix,
    DipoleProperties,
    FactorizedChannel,
    SingularChannelError,
    assemble_interaction_matrix,
    channel_matrix,
    greens_2d,
    greens_block,
    greens_self_block,
    lorentzian_polarizability,
    nonlinearity_index,
    wavenumber,
    woodbury_diag_update,
    _active_system,
)
from richris.scenario import open_layout


def test_reciprocity_random_scenarios():
    rng = np.random.default_rng(0)
    for _ in range(20):
        sc = random_scenario(rng)
        h = channel_matrix(sc).ue
        h_swapped = channel_matrix(swap_ports(sc)).ue
        assert abs(h - h_swapped) <= 1e-10 * abs(h)


def test_inverse_and_solve_agree():
    rng = np.random.default_rng(1)
    for _ in range(5):
        sc = random_scenario(rng)
        a = channel_matrix(sc, method="inverse").values
        b = channel_matrix(sc, method="solve").values
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_born_series_weak_scattering():
    rng = np.random.default_rng(2)
    for _ in range(5):
        sc = random_scenario(rng, weak=True)
        exact = channel_matrix(sc).values[:, 0]
        born = born_series(sc)
        assert np.max(np.abs(born - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_woodbury_matches_full_solve():
    rng = np.random.default_rng(3)
    sc = random_scenario(rng, n_pixels=3)
    base = FactorizedChannel.from_scenario(sc)
    for cfg in ([1, 0, 0], [0, 1, 1], [1, 1, 1]):
        target = sc.with_config(cfg)
        flipped = sc.index["ris"]
        w, row = _active_system(target, 1.0)
        new_diag = np.diag(w)[row[flipped]]
        fast = woodbury_diag_update(base, flipped, new_diag).values
        full = channel_matrix(target).values
        assert np.max(np.abs(fast - full)) <= 1e-8 * np.max(np.abs(full))


def test_update_chain_counts_and_noop():
    sc = random_scenario(np.random.default_rng(5))
    base = FactorizedChannel.from_scenario(sc)
    assert base.update([], []) is base
    same = base.update([sc.index["ris"][0]], [base.diagonal[sc.index["ris"][0]]])
    assert same is base
    nxt = base.update([sc.index["ris"][0]], [2.0 + 0.5j])
    assert nxt.n_updates == 1
    assert base.n_updates == 0


def test_update_rejects_inert_dipole():
    sc = random_scenario(np.random.default_rng(6))
    gamma = sc.gamma.copy()
    gamma[-1] = 0.0
    sc = replace(sc, gamma=gamma)
    base = FactorizedChannel.from_scenario(sc)
    with pytest.raises(ValueError):
        base.update([len(gamma) - 1], [1.0])


def test_inert_dipoles_drop_out():
    sc = random_scenario(np.random.default_rng(7))
    gamma = sc.gamma.copy()
    gamma[sc.index["wall"]] = 0.0
    keep = np.concatenate([np.arange(10), sc.index["ris"]])
    with_inert = channel_matrix(replace(sc, gamma=gamma)).values
    idx = {k: v for k, v in sc.index.items()}
    idx["wall"] = np.arange(0)
    reduced = replace(sc, positions=sc.positions[keep], f0=sc.f0[keep], chi=sc.chi[keep], gamma=sc.gamma[keep], index=idx)
    np.testing.assert_allclose(with_inert, channel_matrix(reduced).values, rtol=1e-12)


def test_greens_function_symmetry_and_decay():
    k = wavenumber()
    a, b = np.array([0.3, -1.2]), np.array([2.1, 0.4])
    assert greens_2d(k, a, b) == greens_2d(k, b, a)
    far = [abs(greens_2d(k, a, a + [r, 0.0])) * np.sqrt(r) for r in (50.0, 100.0, 200.0)]
    np.testing.assert_allclose(far, far[0], rtol=1e-3)
    with pytest.raises(ValueError):
        greens_2d(k, a, a)
    with pytest.raises(ValueError):
        greens_2d(-1.0, a, b)


def test_greens_blocks_consistent():
    pos = np.random.default_rng(8).uniform(0, 3, (6, 2))
    g = greens_self_block(2 * np.pi, pos)
    assert np.all(np.diag(g) == 0)
    np.testing.assert_allclose(g, g.T)
    np.testing.assert_allclose(g[0, 1:], greens_block(2 * np.pi, pos[:1], pos[1:])[0])
    with pytest.raises(ValueError):
        greens_self_block(2 * np.pi, np.array([[0.0, 0.0], [0.0, 0.0]]))


def test_assemble_matches_definition():
    props = DipoleProperties(1.1, 0.4, 0.9)
    pts = [(np.array([0.0, 0.0]), props), (np.array([0.7, 0.2]), props)]
    w = assemble_interaction_matrix(pts)
    assert w[0, 0] == pytest.approx(1.0 / lorentzian_polarizability(1.0, props))
    assert w[0, 1] == pytest.approx(-greens_2d(2 * np.pi, pts[0][0], pts[1][0]))
    with pytest.raises(ValueError):
        assemble_interaction_matrix([])


def test_dipole_properties_validation():
    with pytest.raises(ValueError):
        DipoleProperties(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        DipoleProperties(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        DipoleProperties(1.0, 1.0, -1.0)
    assert DipoleProperties(1.0, 0.3, 1.0).is_passive()
    assert not DipoleProperties(1.0, 0.2, 1.0).is_passive()
    with pytest.raises(ValueError):
        lorentzian_polarizability(0.0, DipoleProperties(1.0, 1.0, 1.0))


def test_singular_system_raises():
    # two dipoles whose inverse polarizability equals -G between them: W = d [[1, 1], [1, 1]]
    from scipy import special

    from richris.scenario import CompiledScenario, PerturberState

    r = 0.3
    x = 2 * np.pi * r
    j0, y0 = special.j0(x), special.y0(x)
    assert j0 > 0
    # 1/alpha = (f0^2 - 1 + j chi) / f0^2 with gamma = 1 must equal y0/4 + j j0/4
    f0 = np.sqrt(1.0 / (1.0 - y0 / 4.0))
    chi = j0 / 4.0 * f0**2
    on = DipoleProperties(1.0, 0.3, 1.0)
    sc = CompiledScenario(
        np.array([[0.0, 0.0], [r, 0.0]]), np.array([f0, f0]), np.array([chi, chi]), np.ones(2),
        {"tx": np.array([0]), "ue": np.array([1]), "aux": np.arange(0), "ris": np.arange(0),
         "wall": np.arange(0), "object": np.arange(0)},
        np.zeros((0, 4), dtype=int), on, on, np.zeros(0, dtype=np.uint8), PerturberState(0.0),
    )
    with pytest.raises(SingularChannelError) as info:
        channel_matrix(sc)
    assert info.value.condition > 1e12
    assert info.value.diagnostics["n_dipoles"] == 2


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        channel_matrix(random_scenario(np.random.default_rng(10)), method="magic")


def test_channel_matrix_views():
    cm = ChannelMatrix(np.arange(9, dtype=complex).reshape(9, 1) + 1j, (1, *range(2, 10)), (0,))
    assert cm.ue == 1j
    assert cm.rssi == 1.0
    assert cm.aux.shape == (8,)


def test_passive_system_absorbs():
    # passive media have a positive semidefinite anti-Hermitian part
    sc = random_scenario(np.random.default_rng(11))
    w, _ = _active_system(sc, 1.0)
    herm = (w - w.conj().T) / 2j
    assert np.min(np.linalg.eigvalsh(herm)) > -1e-12


def test_nonlinearity_open_layout_is_small():
    assert nonlinearity_index(open_layout(), n_samples=260) < 0.05


def test_nonlinearity_needs_enough_samples():
    with pytest.raises(ValueError):
        nonlinearity_index(open_layout(), n_samples=50)
