"""Fast channel evaluation for many RIS configurations and perturber states.

The walls never move, so they are eliminated once, leaving a Schur
complement over the ports (TX, UE, AuxRX and the RIS elements). The object
enters as a small rank correction on top of it. Many configurations at one
state reuse the object-reduced port system; many states at one
configuration reuse that configuration's port inverse. Single macro-pixel
flips are rank-4 Woodbury updates.
"""
from __future__ import annotations

from collections import OrderedDict

import numpy as np
import scipy.linalg as sla

from richris import kernels
from richris.physics import (
    SingularChannelError,
    _check_condition,
    _lu_with_condition,
    greens_block,
    greens_self_block,
    inverse_polarizabilities,
    wavenumber,
)
from richris.scenario import (
    OBJECT_CLEARANCE,
    PerturberState,
    ScenarioError,
    as_config,
    config_to_int,
    object_clearance,
    object_footprint,
    static_layout,
    trajectory_point,
)


class ChannelEngine:
    """Channel ``H`` at the UE and AuxRXs for any (configuration, perturber state).

    The wall fences are eliminated once at construction. The object then
    enters either per state (``reduced``: many configurations at one state)
    or per configuration (``channels_at_states``: many states at one
    configuration) as a rank-``n_object`` correction.
    """

    def __init__(self, spec, cache_size=512):
        self.spec = spec
        self.f = spec.frequency
        self.k = wavenumber(self.f)
        pos, props, index, groups = static_layout(spec)
        self.static_positions = pos
        self.n_ports = len(index["tx"]) + len(index["ue"]) + len(index["aux"]) + len(index["ris"])
        self.ris_ports = index["ris"]
        self.groups = groups
        self.n_pixels = len(groups)
        self.rx = np.concatenate([index["ue"], index["aux"]])
        self.tx = int(index["tx"][0])
        inv = inverse_polarizabilities(
            self.f, [q.f0 for q in props], [q.chi for q in props], [q.gamma for q in props]
        )
        g = greens_self_block(self.k, pos)
        np_ = self.n_ports
        w_pp = -g[:np_, :np_]
        w_pp[np.diag_indices(np_)] = inv[:np_]
        w_pp[self.ris_ports, self.ris_ports] = 0.0
        self._w_pw = -g[:np_, np_:]
        w_ww = -g[np_:, np_:]
        w_ww[np.diag_indices(len(pos) - np_)] = inv[np_:]
        lu, piv, rcond = _lu_with_condition(w_ww)
        _check_condition(rcond, {"block": "walls"})
        self._ww_lu = (lu, piv)
        self.s_static = w_pp - self._w_pw @ sla.lu_solve(self._ww_lu, self._w_pw.T, check_finite=False)
        self.inv_on = complex(inverse_polarizabilities(self.f, spec.ris.on.f0, spec.ris.on.chi, spec.ris.on.gamma))
        self.inv_off = complex(
            inverse_polarizabilities(self.f, spec.ris.off.f0, spec.ris.off.chi, spec.ris.off.gamma)
        )
        self.inv_object = complex(
            inverse_polarizabilities(
                self.f, spec.object_props.f0, spec.object_props.chi, spec.object_props.gamma
            )
        )
        self._reduced = _Lru(cache_size)
        self._coupling = _Lru(8 * cache_size)
        self._config_inv = _Lru(cache_size)

    @property
    def trajectory_length(self):
        return self.spec.trajectory.length

    def object_positions(self, state: PerturberState):
        center = trajectory_point(self.spec.trajectory, state.p)
        return object_footprint(state.shape, center, self.spec.geometry)

    def coupling(self, state: PerturberState):
        """Wall-dressed object couplings: (ports x object, object x object)."""
        key = (float(state.p), int(state.shape))
        hit = self._coupling.get(key)
        if hit is not None:
            return hit
        obj = self.object_positions(state)
        inside, clearance = object_clearance(self.spec, obj, self.static_positions)
        if not inside or clearance < OBJECT_CLEARANCE - 1e-9:
            raise ScenarioError(f"object at p={state.p:g} violates the wall clearance")
        np_ = self.n_ports
        w_po = -greens_block(self.k, self.static_positions[:np_], obj)
        w_wo = -greens_block(self.k, self.static_positions[np_:], obj)
        w_oo = -greens_self_block(self.k, obj)
        w_oo[np.diag_indices(len(obj))] = self.inv_object
        y = sla.lu_solve(self._ww_lu, w_wo, check_finite=False)
        c_po = w_po - self._w_pw @ y
        c_oo = w_oo - w_wo.T @ y
        out = (c_po, c_oo)
        self._coupling.put(key, out)
        return out

    def reduced(self, state: PerturberState):
        key = (float(state.p), int(state.shape))
        hit = self._reduced.get(key)
        if hit is not None:
            return hit
        c_po, c_oo = self.coupling(state)
        lu, piv, rcond = _lu_with_condition(c_oo)
        _check_condition(rcond, {"perturber": state})
        s0 = self.s_static - c_po @ sla.lu_solve((lu, piv), c_po.T, check_finite=False)
        red = ReducedSystem(self, state, s0)
        self._reduced.put(key, red)
        return red

    def ris_diagonal(self, config):
        bits = np.repeat(as_config(config, self.n_pixels), self.groups.shape[1])
        return np.where(bits == 1, self.inv_on, self.inv_off)

    def config_inverse(self, config):
        """Inverse of the object-free port system at one configuration."""
        cfg = as_config(config, self.n_pixels)
        key = config_to_int(cfg)
        hit = self._config_inv.get(key)
        if hit is not None:
            return hit
        a = self.s_static.copy()
        a[self.ris_ports, self.ris_ports] += self.ris_diagonal(cfg)
        lu, piv, rcond = _lu_with_condition(a)
        _check_condition(rcond, {"config": key})
        inv = sla.lu_solve((lu, piv), np.eye(len(a), dtype=complex), check_finite=False)
        self._config_inv.put(key, inv)
        return inv

    def channels_at_states(self, config, states):
        """UE+AuxRX channels, shape (n_states, 9), for one config at many states."""
        a_inv = self.config_inverse(config)
        base = a_inv[self.rx, self.tx]
        out = np.empty((len(states), len(self.rx)), dtype=complex)
        by_size = {}
        for i, st in enumerate(states):
            c_po, c_oo = self.coupling(st)
            by_size.setdefault(c_oo.shape[0], []).append((i, c_po, c_oo))
        for items in by_size.values():
            idx = [i for i, _, _ in items]
            c = np.stack([c_po for _, c_po, _ in items])
            d = np.stack([c_oo for _, _, c_oo in items])
            u = np.matmul(a_inv, c)
            kmat = d - np.matmul(c.transpose(0, 2, 1), u)
            rhs = u[:, self.tx, :][..., None]
            sol = np.linalg.solve(kmat, rhs)[..., 0]
            out[idx] = base + np.einsum("srk,sk->sr", u[:, self.rx, :], sol)
        return out

    def channels(self, configs, state):
        """UE+AuxRX channels, shape (n_configs, 9), for many configs at one state."""
        return self.reduced(state).channels(configs)

    def channel(self, config, state):
        return self.channels_at_states(config, [state])[0]

    def rssi(self, config, state):
        return abs(self.channel(config, state)[0])

    def factorize(self, config, state):
        return self.reduced(state).factorize(config)


class _Lru:
    def __init__(self, size):
        self.size = size
        self.data = OrderedDict()

    def get(self, key):
        hit = self.data.get(key)
        if hit is not None:
            self.data.move_to_end(key)
        return hit

    def put(self, key, value):
        self.data[key] = value
        if len(self.data) > self.size:
            self.data.popitem(last=False)


class ReducedSystem:
    """Port-reduced interaction matrix at one perturber state."""

    def __init__(self, engine: ChannelEngine, state, s0):
        self.engine = engine
        self.state = state
        self.s0 = s0

    def matrix(self, config):
        s = self.s0.copy()
        e = self.engine
        s[e.ris_ports, e.ris_ports] += e.ris_diagonal(config)
        return s

    def channels(self, configs):
        e = self.engine
        configs = np.atleast_2d(np.asarray(configs))
        n = len(configs)
        mats = np.broadcast_to(self.s0, (n,) + self.s0.shape).copy()
        bits = np.repeat(configs, e.groups.shape[1], axis=1)
        diag = np.where(bits == 1, e.inv_on, e.inv_off)
        mats[:, e.ris_ports, e.ris_ports] += diag
        rhs = np.zeros((n, len(self.s0), 1), dtype=complex)
        rhs[:, e.tx, 0] = 1.0
        try:
            x = np.linalg.solve(mats, rhs)[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularChannelError("reduced system is singular", diagnostics={"perturber": self.state}) from exc
        return x[:, e.rx]

    def factorize(self, config):
        s = self.matrix(config)
        lu, piv, rcond = _lu_with_condition(s)
        _check_condition(rcond, {"perturber": self.state, "config": config})
        m = sla.lu_solve((lu, piv), np.eye(len(s), dtype=complex), check_finite=False)
        return FlipState(self, as_config(config, self.engine.n_pixels).copy(), m)


class FlipState:
    """Reduced inverse at one configuration, updated by single macro-pixel flips."""

    def __init__(self, system: ReducedSystem, config, m, n_updates=0):
        self.system = system
        self.config = config
        self.m = m
        self.n_updates = n_updates

    @property
    def channel(self):
        e = self.system.engine
        return self.m[e.rx, e.tx].copy()

    def _deltas(self, pixels):
        e = self.system.engine
        bits = self.config[pixels]
        step = e.inv_on - e.inv_off
        d = np.where(bits == 1, -step, step)
        return np.repeat(d[:, None], e.groups.shape[1], axis=1)

    def scan(self, pixels=None):
        """Channels after flipping each listed pixel on its own; shape (n, 9)."""
        e = self.system.engine
        if pixels is None:
            pixels = np.arange(e.n_pixels)
        pixels = np.asarray(pixels)
        return kernels.flip_scan(self.m, e.groups[pixels], self._deltas(pixels), e.rx, e.tx)

    def flip(self, pixel):
        e = self.system.engine
        idx = e.groups[pixel]
        d = self._deltas(np.array([pixel]))[0]
        m = self.m
        core = np.diag(1.0 / d) + m[np.ix_(idx, idx)]
        m_new = m - m[:, idx] @ np.linalg.solve(core, m[idx, :])
        cfg = self.config.copy()
        cfg[pixel] ^= 1
        return FlipState(self.system, cfg, m_new, self.n_updates + 1)

    def refresh(self):
        return self.system.factorize(self.config)
