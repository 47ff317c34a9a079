"""Coupled-dipole channel engine.

Every object in the room is a point dipole with a Lorentzian polarizability.
Dipoles interact through the 2D scalar Green's function, and the channel
between a transmitting and a receiving dipole is an entry of the inverse of
the interaction matrix ``W``.

Units: c = 1, working frequency 1, wavelength 1, wavenumber 2*pi. Positions
are in wavelengths. Time convention is exp(+j*omega*t).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from richris import kernels

F_WORK = 1.0
CONDITION_LIMIT = 1e12


class SingularChannelError(np.linalg.LinAlgError):
    """Raised when the interaction matrix is numerically singular."""

    def __init__(self, message, condition=None, diagnostics=None):
        super().__init__(message)
        self.condition = condition
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class DipoleProperties:
    """Lorentzian resonator: resonance ``f0``, linewidth ``chi``, strength ``gamma``."""

    f0: float
    chi: float
    gamma: float

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError(f"f0 must be positive, got {self.f0}")
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")

    def is_passive(self, f=F_WORK):
        # radiative damping of the 2D kernel puts 1/4 on Im(1/alpha)
        return self.gamma == 0 or self.chi * f / (self.gamma * self.f0**2) >= 0.25 - 1e-12

    def to_dict(self):
        return {"f0": self.f0, "chi": self.chi, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["f0"]), float(d["chi"]), float(d["gamma"]))


def wavenumber(f=F_WORK):
    return 2.0 * np.pi * f


def hankel0_second_kind(x):
    """H0^(2)(x) = J0(x) - j*Y0(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("Hankel function H0^(2) is singular for x <= 0")
    out = kernels.hankel0_2(arr)
    return complex(out) if np.ndim(x) == 0 else out


def lorentzian_polarizability(f, props: DipoleProperties):
    """alpha(f) = gamma*f0^2 / (f0^2 - f^2 + j*chi*f)."""
    if not np.all(np.asarray(f) > 0):
        raise ValueError("frequency must be positive")
    f0 = props.f0
    return props.gamma * f0**2 / (f0**2 - f * f + 1j * props.chi * f)


def greens_2d(k, r1, r2):
    """Outgoing 2D scalar Green's function between two distinct points."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    d = float(np.hypot(r1[0] - r2[0], r1[1] - r2[1]))
    if d == 0.0:
        raise ValueError("Green's function is undefined for coincident points")
    return -0.25j * hankel0_second_kind(k * d)


def greens_block(k, pos_a, pos_b):
    """Vectorized ``greens_2d`` between two point sets; all pairs must be distinct."""
    pos_a = np.asarray(pos_a, dtype=float).reshape(-1, 2)
    pos_b = np.asarray(pos_b, dtype=float).reshape(-1, 2)
    d = np.hypot(pos_a[:, None, 0] - pos_b[None, :, 0], pos_a[:, None, 1] - pos_b[None, :, 1])
    if np.any(d == 0.0):
        raise ValueError("coincident dipole positions")
    return -0.25j * kernels.hankel0_2(k * d)


def greens_self_block(k, pos):
    """Green's matrix of one point set with itself; zero diagonal."""
    pos = np.asarray(pos, dtype=float).reshape(-1, 2)
    n = len(pos)
    g = np.zeros((n, n), dtype=complex)
    if n < 2:
        return g
    iu = np.triu_indices(n, 1)
    d = np.hypot(*(pos[iu[0]] - pos[iu[1]]).T)
    if np.any(d == 0.0):
        raise ValueError("duplicate dipole positions")
    vals = -0.25j * kernels.hankel0_2(k * d)
    g[iu] = vals
    g[iu[1], iu[0]] = vals
    return g


def inverse_polarizabilities(f, f0, chi, gamma):
    """Vectorized 1/alpha for parallel property arrays."""
    f0 = np.asarray(f0, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma == 0):
        raise ValueError("zero polarizability has no inverse (gamma = 0)")
    return (f0**2 - f * f + 1j * np.asarray(chi) * f) / (gamma * f0**2)


def assemble_interaction_matrix(dipoles, f=F_WORK):
    """Interaction matrix for a list of ``(position, DipoleProperties)`` pairs.

    ``W[i, i] = 1/alpha_i(f)`` and ``W[i, j] = -G(2*pi*f, r_i, r_j)``.
    """
    if len(dipoles) == 0:
        raise ValueError("empty dipole list")
    pos = np.array([p for p, _ in dipoles], dtype=float).reshape(-1, 2)
    props = [q for _, q in dipoles]
    inv_alpha = inverse_polarizabilities(
        f, [q.f0 for q in props], [q.chi for q in props], [q.gamma for q in props]
    )
    w = -greens_self_block(wavenumber(f), pos)
    w[np.diag_indices(len(pos))] = inv_alpha
    return w


@dataclass(frozen=True)
class ChannelMatrix:
    """``values[r, t]``: field at receiver dipole ``rx[r]`` due to unit drive at ``tx[t]``."""

    values: np.ndarray
    rx: tuple
    tx: tuple

    @property
    def ue(self):
        """Channel from the first transmitter to the first receiver (the UE)."""
        return complex(self.values[0, 0])

    @property
    def rssi(self):
        return abs(self.values[0, 0])

    @property
    def aux(self):
        return self.values[1:, 0].copy()


def _lu_with_condition(w):
    """LU factorization plus a 1-norm reciprocal condition estimate."""
    lu, piv = sla.lu_factor(w, check_finite=False)
    anorm = np.linalg.norm(w, 1)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond):
        rcond = 0.0
    return lu, piv, rcond


def _check_condition(rcond, diagnostics=None, limit=CONDITION_LIMIT):
    if rcond == 0.0 or 1.0 / rcond > limit:
        cond = np.inf if rcond == 0.0 else 1.0 / rcond
        raise SingularChannelError(
            f"interaction matrix is numerically singular (condition ~ {cond:.3g})",
            condition=cond,
            diagnostics=diagnostics,
        )


def _active_system(scenario, f):
    """Interaction matrix over the dipoles that scatter (gamma > 0).

    Returns the matrix and the map from scenario index to system row.
    """
    gamma = np.asarray(scenario.gamma)
    active = np.flatnonzero(gamma > 0)
    ports = list(scenario.rx_indices) + list(scenario.tx_indices)
    if np.any(gamma[ports] == 0):
        raise ValueError("transmitter/receiver dipoles need gamma > 0")
    pos = scenario.positions[active]
    w = -greens_self_block(wavenumber(f), pos)
    w[np.diag_indices(len(active))] = inverse_polarizabilities(
        f, scenario.f0[active], scenario.chi[active], gamma[active]
    )
    row = np.full(len(gamma), -1)
    row[active] = np.arange(len(active))
    return w, row


def channel_matrix(scenario, f=F_WORK, method="inverse"):
    """Channel between the scenario's receivers (UE then AuxRX) and its transmitter.

    ``method="inverse"`` forms the full W^-1; ``method="solve"`` solves one
    linear system per transmitter. Dipoles with ``gamma = 0`` do not scatter
    and are left out of the system.
    """
    w, row = _active_system(scenario, f)
    rx = [int(row[i]) for i in scenario.rx_indices]
    tx = [int(row[i]) for i in scenario.tx_indices]
    lu, piv, rcond = _lu_with_condition(w)
    _check_condition(rcond, _diagnostics(scenario))
    if method == "inverse":
        winv = sla.lu_solve((lu, piv), np.eye(len(w), dtype=complex), check_finite=False)
        h = winv[np.ix_(rx, tx)]
    elif method == "solve":
        rhs = np.zeros((len(w), len(tx)), dtype=complex)
        rhs[tx, np.arange(len(tx))] = 1.0
        h = sla.lu_solve((lu, piv), rhs, check_finite=False)[rx]
    else:
        raise ValueError(f"unknown method {method!r}")
    return ChannelMatrix(h, tuple(scenario.rx_indices), tuple(scenario.tx_indices))


def _diagnostics(scenario):
    return {
        "n_dipoles": len(scenario.positions),
        "perturber": getattr(scenario, "perturber", None),
        "config": getattr(scenario, "config", None),
    }


@dataclass(frozen=True)
class FactorizedChannel:
    """Immutable snapshot of W^-1 supporting cheap diagonal updates.

    ``inverse`` is indexed by system row; ``row`` maps scenario dipole index
    to system row (-1 for inert dipoles, which cannot be updated).
    """

    inverse: np.ndarray
    diagonal: np.ndarray
    row: np.ndarray
    rx: tuple
    tx: tuple
    n_updates: int = field(default=0)

    @classmethod
    def from_scenario(cls, scenario, f=F_WORK):
        w, row = _active_system(scenario, f)
        lu, piv, rcond = _lu_with_condition(w)
        _check_condition(rcond, _diagnostics(scenario))
        inv = sla.lu_solve((lu, piv), np.eye(len(w), dtype=complex), check_finite=False)
        inv.setflags(write=False)
        diag = np.diag(w).copy()
        diag.setflags(write=False)
        return cls(inv, diag, row, tuple(scenario.rx_indices), tuple(scenario.tx_indices))

    @property
    def channel(self):
        rx = self.row[list(self.rx)]
        tx = self.row[list(self.tx)]
        return ChannelMatrix(self.inverse[np.ix_(rx, tx)].copy(), self.rx, self.tx)

    def update(self, indices, new_diagonals):
        """Return the snapshot after setting ``W[i, i]`` to the new values."""
        idx = np.asarray(indices, dtype=int).ravel()
        if idx.size == 0:
            return self
        rows = self.row[idx]
        if np.any(rows < 0):
            raise ValueError("cannot update inert (gamma = 0) dipoles")
        delta = np.asarray(new_diagonals, dtype=complex).ravel() - self.diagonal[rows]
        keep = delta != 0
        rows, delta = rows[keep], delta[keep]
        if rows.size == 0:
            return self
        m = self.inverse
        core = np.diag(1.0 / delta) + m[np.ix_(rows, rows)]
        cond = np.linalg.cond(core)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularChannelError("diagonal update makes the system singular", condition=cond)
        inv = m - m[:, rows] @ np.linalg.solve(core, m[rows, :])
        inv.setflags(write=False)
        diag = self.diagonal.copy()
        diag[rows] += delta
        diag.setflags(write=False)
        return FactorizedChannel(inv, diag, self.row, self.rx, self.tx, self.n_updates + 1)


def woodbury_diag_update(base: FactorizedChannel, flipped_indices, new_diagonals):
    """Channel after replacing the listed diagonal entries, without re-inversion."""
    return base.update(flipped_indices, new_diagonals).channel


def nonlinearity_index(scenario, f=F_WORK, n_samples=300, seed=0):
    """Unexplained fraction of the UE channel under the best affine model in the RIS bits.

    Draws ``n_samples`` uniform random configurations, fits
    ``H ~ c0 + sum_m c_m * bit_m`` by complex least squares and returns
    ``||residual|| / ||H||``. Zero means the RIS parametrization is linear.
    """
    n_bits = scenario.n_pixels
    if n_samples < 10 * (n_bits + 1):
        raise ValueError(f"need at least {10 * (n_bits + 1)} samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    configs = rng.integers(0, 2, size=(n_samples, n_bits))
    h = np.array([channel_matrix(scenario.with_config(c), f, method="solve").ue for c in configs])
    total = np.linalg.norm(h)
    if total == 0.0:
        return 0.0
    design = np.column_stack([np.ones(n_samples), configs]).astype(complex)
    coef, *_ = np.linalg.lstsq(design, h, rcond=None)
    resid = np.linalg.norm(h - design @ coef)
    return float(min(1.0, resid / total))
