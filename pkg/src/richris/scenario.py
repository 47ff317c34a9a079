"""Case-study world: room fences, distributed RIS, transceivers and a moving object.

A :class:`ScenarioSpec` is the declarative description (loaded from JSON);
:func:`compile_scenario` turns it into a flat dipole list with named index
sets. All lengths are in wavelengths.
"""
from __future__ import annotations

import copy
import enum
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from richris.physics import DipoleProperties

log = logging.getLogger(__name__)

N_PIXELS = 25
ELEMENTS_PER_PIXEL = 4
N_AUX = 8
OBJECT_CLEARANCE = 0.25
MIN_SEPARATION = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario specification or geometry."""


class Shape(enum.IntEnum):
    CROSS = 0
    CIRCLE = 1
    SQUARE = 2

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        return cls[str(value).upper()]


SHAPES = tuple(Shape)


@dataclass(frozen=True)
class PerturberState:
    """Position ``p`` in [0, 1] along the trajectory and the object's shape."""

    p: float
    shape: Shape = Shape.CROSS
    clamped: bool = field(default=False, compare=False)

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p):
            raise ScenarioError("trajectory parameter must be finite")
        if p < 0.0 or p > 1.0:
            object.__setattr__(self, "clamped", True)
            p = min(1.0, max(0.0, p))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "shape", Shape.parse(self.shape))


class Trajectory:
    """Polyline with arc-length parametrization on [0, 1]."""

    def __init__(self, vertices):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(self.vertices) < 2:
            raise ScenarioError("trajectory needs at least two vertices")
        seg = np.diff(self.vertices, axis=0)
        self.segment_lengths = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(self.segment_lengths <= 0):
            raise ScenarioError("trajectory has a zero-length segment")
        self.cumulative = np.concatenate([[0.0], np.cumsum(self.segment_lengths)])
        self.length = float(self.cumulative[-1])

    def point(self, p):
        return trajectory_point(self, p)


def trajectory_point(trajectory: Trajectory, p):
    """Point at arc-length fraction ``p``; values outside [0, 1] are clamped."""
    if p < 0.0 or p > 1.0:
        log.warning("trajectory parameter %g clamped to [0, 1]", p)
        p = min(1.0, max(0.0, p))
    s = p * trajectory.length
    i = int(np.searchsorted(trajectory.cumulative, s, side="right") - 1)
    i = min(max(i, 0), len(trajectory.segment_lengths) - 1)
    frac = (s - trajectory.cumulative[i]) / trajectory.segment_lengths[i]
    v = trajectory.vertices
    return v[i] + frac * (v[i + 1] - v[i])


@dataclass(frozen=True)
class ObjectGeometry:
    spacing: float = 0.25
    cross_length: float = 1.2
    circle_radius: float = 0.5
    square_side: float = 1.0


def object_footprint(shape, center, geometry: ObjectGeometry = ObjectGeometry()):
    """Dipole positions of the object, centred on ``center``.

    Cross: two orthogonal bars; circle: a ring; square: the perimeter. Every
    outline is sampled at a pitch no larger than ``geometry.spacing``.
    """
    shape = Shape.parse(shape)
    c = np.asarray(center, dtype=float)
    h = geometry.spacing
    if shape is Shape.CROSS:
        n = int(np.ceil(geometry.cross_length / h - 1e-9)) + 1
        t = np.linspace(-0.5, 0.5, n) * geometry.cross_length
        if n % 2:
            # odd counts put a point at the centre; share it between the bars
            t_v = t[t != 0.0]
        else:
            t_v = t
        pts = np.concatenate(
            [np.stack([t, np.zeros_like(t)], 1), np.stack([np.zeros_like(t_v), t_v], 1)]
        )
    elif shape is Shape.CIRCLE:
        r = geometry.circle_radius
        n = int(np.ceil(2 * np.pi * r / h - 1e-9))
        a = 2 * np.pi * np.arange(n) / n
        pts = r * np.stack([np.cos(a), np.sin(a)], 1)
    else:
        s = geometry.square_side
        per_side = int(np.ceil(s / h - 1e-9))
        e = (np.arange(per_side) / per_side - 0.5) * s
        half = np.full(per_side, 0.5 * s)
        pts = np.concatenate(
            [
                np.stack([e, -half], 1),
                np.stack([half, e], 1),
                np.stack([-e, half], 1),
                np.stack([-half, -e], 1),
            ]
        )
    pts = pts - pts.mean(axis=0)
    return pts + c


def _segments_intersect(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def polygon_is_simple(poly):
    poly = np.asarray(poly, dtype=float)
    n = len(poly)
    if n < 3:
        return False
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def point_in_polygon(pt, poly):
    """Even-odd rule. ``pt`` may be one point or an (n, 2) array."""
    pts = np.asarray(pt, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    x, y = pts[:, :1], pts[:, 1:]
    crosses = (a[None, :, 1] > y) != (b[None, :, 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = a[None, :, 0] + (y - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (b[None, :, 1] - a[None, :, 1])
    inside = (np.count_nonzero(crosses & (x < xc), axis=1) % 2) == 1
    return bool(inside[0]) if single else inside


def distance_to_polygon(pts, poly):
    """Distance from each point to the polygon boundary."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    ab = b - a
    t = np.einsum("pek,ek->pe", pts[:, None, :] - a[None], ab) / np.einsum("ek,ek->e", ab, ab)
    t = np.clip(t, 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.min(np.hypot(*(pts[:, None, :] - proj).transpose(2, 0, 1)), axis=1)


@dataclass(frozen=True)
class RoomSpec:
    boundary: np.ndarray
    fence_spacing: float
    wall: DipoleProperties

    def validate(self):
        if not polygon_is_simple(self.boundary):
            raise ScenarioError("room boundary polygon is self-intersecting")
        if not 0 < self.fence_spacing <= 0.25 + 1e-12:
            raise ScenarioError("fence spacing must be in (0, 0.25] wavelengths")

    @property
    def perimeter(self):
        b = np.asarray(self.boundary)
        return float(np.sum(np.hypot(*(np.roll(b, -1, axis=0) - b).T)))

    def fence_positions(self):
        """Equally spaced points along the closed boundary, ceil(perimeter/spacing) of them."""
        b = np.asarray(self.boundary, dtype=float)
        closed = np.vstack([b, b[:1]])
        seg = np.diff(closed, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        n = int(np.ceil(cum[-1] / self.fence_spacing - 1e-9))
        s = np.arange(n) * cum[-1] / n
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
        return closed[i] + ((s - cum[i]) / lengths[i])[:, None] * seg[i]


@dataclass(frozen=True)
class RisSegment:
    start: tuple
    direction: tuple
    pixels: int


@dataclass(frozen=True)
class RisSpec:
    segments: tuple
    on: DipoleProperties
    off: DipoleProperties
    element_spacing: float = 0.25
    elements_per_pixel: int = ELEMENTS_PER_PIXEL

    def validate(self):
        total = sum(s.pixels for s in self.segments)
        if total != N_PIXELS:
            raise ScenarioError(f"RIS must have exactly {N_PIXELS} macro-pixels, got {total}")
        if self.elements_per_pixel != ELEMENTS_PER_PIXEL:
            raise ScenarioError(f"each macro-pixel groups exactly {ELEMENTS_PER_PIXEL} elements")
        if abs(self.element_spacing - 0.25) > 1e-12:
            raise ScenarioError("RIS element spacing must be 0.25 wavelengths")
        if len(self.segments) != 4:
            raise ScenarioError("the distributed RIS has four wall-conformal segments")

    def element_positions(self):
        pts = []
        for seg in self.segments:
            d = np.asarray(seg.direction, dtype=float)
            d = d / np.hypot(*d)
            k = np.arange(seg.pixels * self.elements_per_pixel)
            pts.append(np.asarray(seg.start, float) + np.outer((k + 0.5) * self.element_spacing, d))
        return np.concatenate(pts)


@dataclass(frozen=True)
class Transceivers:
    bs: tuple
    ue: tuple
    aux: tuple
    props: DipoleProperties

    def validate(self):
        if len(self.aux) != N_AUX:
            raise ScenarioError(f"expected {N_AUX} auxiliary receivers, got {len(self.aux)}")


@dataclass(frozen=True)
class ScenarioSpec:
    room: RoomSpec
    ris: RisSpec
    trajectory: Trajectory
    transceivers: Transceivers
    object_props: DipoleProperties
    geometry: ObjectGeometry
    default_perturber: PerturberState
    frequency: float = 1.0
    condition_limit: float = 1e12
    source: dict = field(default=None, compare=False, repr=False)

    @classmethod
    def from_dict(cls, d):
        from richris.schema import validate_document

        validate_document(d)
        dp = DipoleProperties.from_dict
        room = RoomSpec(
            np.asarray(d["room"]["boundary"], dtype=float),
            float(d["room"]["fence_spacing"]),
            dp(d["room"]["wall"]),
        )
        r = d["ris"]
        ris = RisSpec(
            tuple(
                RisSegment(tuple(s["start"]), tuple(s["direction"]), int(s["pixels"]))
                for s in r["segments"]
            ),
            dp(r["on"]),
            dp(r["off"]),
            float(r.get("element_spacing", 0.25)),
            int(r.get("elements_per_pixel", ELEMENTS_PER_PIXEL)),
        )
        t = d["transceivers"]
        trx = Transceivers(
            tuple(t["bs"]), tuple(t["ue"]), tuple(tuple(a) for a in t["aux"]), dp(t["props"])
        )
        pd = d["perturber_defaults"]
        geometry = ObjectGeometry(
            float(pd.get("spacing", 0.25)),
            float(pd.get("cross_length", 1.2)),
            float(pd.get("circle_radius", 0.5)),
            float(pd.get("square_side", 1.0)),
        )
        pc = d.get("physics_constants", {})
        spec = cls(
            room,
            ris,
            Trajectory(d["trajectory"]["vertices"]),
            trx,
            dp(pd["props"]),
            geometry,
            PerturberState(float(pd.get("p", 0.0)), Shape.parse(pd.get("shape", "cross"))),
            float(pc.get("frequency", 1.0)),
            float(pc.get("condition_limit", 1e12)),
            copy.deepcopy(d),
        )
        spec.validate()
        return spec

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self):
        self.room.validate()
        self.ris.validate()
        self.transceivers.validate()

    @property
    def hash(self):
        return scenario_hash(self.source)

    def replace(self, **kw):
        return replace(self, **kw)


def scenario_hash(document):
    """Content hash of a scenario document (canonical JSON, sha256)."""
    canon = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def default_document():
    text = resources.files("richris").joinpath("data/default_scenario.json").read_text()
    return json.loads(text)


def default_scenario():
    return ScenarioSpec.from_dict(default_document())


def config_to_int(bits):
    bits = np.asarray(bits, dtype=np.int64)
    return int(np.sum(bits << np.arange(len(bits), dtype=np.int64)))


def config_from_int(value, n_bits=N_PIXELS):
    if not 0 <= value < 2**n_bits:
        raise ValueError(f"configuration integer out of range for {n_bits} bits")
    return ((int(value) >> np.arange(n_bits)) & 1).astype(np.uint8)


def as_config(bits, n_bits=N_PIXELS):
    arr = np.asarray(bits)
    if arr.shape != (n_bits,) or not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"RIS configuration must be {n_bits} bits")
    return arr.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class CompiledScenario:
    """Flat dipole list with index sets.

    Ordering is TX, UE, AUX, RIS elements (pixel-major), walls, object, so the
    first ``10 + 100`` dipoles are the ports used by the fast engine.
    """

    positions: np.ndarray
    f0: np.ndarray
    chi: np.ndarray
    gamma: np.ndarray
    index: dict
    ris_groups: np.ndarray
    on: DipoleProperties
    off: DipoleProperties
    config: np.ndarray
    perturber: PerturberState

    @property
    def n(self):
        return len(self.positions)

    @property
    def n_pixels(self):
        return len(self.ris_groups)

    @property
    def rx_indices(self):
        return tuple(self.index["ue"]) + tuple(self.index["aux"])

    @property
    def tx_indices(self):
        return tuple(self.index["tx"])

    def with_config(self, config):
        config = as_config(config, self.n_pixels)
        f0, chi, gamma = self.f0.copy(), self.chi.copy(), self.gamma.copy()
        for bit, props in ((1, self.on), (0, self.off)):
            idx = self.ris_groups[config == bit].ravel()
            f0[idx], chi[idx], gamma[idx] = props.f0, props.chi, props.gamma
        return replace(self, f0=f0, chi=chi, gamma=gamma, config=config)

    def records(self):
        """Per-dipole (x, y, f0, chi, gamma) rows for comparisons."""
        return np.column_stack([self.positions, self.f0, self.chi, self.gamma])


def apply_ris_config(scenario: CompiledScenario, config):
    """Set each macro-pixel's four elements to the ON (bit 1) or OFF (bit 0) resonator."""
    return scenario.with_config(config)


def static_layout(spec: ScenarioSpec):
    """Positions, properties and index sets of everything except the object."""
    trx = spec.transceivers
    ris_pos = spec.ris.element_positions()
    walls = spec.room.fence_positions()
    pos = np.concatenate(
        [np.asarray([trx.bs, trx.ue], float), np.asarray(trx.aux, float), ris_pos, walls]
    )
    props = (
        [trx.props] * (2 + len(trx.aux))
        + [spec.ris.off] * len(ris_pos)
        + [spec.room.wall] * len(walls)
    )
    n_aux = len(trx.aux)
    start_ris = 2 + n_aux
    index = {
        "tx": np.array([0]),
        "ue": np.array([1]),
        "aux": np.arange(2, start_ris),
        "ris": np.arange(start_ris, start_ris + len(ris_pos)),
        "wall": np.arange(start_ris + len(ris_pos), len(pos)),
    }
    groups = index["ris"].reshape(-1, spec.ris.elements_per_pixel)
    return pos, props, index, groups


def object_clearance(spec: ScenarioSpec, obj_pos, static_pos=None):
    """Smallest distance from the object dipoles to the fences and to any other dipole."""
    if static_pos is None:
        static_pos = static_layout(spec)[0]
    inside = bool(np.all(point_in_polygon(obj_pos, spec.room.boundary)))
    d_wall = float(np.min(distance_to_polygon(obj_pos, spec.room.boundary)))
    d = np.hypot(*(obj_pos[:, None, :] - static_pos[None]).transpose(2, 0, 1))
    return inside, min(d_wall, float(d.min()))


def compile_scenario(spec: ScenarioSpec, perturber: PerturberState = None, config=None):
    """Compile the spec at a perturber state and RIS configuration (default all OFF)."""
    if perturber is None:
        perturber = spec.default_perturber
    if perturber.clamped:
        log.warning("perturber position clamped to %g", perturber.p)
    pos, props, index, groups = static_layout(spec)
    center = trajectory_point(spec.trajectory, perturber.p)
    obj = object_footprint(perturber.shape, center, spec.geometry)
    inside, clearance = object_clearance(spec, obj, pos)
    if not inside or clearance < OBJECT_CLEARANCE - 1e-9:
        raise ScenarioError(
            f"object at p={perturber.p:g} ({perturber.shape.name.lower()}) violates the "
            f"{OBJECT_CLEARANCE} wavelength clearance (closest approach {clearance:.3f})"
        )
    index = dict(index)
    index["object"] = np.arange(len(pos), len(pos) + len(obj))
    pos = np.concatenate([pos, obj])
    props = props + [spec.object_props] * len(obj)
    _check_distinct(pos)
    scenario = CompiledScenario(
        positions=pos,
        f0=np.array([q.f0 for q in props]),
        chi=np.array([q.chi for q in props]),
        gamma=np.array([q.gamma for q in props]),
        index=index,
        ris_groups=groups,
        on=spec.ris.on,
        off=spec.ris.off,
        config=np.zeros(len(groups), dtype=np.uint8),
        perturber=perturber,
    )
    if config is not None:
        scenario = scenario.with_config(config)
    return scenario


def _check_distinct(pos):
    iu = np.triu_indices(len(pos), 1)
    d = np.hypot(*(pos[iu[0]] - pos[iu[1]]).T)
    if np.any(d < MIN_SEPARATION):
        k = int(np.argmin(d))
        raise ScenarioError(f"duplicate dipole positions at indices {iu[0][k]} and {iu[1][k]}")


def check_trajectory_clearance(spec: ScenarioSpec, n_steps=201):
    """Worst clearance over the trajectory for every shape; list of problems found."""
    static_pos = static_layout(spec)[0]
    problems = []
    worst = np.inf
    for shape in SHAPES:
        for p in np.linspace(0.0, 1.0, n_steps):
            obj = object_footprint(shape, trajectory_point(spec.trajectory, p), spec.geometry)
            inside, c = object_clearance(spec, obj, static_pos)
            worst = min(worst, c)
            if not inside or c < OBJECT_CLEARANCE - 1e-9:
                problems.append((shape.name.lower(), float(p), float(c)))
    return worst, problems


def open_layout(spec: ScenarioSpec = None, pitch=2.0, standoff=10.0):
    """Free-space reference: no fences, no object, the 100 RIS elements on a line ``pitch`` apart.

    TX and UE sit on the same side of the line at distance ``standoff``; the
    AuxRXs keep the scenario's probe properties. Elements and pixels keep
    their pixel-major grouping.
    """
    if spec is None:
        spec = default_scenario()
    if pitch < 2.0:
        raise ScenarioError("open layout needs RIS elements at least 2 wavelengths apart")
    n_el = N_PIXELS * ELEMENTS_PER_PIXEL
    centre = 0.5 * (n_el - 1) * pitch
    ris = np.column_stack([np.arange(n_el) * pitch, np.zeros(n_el)])
    trx = np.array([[centre - 3.0, -standoff], [centre + 3.0, -standoff]])
    aux = np.column_stack([centre - 1.75 + 0.5 * np.arange(N_AUX), np.full(N_AUX, -0.5 * standoff)])
    pos = np.concatenate([trx, aux, ris])
    probe = spec.transceivers.props
    n_ports = len(trx) + N_AUX
    off = spec.ris.off
    f0 = np.array([probe.f0] * n_ports + [off.f0] * n_el)
    chi = np.array([probe.chi] * n_ports + [off.chi] * n_el)
    gamma = np.array([probe.gamma] * n_ports + [off.gamma] * n_el)
    ris_idx = np.arange(n_ports, n_ports + n_el)
    index = {
        "tx": np.array([0]),
        "ue": np.array([1]),
        "aux": np.arange(2, 2 + N_AUX),
        "ris": ris_idx,
        "wall": np.arange(0),
        "object": np.arange(0),
    }
    return CompiledScenario(
        pos, f0, chi, gamma, index, ris_idx.reshape(N_PIXELS, ELEMENTS_PER_PIXEL), spec.ris.on, off,
        np.zeros(N_PIXELS, dtype=np.uint8), PerturberState(0.0),
    )
