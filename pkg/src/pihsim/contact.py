"""Quasi-static peg-in-hole contact model and noisy wrist force/torque sensor.

The plant is memoryless in velocity: the reaction wrench depends only on the
pose (and the commanded displacement direction, which sets friction signs).
Commanded motion into contact produces force rather than interpenetration:
penetration is clamped at the force-balance depth max_contact_force/stiffness.

Pegs and holes are 2-D contours extruded along the hole axis. The hole frame
has +z pointing out of the hole mouth; the face plane is z = 0 and the cavity
spans z in [-depth, 0]. Hole contours are the pin contours dilated by the
clearance, so a centered peg always fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .se3 import Pose, compose, invert, rotation_log, skew

_CONTOUR_CODES = {
    "circle": kernels.CONTOUR_CIRCLE,
    "rectangle": kernels.CONTOUR_RECT,
    "trapezoid": kernels.CONTOUR_TRAPEZOID,
}


@dataclass(frozen=True)
class Contour:
    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in _CONTOUR_CODES:
            raise ValueError(f"unknown contour kind {self.kind!r}")
        need = {"circle": 1, "rectangle": 2, "trapezoid": 3}[self.kind]
        if len(self.params) != need or min(self.params) <= 0.0:
            raise ValueError(f"{self.kind} needs {need} positive parameters")


def circle(r: float) -> Contour:
    return Contour("circle", (r,))


def rectangle(w: float, d: float) -> Contour:
    return Contour("rectangle", (w, d))


def trapezoid(w1: float, w2: float, d: float) -> Contour:
    return Contour("trapezoid", (w1, w2, d))


@dataclass
class PegHoleModel:
    """Compound peg-hole pair set.

    pairs: list of (Contour, (cx, cy)) pin cross-sections and their centers
    in the peg tip plane. An empty list models a bare face with no hole.
    """

    pairs: list
    clearance: float
    depth: float
    hole_frame: Pose = field(default_factory=Pose.identity)
    stiffness: float = 5000.0
    friction: float = 0.3
    chamfer: float = 0.001
    jam_angle: float = math.radians(3.0)
    max_contact_force: float = 20.0
    tilt_relief_length: float = 0.003

    def __post_init__(self):
        if self.clearance <= 0.0:
            raise ValueError("clearance must be positive")
        if self.depth <= 0.0:
            raise ValueError("hole depth must be positive")
        if self.stiffness <= 0.0:
            raise ValueError("stiffness must be positive")
        n = len(self.pairs)
        self._kinds = np.zeros(n, dtype=np.int32)
        self._params = np.zeros((n, 3), dtype=float)
        self._centers = np.zeros((n, 2), dtype=float)
        for i, (contour, center) in enumerate(self.pairs):
            self._kinds[i] = _CONTOUR_CODES[contour.kind]
            for j, p in enumerate(contour.params):
                self._params[i, j] = p
            self._centers[i, 0] = center[0]
            self._centers[i, 1] = center[1]
        self._hole_inv = invert(self.hole_frame)

    @property
    def penetration_cap(self) -> float:
        return self.max_contact_force / self.stiffness


@dataclass
class WrenchSample:
    force: np.ndarray
    torque: np.ndarray
    frame: str = "world"
    noisy: bool = False

    def __post_init__(self):
        self.force = np.asarray(self.force, dtype=float)
        self.torque = np.asarray(self.torque, dtype=float)
        if not math.isfinite(float(self.force.sum()) + float(self.torque.sum())):
            raise ValueError("wrench components must be finite")


@dataclass
class SensorModel:
    """Wrist F/T sensor with per-axis uniform noise within fixed bounds."""

    force_bounds: tuple = (1.2, 1.2, 0.5)
    torque_bounds: tuple = (0.05, 0.05, 0.05)
    seed: int = 0
    mounting: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if min(self.force_bounds) < 0.0 or min(self.torque_bounds) < 0.0:
            raise ValueError("noise bounds must be nonnegative")
        self._rng = np.random.default_rng(self.seed)

    def reset(self, seed=None) -> None:
        self._rng = np.random.default_rng(self.seed if seed is None else seed)

    def draw_noise(self):
        fb = np.asarray(self.force_bounds, dtype=float)
        tb = np.asarray(self.torque_bounds, dtype=float)
        u = self._rng.uniform(-1.0, 1.0, size=6)
        return u[:3] * fb, u[3:] * tb


@dataclass
class SimState:
    peg_pose: Pose
    in_hole: bool = False
    on_floor: bool = False
    n_surface: int = 0
    insertion_depth: float = 0.0
    tilt_scale: float = 1.0


def _hole_frame_params(pose_in_hole: Pose):
    w = rotation_log(pose_in_hole.rotation)
    t = pose_in_hole.translation
    return float(t[0]), float(t[1]), float(t[2]), float(w[0]), float(w[1]), float(w[2])


def contact_wrench(peg_pose: Pose, model: PegHoleModel,
                   motion_dir=None, lever_world=None) -> WrenchSample:
    """Noiseless reaction wrench at a peg pose, in the world frame.

    motion_dir (world) sets friction directions; without it friction is
    omitted. Torque is taken about lever_world (default: the peg origin).
    """
    h_inv = model._hole_inv
    local = compose(h_inv, peg_pose)
    lx, ly, lz, wx, wy, wz = _hole_frame_params(local)
    if motion_dir is None:
        mot = np.zeros(3)
    else:
        mot = model.hole_frame.rotation.T @ np.asarray(motion_dir, dtype=float)
    if lever_world is None:
        lever = local.translation
    else:
        lever = h_inv.transform_point(lever_world)
    out = kernels.resolve_contact(
        model._kinds, model._params, model._centers,
        lx, ly, lz, lz, False, wx, wy, wz,
        float(mot[0]), float(mot[1]), float(mot[2]),
        float(lever[0]), float(lever[1]), float(lever[2]),
        model.clearance, model.depth, model.stiffness, model.friction,
        model.chamfer, math.tan(model.jam_angle), math.inf)
    f = model.hole_frame.rotation @ np.array(out[3:6])
    tq = model.hole_frame.rotation @ np.array(out[6:9])
    return WrenchSample(f, tq, frame="world", noisy=False)


def step(sim: SimState, commanded_pose: Pose, model: PegHoleModel,
         lever_world=None):
    """Advance the quasi-static plant one step toward a commanded peg pose.

    Returns (new SimState, WrenchSample in the world frame). The peg tracks
    the command except where contact clamps it; tilt relaxes toward the hole
    axis while the peg descends inside the hole (grasp compliance), unless
    the tilt exceeds the jamming angle, in which case descent is blocked.
    """
    h_inv = model._hole_inv
    cmd = compose(h_inv, commanded_pose)
    prev = compose(h_inv, sim.peg_pose)
    lx, ly, lz, wx, wy, wz = _hole_frame_params(cmd)
    s = sim.tilt_scale
    wx, wy, wz = wx * s, wy * s, wz * s
    prev_z = float(prev.translation[2])
    mot = cmd.translation - prev.translation
    if lever_world is None:
        lever = cmd.translation
    else:
        lever = h_inv.transform_point(lever_world)
    out = kernels.resolve_contact(
        model._kinds, model._params, model._centers,
        lx, ly, lz, prev_z, bool(sim.in_hole), wx, wy, wz,
        float(mot[0]), float(mot[1]), float(mot[2]),
        float(lever[0]), float(lever[1]), float(lever[2]),
        model.clearance, model.depth, model.stiffness, model.friction,
        model.chamfer, math.tan(model.jam_angle), model.penetration_cap)
    ax, ay, az = out[0], out[1], out[2]
    in_hole = bool(out[9])

    tilt_scale = sim.tilt_scale
    tilt_mag = math.hypot(wx, wy)
    if in_hole and az < prev_z and tilt_mag <= math.tan(model.jam_angle) \
            and model.tilt_relief_length > 0.0:
        tilt_scale *= math.exp(-(prev_z - az) / model.tilt_relief_length)

    w_vec = np.array([wx, wy, wz])
    ang = np.linalg.norm(w_vec)
    if ang > 1e-12:
        r_local = np.eye(3) + math.sin(ang) / ang * skew(w_vec) \
            + (1.0 - math.cos(ang)) / (ang * ang) * (skew(w_vec) @ skew(w_vec))
    else:
        r_local = np.eye(3)
    peg_pose = compose(model.hole_frame, Pose._raw(r_local, np.array([ax, ay, az])))

    depth = min(max(0.0, -az), model.depth) if in_hole else 0.0
    new_state = replace(
        sim, peg_pose=peg_pose, in_hole=in_hole, on_floor=bool(out[10]),
        n_surface=int(out[11]), insertion_depth=depth, tilt_scale=tilt_scale)
    f = model.hole_frame.rotation @ np.array(out[3:6])
    tq = model.hole_frame.rotation @ np.array(out[6:9])
    return new_state, WrenchSample(f, tq, frame="world", noisy=False)


def sense(wrench: WrenchSample, hand_pose: Pose, sensor: SensorModel) -> WrenchSample:
    """Rotate a world-frame wrench into the hand frame and add sensor noise.

    Noise is drawn per axis in the sensor frame (uniform within the
    configured bounds) and mapped through the mounting rotation.
    """
    if wrench.frame != "world":
        raise ValueError("sense expects a world-frame wrench")
    rh = hand_pose.rotation.T
    f_hand = rh @ wrench.force
    t_hand = rh @ wrench.torque
    rm = sensor.mounting.rotation
    nf, nt = sensor.draw_noise()
    f_out = f_hand + rm @ nf
    t_out = t_hand + rm @ nt
    return WrenchSample(f_out, t_out, frame="hand", noisy=True)


class PegInHolePlant:
    """Controller-facing plant: hand commands in, noisy hand-frame wrenches out.

    Couples the contact model, the sensor, and the rigid hand-to-peg
    transform (which carries any injected grasp calibration error the
    controller does not know about).
    """

    def __init__(self, model: PegHoleModel, sensor: SensorModel,
                 hand_to_peg: Pose, hand_pose: Pose):
        self.model = model
        self.sensor = sensor
        self.hand_to_peg = hand_to_peg
        self.hand_pose = hand_pose.copy()
        self.state = SimState(peg_pose=compose(hand_pose, hand_to_peg))

    def command(self, hand_pose: Pose) -> WrenchSample:
        peg_cmd = compose(hand_pose, self.hand_to_peg)
        self.state, wrench = step(self.state, peg_cmd, self.model,
                                  lever_world=hand_pose.translation)
        # the arm's encoders report where the hand actually is after the
        # contact clamp, not where it was told to go
        self.hand_pose = compose(self.state.peg_pose, invert(self.hand_to_peg))
        return sense(wrench, hand_pose, self.sensor)

    @property
    def measured_hand_pose(self) -> Pose:
        return self.hand_pose

    @property
    def insertion_depth(self) -> float:
        return self.state.insertion_depth
