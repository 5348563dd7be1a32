"""Three-stage compliant insertion: linear search, spiral search, impedance.

The controller commands hand positions with a fixed orientation and reads a
noisy hand-frame wrench plus the measured (encoder) hand pose back from the
plant. Phase order is Linear -> Spiral -> Impedance -> Done, with any phase
able to fail.

Sign conventions: the insertion direction v points from the peg toward the
hole. The literal stop test compares the signed projection of the rotated
sensor force onto v against the threshold; because a reaction force points
against the insertion direction, the strategy layer applies the comparison
to the projection magnitude by default (config.project_abs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .se3 import Pose, rodrigues, identity_columns


class Phase(Enum):
    LINEAR = "linear"
    SPIRAL = "spiral"
    IMPEDANCE = "impedance"
    DONE = "done"
    FAILED = "failed"


_PHASE_ORDER = [Phase.LINEAR, Phase.SPIRAL, Phase.IMPEDANCE]

SPIRAL_LITERAL = "literal"
SPIRAL_CENTERED = "centered"
EXIT_FORCE_DROP = "force-drop"   # hole found when the press reaction collapses
EXIT_FORCE_RISE = "force-rise"   # alternate textual reading: stop on force rise


class SpiralRadiusExhausted(Exception):
    """Spiral radius budget exceeded before the hole was found."""


def _gain_triple(g) -> np.ndarray:
    arr = np.asarray(g, dtype=float)
    if arr.ndim == 0:
        arr = np.full(3, float(arr))
    if arr.shape != (3,):
        raise ValueError("gain must be a scalar or length-3")
    return arr


@dataclass
class ControllerConfig:
    v_direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    linear_threshold: float = 4.0
    spiral_exit_threshold: float = 7.0
    delta_theta: float = 0.09
    delta_r: float = 7e-7
    max_spiral_radius: float = 0.0035
    gain_m: np.ndarray = 1.0
    gain_c: np.ndarray = 50.0
    gain_k: np.ndarray = 200.0
    dt: float = 0.02
    target_insertion_depth: float = 0.005
    linear_step: float = 0.001
    max_linear_steps: int = 60
    max_spiral_probes: int = 20000
    max_impedance_steps: int = 2000
    # strategy details
    spiral_mode: str = SPIRAL_LITERAL
    spiral_exit_rule: str = EXIT_FORCE_DROP
    project_abs: bool = True
    probe_depth: float = 0.002
    impedance_feed: float = 0.0002
    standoff: float = 0.01
    drop_travel_margin: float = 0.004

    def __post_init__(self):
        self.v_direction = np.asarray(self.v_direction, dtype=float)
        n = np.linalg.norm(self.v_direction)
        if n < 1e-12:
            raise ValueError("v_direction has zero norm")
        self.v_direction = self.v_direction / n
        if self.linear_threshold <= 0.0 or self.spiral_exit_threshold <= 0.0:
            raise ValueError("thresholds must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        self.gain_m = _gain_triple(self.gain_m)
        self.gain_c = _gain_triple(self.gain_c)
        self.gain_k = _gain_triple(self.gain_k)
        if np.any(self.gain_m < 0.0) or np.any(self.gain_c < 0.0) or np.any(self.gain_k < 0.0):
            raise ValueError("gains must be nonnegative")
        denom = self.gain_m / self.dt ** 2 + self.gain_c / self.dt + self.gain_k
        if np.any(denom <= 0.0):
            raise ValueError("impedance denominator must be positive per axis")
        if self.spiral_mode not in (SPIRAL_LITERAL, SPIRAL_CENTERED):
            raise ValueError(f"unknown spiral mode {self.spiral_mode!r}")
        if self.spiral_exit_rule not in (EXIT_FORCE_DROP, EXIT_FORCE_RISE):
            raise ValueError(f"unknown spiral exit rule {self.spiral_exit_rule!r}")


@dataclass
class SpiralState:
    center: np.ndarray
    position: np.ndarray
    radius: float = 0.0
    theta: float = 0.0
    index: int = 0


@dataclass
class TraceRecord:
    t: float
    phase: Phase
    position: np.ndarray
    force: np.ndarray
    torque: np.ndarray


@dataclass
class ControllerTrace:
    records: list = field(default_factory=list)

    def append(self, t, phase, position, force, torque):
        self.records.append(TraceRecord(
            float(t), phase, np.asarray(position, dtype=float).copy(),
            np.asarray(force, dtype=float).copy(),
            np.asarray(torque, dtype=float).copy()))

    def extend(self, other: "ControllerTrace"):
        self.records.extend(other.records)

    def __len__(self):
        return len(self.records)

    def phase_runs(self):
        """Run-length encoding of the phase labels."""
        runs = []
        for rec in self.records:
            if runs and runs[-1][0] == rec.phase:
                runs[-1][1] += 1
            else:
                runs.append([rec.phase, 1])
        return [(p, n) for p, n in runs]

    def phase_counts(self):
        counts = {p: 0 for p in _PHASE_ORDER}
        for rec in self.records:
            counts[rec.phase] = counts.get(rec.phase, 0) + 1
        return counts


def linear_stop_condition(v_direction, R_hnd, F, threshold: float,
                          use_abs: bool = False) -> bool:
    """True (stop) iff the force projected onto the insertion direction
    exceeds the threshold: v . (R @ F) > threshold, optionally on |.|."""
    proj = float(np.dot(v_direction, np.asarray(R_hnd) @ np.asarray(F, dtype=float)))
    if use_abs:
        proj = abs(proj)
    return proj > threshold


def spiral_next_position(state: SpiralState, config: ControllerConfig):
    """Advance the spiral one step and return (next position, new state).

    theta and r grow by delta_theta / delta_r; the offset is
    r * rodrigues(theta, v) @ (Ix + Iy), accumulated onto the previous
    position (literal mode) or onto the spiral center (centered mode). Any
    component along v is projected out so probing stays in the plane normal
    to the insertion direction.
    """
    r_next = state.radius + config.delta_r
    theta_next = state.theta + config.delta_theta
    if r_next > config.max_spiral_radius:
        raise SpiralRadiusExhausted(
            f"spiral radius {r_next:.6f} exceeds budget {config.max_spiral_radius:.6f}")
    ix, iy = identity_columns()
    offset = r_next * (rodrigues(theta_next, config.v_direction) @ (ix + iy))
    offset = offset - np.dot(offset, config.v_direction) * config.v_direction
    if config.spiral_mode == SPIRAL_CENTERED:
        pos = state.center + offset
    else:
        pos = state.position + offset
    new_state = replace(state, position=pos, radius=r_next,
                        theta=theta_next, index=state.index + 1)
    return pos, new_state


def impedance_update(F_i, P_i, P_im1, gain_m, gain_c, gain_k, dt: float):
    """One step of the discrete workspace impedance law (per axis):

    P_{i+1} = (F + m(2P_i - P_{i-1})/dt^2 + c P_i/dt + k P_i)
              / (m/dt^2 + c/dt + k)
    """
    m = _gain_triple(gain_m)
    c = _gain_triple(gain_c)
    k = _gain_triple(gain_k)
    denom = m / dt ** 2 + c / dt + k
    if np.any(denom <= 0.0):
        raise ValueError("impedance denominator must be positive per axis")
    F_i = np.asarray(F_i, dtype=float)
    P_i = np.asarray(P_i, dtype=float)
    P_im1 = np.asarray(P_im1, dtype=float)
    num = F_i + m * (2.0 * P_i - P_im1) / dt ** 2 + c * P_i / dt + k * P_i
    return num / denom


@dataclass
class PhaseResult:
    success: bool
    pose: Pose
    trace: ControllerTrace
    steps: int = 0
    extra: dict = field(default_factory=dict)


def _projected_reaction(config, R0, wrench) -> float:
    proj = float(np.dot(config.v_direction, R0 @ wrench.force))
    return abs(proj) if config.project_abs else proj


def run_linear_search(config: ControllerConfig, plant, start_pose: Pose,
                      t0: float = 0.0) -> PhaseResult:
    """Advance along v_direction in linear_step increments until the sensed
    reaction exceeds linear_threshold; orientation stays fixed."""
    R0 = start_pose.rotation
    pos = start_pose.translation.copy()
    trace = ControllerTrace()
    t = t0
    for i in range(config.max_linear_steps):
        if i > 0:
            pos = pos + config.linear_step * config.v_direction
        wrench = plant.command(Pose._raw(R0, pos))
        trace.append(t, Phase.LINEAR, pos, wrench.force, wrench.torque)
        t += config.dt
        if linear_stop_condition(config.v_direction, R0, wrench.force,
                                 config.linear_threshold, use_abs=config.project_abs):
            measured = plant.measured_hand_pose
            return PhaseResult(True, Pose._raw(R0, measured.translation.copy()), trace,
                               steps=len(trace))
    return PhaseResult(False, Pose._raw(R0, pos), trace, steps=len(trace))


def run_spiral_search(config: ControllerConfig, plant, contact_pose: Pose,
                      t0: float = 0.0) -> PhaseResult:
    """Probe along the expanding spiral until the press reaction signals the
    hole (per spiral_exit_rule), keeping the hand orientation fixed.

    Each probe lifts one linear_step off the surface, moves laterally to the
    next spiral position, then presses probe_depth past the contact level.
    """
    R0 = contact_pose.rotation
    v = config.v_direction
    surface_pos = contact_pose.translation.copy()
    state = SpiralState(center=surface_pos.copy(), position=surface_pos.copy())
    trace = ControllerTrace()
    t = t0

    def do(pos):
        nonlocal t
        wrench = plant.command(Pose._raw(R0, pos))
        trace.append(t, Phase.SPIRAL, pos, wrench.force, wrench.torque)
        t += config.dt
        return wrench

    # the (Ix + Iy) basis gives in-plane offsets of magnitude r*sqrt(2), so
    # the physical search disc has radius sqrt(2) * max_spiral_radius
    reach = math.sqrt(2.0) * config.max_spiral_radius + 1e-12
    target_xy = surface_pos.copy()
    for _ in range(config.max_spiral_probes):
        if np.linalg.norm(target_xy - surface_pos) > reach:
            return PhaseResult(False, Pose._raw(R0, target_xy), trace, steps=len(trace),
                               extra={"probes": state.index + 1, "reason": "radius"})
        # lift by one linear step off the surface while moving to the next
        # spiral point (the lateral shift is micrometers, so no dragging)
        do(target_xy - config.linear_step * v)
        wrench = do(target_xy + config.probe_depth * v)  # press
        reaction = _projected_reaction(config, R0, wrench)
        found = (reaction < config.spiral_exit_threshold
                 if config.spiral_exit_rule == EXIT_FORCE_DROP
                 else reaction > config.spiral_exit_threshold)
        if found:
            measured = plant.measured_hand_pose
            return PhaseResult(True, Pose._raw(R0, measured.translation.copy()), trace,
                               steps=len(trace), extra={"probes": state.index + 1})
        last_xy = target_xy
        try:
            next_xy, state = spiral_next_position(state, config)
        except SpiralRadiusExhausted:
            return PhaseResult(False, Pose._raw(R0, target_xy), trace, steps=len(trace),
                               extra={"probes": state.index + 1, "reason": "radius"})
        # keep the probing plane pinned at the measured surface level
        target_xy = next_xy - np.dot(next_xy - surface_pos, v) * v
    return PhaseResult(False, Pose._raw(R0, target_xy), trace, steps=len(trace),
                       extra={"probes": state.index + 1, "reason": "budget"})


def run_impedance_insertion(config: ControllerConfig, plant, hole_pose: Pose,
                            t0: float = 0.0, depth0: float = 0.0) -> PhaseResult:
    """Feed along v_direction while the impedance law tracks the lateral
    sensed force, until the depth estimate reaches target_insertion_depth.

    The depth estimate integrates measured (encoder) descent from the drop
    event; a jammed peg stalls the estimate and exhausts the step budget.
    """
    R0 = hole_pose.rotation
    v = config.v_direction
    p_meas = plant.measured_hand_pose.translation.copy()
    p_prev = p_meas.copy()
    anchor = p_meas.copy()
    trace = ControllerTrace()
    t = t0
    depth_est = depth0
    # entry sense: the first impedance update needs a force reading
    wrench = plant.command(Pose._raw(R0, p_meas))
    trace.append(t, Phase.IMPEDANCE, p_meas, wrench.force, wrench.torque)
    t += config.dt
    for _ in range(config.max_impedance_steps):
        if depth_est >= config.target_insertion_depth:
            return PhaseResult(True, Pose._raw(R0, p_meas), trace, steps=len(trace),
                               extra={"depth_estimate": depth_est})
        # lateral impedance on the sensed force, constant axial feed
        f_world = R0 @ wrench.force
        f_lat = f_world - np.dot(f_world, v) * v
        p_imp = impedance_update(f_lat, p_meas, p_prev,
                                 config.gain_m, config.gain_c, config.gain_k, config.dt)
        p_cmd = p_imp - np.dot(p_imp, v) * v + (np.dot(p_meas, v) + config.impedance_feed) * v
        wrench = plant.command(Pose._raw(R0, p_cmd))
        trace.append(t, Phase.IMPEDANCE, p_cmd, wrench.force, wrench.torque)
        t += config.dt
        p_prev = p_meas
        p_meas = plant.measured_hand_pose.translation.copy()
        depth_est = depth0 + float(np.dot(p_meas - anchor, v))
    return PhaseResult(False, Pose._raw(R0, p_meas), trace, steps=len(trace),
                       extra={"depth_estimate": depth_est, "reason": "budget"})


@dataclass
class InsertionResult:
    outcome: str                  # "done" | "failed"
    failed_phase: Phase | None
    trace: ControllerTrace
    final_pose: Pose
    phase_steps: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.outcome == "done"


def run_insertion(config: ControllerConfig, plant, pre_assembly_pose: Pose) -> InsertionResult:
    """Execute Linear -> Spiral -> Impedance from the pre-assembly pose."""
    trace = ControllerTrace()
    R0 = pre_assembly_pose.rotation

    lin = run_linear_search(config, plant, pre_assembly_pose, t0=0.0)
    trace.extend(lin.trace)
    steps = {Phase.LINEAR: lin.steps, Phase.SPIRAL: 0, Phase.IMPEDANCE: 0}
    if not lin.success:
        return InsertionResult("failed", Phase.LINEAR, trace, lin.pose, steps)

    t = len(trace) * config.dt
    travel = float(np.dot(lin.pose.translation - pre_assembly_pose.translation,
                          config.v_direction))
    already_in = travel > config.standoff + config.drop_travel_margin
    if already_in:
        # the peg ran past the face plane during the linear stage, so it is
        # engaged in the hole already; log one confirming spiral-phase sense
        wrench = plant.command(lin.pose)
        trace.append(t, Phase.SPIRAL, lin.pose.translation, wrench.force, wrench.torque)
        steps[Phase.SPIRAL] = 1
        hole_pose = Pose._raw(R0, plant.measured_hand_pose.translation.copy())
        depth0 = travel - config.standoff
    else:
        spi = run_spiral_search(config, plant, lin.pose, t0=t)
        trace.extend(spi.trace)
        steps[Phase.SPIRAL] = spi.steps
        if not spi.success:
            return InsertionResult("failed", Phase.SPIRAL, trace, spi.pose, steps)
        hole_pose = spi.pose
        depth0 = config.probe_depth

    t = len(trace) * config.dt
    imp = run_impedance_insertion(config, plant, hole_pose, t0=t, depth0=depth0)
    trace.extend(imp.trace)
    steps[Phase.IMPEDANCE] = imp.steps
    if not imp.success:
        return InsertionResult("failed", Phase.IMPEDANCE, trace, imp.pose, steps)
    return InsertionResult("done", None, trace, imp.pose, steps)
