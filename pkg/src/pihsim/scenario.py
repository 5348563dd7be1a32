"""Scenario file loading and validation.

Scenarios are TOML documents describing the scene, the two objects and
their grasp candidates, the arm chains, the peg-hole model, and the
controller/planner parameters. See the bundled files under
pihsim/scenarios/ and the schema section in the README.

Geometry conventions tied together here:
  - objects.assembly carries the hole set; peg_hole.frame_* places the hole
    frame in the assembly object's body frame (+z out of the mouth).
  - objects.mating carries the peg; peg_tip_* places the peg tip frame in
    the mating body frame, axes aligned with the hole frame when inserted.
  - The pre-assembly mating pose puts the tip controller.standoff above the
    hole mouth along the hole axis.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .collision import Body, ShapePrimitive, box, compound, cylinder
from .contact import Contour, PegHoleModel
from .controller import ControllerConfig
from .kinematics import Joint, KinematicChain
from .motion import PlannerParams
from .regrasp import Grasp
from .se3 import Pose

SCENARIO_DIR_ENV = "PIHSIM_SCENARIO_DIR"
_BUNDLED_DIR = Path(__file__).parent / "scenarios"


class ScenarioError(ValueError):
    """Scenario failed to parse or validate; .problems lists every issue."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class ObjectSpec:
    object_id: str
    shape: ShapePrimitive
    initial_pose: Pose
    grasps: list
    stable_placements: list = field(default_factory=list)


@dataclass
class ErrorInjection:
    position: float = 0.0   # m, per-axis uniform bound
    rotation: float = 0.0   # rad, per-axis uniform bound


@dataclass
class SensorSpec:
    force_bounds: tuple = (1.2, 1.2, 0.5)
    torque_bounds: tuple = (0.05, 0.05, 0.05)
    mounting: Pose = field(default_factory=Pose.identity)


@dataclass
class Scenario:
    name: str
    seed: int
    bodies: list
    arms: dict                 # name -> KinematicChain
    homes: dict                # name -> home config
    mating: ObjectSpec
    assembly: ObjectSpec
    hole_local: Pose           # hole frame in the assembly body frame
    peg_tip: Pose              # peg tip frame in the mating body frame
    hole_model_args: dict      # PegHoleModel kwargs except hole_frame
    controller: ControllerConfig
    planner: PlannerParams
    sensor: SensorSpec
    error: ErrorInjection
    assembly_pose: Pose        # pre-assembly pose of the assembly object
    handover_poses: list
    require_perpendicular: bool = True
    insert_arm: str = "right"
    insert_grasp: str = ""
    path: str = ""

    def hole_frame_world(self) -> Pose:
        from .se3 import compose
        return compose(self.assembly_pose, self.hole_local)

    def make_hole_model(self) -> PegHoleModel:
        return PegHoleModel(hole_frame=self.hole_frame_world(), **self.hole_model_args)

    def pre_assembly_mating_pose(self) -> Pose:
        """Mating object pose with the peg tip standoff above the mouth."""
        from .se3 import compose, invert
        lift = Pose(np.eye(3), np.array([0.0, 0.0, self.controller.standoff]))
        return compose(compose(self.hole_frame_world(), lift), invert(self.peg_tip))


def _vec(raw, n, problems, where):
    try:
        v = [float(x) for x in raw]
    except (TypeError, ValueError):
        problems.append(f"{where}: expected a list of {n} numbers")
        return [0.0] * n
    if len(v) != n:
        problems.append(f"{where}: expected {n} entries, got {len(v)}")
        return (v + [0.0] * n)[:n]
    return v


def _pose(table, problems, where, xyz_key="xyz", rpy_key="rpy") -> Pose:
    xyz = _vec(table.get(xyz_key, [0.0, 0.0, 0.0]), 3, problems, f"{where}.{xyz_key}")
    rpy = _vec(table.get(rpy_key, [0.0, 0.0, 0.0]), 3, problems, f"{where}.{rpy_key}")
    return Pose.from_xyz_rpy(xyz, rpy)


def _shape(table, problems, where) -> ShapePrimitive:
    kind = table.get("type", "")
    local = _pose(table, problems, where)
    try:
        if kind == "box":
            size = _vec(table.get("size", []), 3, problems, f"{where}.size")
            return box(*size, local_pose=local)
        if kind == "cylinder":
            size = _vec(table.get("size", []), 2, problems, f"{where}.size")
            return cylinder(*size, local_pose=local)
        if kind == "compound":
            children = [_shape(c, problems, f"{where}.children[{i}]")
                        for i, c in enumerate(table.get("children", []))]
            return compound(children)
    except ValueError as exc:
        problems.append(f"{where}: {exc}")
        return box(1e-3, 1e-3, 1e-3)
    problems.append(f"{where}: unknown shape type {kind!r}")
    return box(1e-3, 1e-3, 1e-3)


def _chain(table, problems, where) -> tuple:
    base = _pose(table, problems, where, "base_xyz", "base_rpy")
    tool = _pose(table, problems, where, "tool_xyz", "tool_rpy")
    joints = []
    for i, jt in enumerate(table.get("joints", [])):
        jw = f"{where}.joints[{i}]"
        axis = _vec(jt.get("axis", [0, 0, 1]), 3, problems, f"{jw}.axis")
        offset = _pose(jt, problems, jw, "offset_xyz", "offset_rpy")
        limits = _vec(jt.get("limits", [-math.pi, math.pi]), 2, problems, f"{jw}.limits")
        shape = _shape(jt["shape"], problems, f"{jw}.shape") if "shape" in jt else None
        try:
            joints.append(Joint(axis, offset, (limits[0], limits[1]), shape))
        except ValueError as exc:
            problems.append(f"{jw}: {exc}")
    if not joints:
        problems.append(f"{where}: arm needs at least one joint")
        joints = [Joint([0, 0, 1])]
    chain = KinematicChain(joints, base, tool)
    home = np.asarray(_vec(table.get("home", [0.0] * len(joints)), len(joints),
                           problems, f"{where}.home"), dtype=float)
    return chain, home


def _grasps(tables, problems, where) -> list:
    out = []
    for i, g in enumerate(tables):
        gw = f"{where}[{i}]"
        name = g.get("name", f"g{i}")
        arm = g.get("arm", "")
        if arm not in ("left", "right"):
            problems.append(f"{gw}.arm: must be 'left' or 'right'")
            arm = "right"
        pose = _pose(g, problems, gw)
        approach = _vec(g.get("approach", [0, 0, -1]), 3, problems, f"{gw}.approach")
        jaw = float(g.get("jaw", 0.04))
        if not 0.0 < jaw <= 0.085:
            problems.append(f"{gw}.jaw: must be in (0, 0.085] m")
        try:
            out.append(Grasp(pose, approach, arm, jaw, name))
        except ValueError as exc:
            problems.append(f"{gw}: {exc}")
    return out


def _object(table, problems, where, object_id) -> ObjectSpec:
    if "shape" not in table:
        problems.append(f"{where}.shape: missing")
        shape = box(1e-3, 1e-3, 1e-3)
    else:
        shape = _shape(table["shape"], problems, f"{where}.shape")
    pose = _pose(table, problems, where, "initial_xyz", "initial_rpy")
    grasps = _grasps(table.get("grasps", []), problems, f"{where}.grasps")
    if not grasps:
        problems.append(f"{where}.grasps: at least one grasp candidate required")
    placements = [
        _pose(p, problems, f"{where}.stable_placements[{i}]")
        for i, p in enumerate(table.get("stable_placements", []))
    ]
    return ObjectSpec(object_id, shape, pose, grasps, placements)


_CONTOUR_PARAM_COUNT = {"circle": 1, "rectangle": 2, "trapezoid": 3}


def resolve_scenario_path(name_or_path) -> Path:
    """Resolve a scenario argument: an existing path, a file in
    $PIHSIM_SCENARIO_DIR, or a bundled scenario name."""
    p = Path(name_or_path)
    if p.exists():
        return p
    candidates = []
    env_dir = os.environ.get(SCENARIO_DIR_ENV)
    if env_dir:
        candidates += [Path(env_dir) / p.name, Path(env_dir) / f"{p.name}.toml"]
    candidates += [_BUNDLED_DIR / p.name, _BUNDLED_DIR / f"{p.name}.toml"]
    for c in candidates:
        if c.exists():
            return c
    raise FileNotFoundError(f"scenario {name_or_path!r} not found "
                            f"(searched {SCENARIO_DIR_ENV} and bundled scenarios)")


def bundled_scenarios() -> list:
    return sorted(p.stem for p in _BUNDLED_DIR.glob("*.toml"))


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; raises ScenarioError listing
    every violated invariant at once."""
    path = resolve_scenario_path(path)
    problems = []
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"TOML parse error: {exc}"])

    name = raw.get("name", path.stem)
    seed = int(raw.get("seed", 0))

    bodies = []
    seen = set()
    for i, bt in enumerate(raw.get("scene", {}).get("bodies", [])):
        bw = f"scene.bodies[{i}]"
        bid = bt.get("id", "")
        if not bid:
            problems.append(f"{bw}.id: missing")
            bid = f"body{i}"
        if bid in seen:
            problems.append(f"{bw}.id: duplicate id {bid!r}")
        seen.add(bid)
        kind = bt.get("kind", "static-environment")
        shape = _shape(bt.get("shape", {}), problems, f"{bw}.shape")
        bodies.append(Body(bid, shape, _pose(bt, problems, bw), kind))

    arms = {}
    homes = {}
    for arm_name in ("left", "right"):
        if arm_name not in raw.get("arms", {}):
            problems.append(f"arms.{arm_name}: missing")
            continue
        chain, home = _chain(raw["arms"][arm_name], problems, f"arms.{arm_name}")
        arms[arm_name] = chain
        homes[arm_name] = home

    objects = raw.get("objects", {})
    if "mating" not in objects:
        problems.append("objects.mating: missing")
    if "assembly" not in objects:
        problems.append("objects.assembly: missing")
    mating = _object(objects.get("mating", {}), problems, "objects.mating", "mating")
    assembly = _object(objects.get("assembly", {}), problems, "objects.assembly", "assembly")

    ph = raw.get("peg_hole", {})
    pairs = []
    for i, pt in enumerate(ph.get("pairs", [])):
        pw = f"peg_hole.pairs[{i}]"
        kind = pt.get("kind", "")
        if kind not in _CONTOUR_PARAM_COUNT:
            problems.append(f"{pw}.kind: unknown contour kind {kind!r}")
            continue
        params = _vec(pt.get("params", []), _CONTOUR_PARAM_COUNT[kind], problems, f"{pw}.params")
        center = _vec(pt.get("center", [0.0, 0.0]), 2, problems, f"{pw}.center")
        try:
            pairs.append((Contour(kind, tuple(params)), (center[0], center[1])))
        except ValueError as exc:
            problems.append(f"{pw}: {exc}")
    clearance = float(ph.get("clearance", 0.0))
    if clearance <= 0.0:
        problems.append("peg_hole.clearance: must be positive")
    depth = float(ph.get("depth", 0.0))
    if depth <= 0.0:
        problems.append("peg_hole.depth: must be positive")
    stiffness = float(ph.get("stiffness", 5000.0))
    if stiffness <= 0.0:
        problems.append("peg_hole.stiffness: must be positive")
    hole_model_args = dict(
        pairs=pairs,
        clearance=max(clearance, 1e-9),
        depth=max(depth, 1e-9),
        stiffness=max(stiffness, 1e-9),
        friction=float(ph.get("friction", 0.3)),
        chamfer=float(ph.get("chamfer", 0.001)),
        jam_angle=math.radians(float(ph.get("jam_angle_deg", 3.0))),
        max_contact_force=float(ph.get("max_contact_force", 20.0)),
        tilt_relief_length=float(ph.get("tilt_relief_length", 0.003)),
    )
    hole_local = _pose(ph, problems, "peg_hole", "frame_xyz", "frame_rpy")
    peg_tip = _pose(ph, problems, "peg_hole", "peg_tip_xyz", "peg_tip_rpy")

    ctl_raw = dict(raw.get("controller", {}))
    ctl_fields = {
        "insertion_direction": "v_direction",
        "linear_threshold": "linear_threshold",
        "spiral_exit_threshold": "spiral_exit_threshold",
        "delta_theta": "delta_theta",
        "delta_r": "delta_r",
        "max_spiral_radius": "max_spiral_radius",
        "gain_m": "gain_m",
        "gain_c": "gain_c",
        "gain_k": "gain_k",
        "dt": "dt",
        "target_insertion_depth": "target_insertion_depth",
        "linear_step": "linear_step",
        "max_linear_steps": "max_linear_steps",
        "max_spiral_probes": "max_spiral_probes",
        "max_impedance_steps": "max_impedance_steps",
        "spiral_mode": "spiral_mode",
        "spiral_exit_rule": "spiral_exit_rule",
        "project_abs": "project_abs",
        "probe_depth": "probe_depth",
        "impedance_feed": "impedance_feed",
        "standoff": "standoff",
        "drop_travel_margin": "drop_travel_margin",
    }
    kwargs = {}
    for key, val in ctl_raw.items():
        if key not in ctl_fields:
            problems.append(f"controller.{key}: unknown field")
            continue
        kwargs[ctl_fields[key]] = val
    try:
        controller = ControllerConfig(**kwargs)
    except ValueError as exc:
        problems.append(f"controller: {exc}")
        controller = ControllerConfig()

    pl = raw.get("planner", {})
    try:
        planner = PlannerParams(
            step_size=float(pl.get("step_size", 0.1)),
            connect_threshold=float(pl.get("connect_threshold", 0.1)),
            max_iters=int(pl.get("max_iters", 3000)),
            edge_resolution=float(pl.get("edge_resolution", 0.02)),
            seed=seed,
            smoothing_attempts=int(pl.get("smoothing_attempts", 100)),
            max_replans=int(pl.get("max_replans", 5)),
            max_rebuilds=int(pl.get("max_rebuilds", 3)),
        )
    except ValueError as exc:
        problems.append(f"planner: {exc}")
        planner = PlannerParams(seed=seed)

    sn = raw.get("sensor", {})
    force_bounds = tuple(_vec(sn.get("force_noise", [1.2, 1.2, 0.5]), 3, problems, "sensor.force_noise"))
    torque_bounds = tuple(_vec(sn.get("torque_noise", [0.05, 0.05, 0.05]), 3, problems, "sensor.torque_noise"))
    if min(force_bounds) < 0 or min(torque_bounds) < 0:
        problems.append("sensor noise bounds must be nonnegative")
    sensor = SensorSpec(force_bounds, torque_bounds,
                        _pose(sn, problems, "sensor", "mount_xyz", "mount_rpy"))

    ei = raw.get("error_injection", {})
    error = ErrorInjection(
        position=float(ei.get("position_mm", 0.0)) * 1e-3,
        rotation=math.radians(float(ei.get("rotation_deg", 0.0))))
    if error.position < 0 or error.rotation < 0:
        problems.append("error_injection bounds must be nonnegative")

    asm = raw.get("assembly", {})
    if "assembly_pose_xyz" not in asm:
        problems.append("assembly.assembly_pose_xyz: missing (goal pose of the assembly object)")
    assembly_pose = _pose(asm, problems, "assembly", "assembly_pose_xyz", "assembly_pose_rpy")
    insert_arm = asm.get("insert_arm", "right")
    if insert_arm not in ("left", "right"):
        problems.append("assembly.insert_arm: must be 'left' or 'right'")
        insert_arm = "right"
    insert_grasp = asm.get("insert_grasp", "")
    if insert_grasp and not any(g.name == insert_grasp and g.arm == insert_arm
                                for g in mating.grasps):
        problems.append(f"assembly.insert_grasp: {insert_grasp!r} does not name a "
                        f"mating grasp for arm {insert_arm!r}")

    handover_poses = [
        _pose(h, problems, f"planning.handover_poses[{i}]")
        for i, h in enumerate(raw.get("planning", {}).get("handover_poses", []))
    ]
    require_perpendicular = bool(raw.get("planning", {}).get("require_perpendicular", True))

    if problems:
        raise ScenarioError(problems)
    return Scenario(
        name=name, seed=seed, bodies=bodies, arms=arms, homes=homes,
        mating=mating, assembly=assembly, hole_local=hole_local, peg_tip=peg_tip,
        hole_model_args=hole_model_args, controller=controller, planner=planner,
        sensor=sensor, error=error, assembly_pose=assembly_pose,
        handover_poses=handover_poses, require_perpendicular=require_perpendicular,
        insert_arm=insert_arm, insert_grasp=insert_grasp, path=str(path))
