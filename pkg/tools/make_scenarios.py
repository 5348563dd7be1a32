#!/usr/bin/env python3
"""Generate the bundled scenario TOML files.

Run from the repo root:  python3 tools/make_scenarios.py
Writes into src/pihsim/scenarios/. Object dimensions are plausible-scale
stand-ins, not measured from any real connector.
"""

import math
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "pihsim" / "scenarios"

HALF_PI = math.pi / 2


def fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(round(v, 9))
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(fmt(x) for x in v) + "]"
    raise TypeError(type(v))


def kv(lines, key, val):
    lines.append(f"{key} = {fmt(val)}")


def arm_block(lines, name, base_xyz, base_yaw):
    lines.append(f"[arms.{name}]")
    kv(lines, "base_xyz", base_xyz)
    kv(lines, "base_rpy", [0.0, 0.0, base_yaw])
    kv(lines, "tool_xyz", [0.0, 0.0, 0.1])
    kv(lines, "tool_rpy", [0.0, 0.0, 0.0])
    kv(lines, "home", [0.0, -0.5, 1.1, -0.6, 0.0, 0.0])
    lines.append("")
    joints = [
        # axis, offset_xyz, limits, shape (or None)
        ([0, 0, 1], [0.0, 0.0, 0.08], [-3.1, 3.1], None),
        ([0, 1, 0], [0.0, 0.0, 0.06], [-2.6, 2.6], None),
        ([0, 1, 0], [0.0, 0.0, 0.24], [-2.6, 2.6],
         ("cylinder", [0.03, 0.18], [0.0, 0.0, 0.12])),
        ([0, 1, 0], [0.0, 0.0, 0.214], [-3.1, 3.1], None),
        ([0, 0, 1], [0.0, 0.0, 0.06], [-3.1, 3.1], None),
        ([0, 1, 0], [0.0, 0.0, 0.06], [-3.1, 3.1],
         ("box", [0.05, 0.09, 0.1], [0.0, 0.0, 0.04])),
    ]
    for axis, off, lim, shape in joints:
        lines.append(f"[[arms.{name}.joints]]")
        kv(lines, "axis", axis)
        kv(lines, "offset_xyz", off)
        kv(lines, "limits", lim)
        if shape is not None:
            stype, size, sxyz = shape
            lines.append(f'shape = {{type = "{stype}", size = {fmt(size)}, xyz = {fmt(sxyz)}}}')
        lines.append("")


def grasp_block(lines, obj, name, arm, xyz, rpy, approach, jaw):
    lines.append(f"[[objects.{obj}.grasps]]")
    kv(lines, "name", name)
    kv(lines, "arm", arm)
    kv(lines, "xyz", xyz)
    kv(lines, "rpy", rpy)
    kv(lines, "approach", approach)
    kv(lines, "jaw", jaw)
    lines.append("")


def mating_grasps(lines, body_half_len, grasp_gap=0.0):
    """Grasps on a peg-carrier body whose peg points along -z (object frame).

    Hand frame convention: hand +z is the approach direction (pointing into
    the object), hand +y is the finger-closing line.
    """
    # side grasps: approach radially, fingers across the body axis.
    # hand z -> -a (pointing at the object center), reached by rotating the
    # hand frame; computed here as fixed rpy sets:
    sides = [
        # name, approach axis (object), hand rpy mapping hand z onto that axis
        ("side_xp", [-1.0, 0.0, 0.0], [0.0, HALF_PI, 0.0]),
        ("side_xm", [1.0, 0.0, 0.0], [0.0, -HALF_PI, 0.0]),
        ("side_yp", [0.0, -1.0, 0.0], [-HALF_PI, 0.0, HALF_PI]),
        ("side_ym", [0.0, 1.0, 0.0], [HALF_PI, 0.0, -HALF_PI]),
    ]
    for arm in ("left", "right"):
        for name, approach, rpy in sides:
            # hand origin offset back along the approach so the tool frame
            # sits at the body surface
            off = [-0.0 * a for a in approach]
            grasp_block(lines, "mating", f"{name}", arm, off, rpy, approach, 0.032)
        # axial grasp from the +z end (peg points -z, so this is the back end)
        grasp_block(lines, "mating", "axial_top", arm,
                    [0.0, 0.0, body_half_len], [math.pi, 0.0, 0.0],
                    [0.0, 0.0, -1.0], 0.032)
    lines.append("")


def controller_block(lines, table, extra=None):
    lines.append("[controller]")
    for k, v in table.items():
        kv(lines, k, v)
    lines.append("")


def scenario_header(lines, name, seed, description):
    kv(lines, "name", name)
    kv(lines, "seed", seed)
    kv(lines, "description", description)
    lines.append("")
    lines.append("[error_injection]")
    kv(lines, "position_mm", 2.0)
    kv(lines, "rotation_deg", 1.0)
    lines.append("")
    lines.append("[planner]")
    kv(lines, "step_size", 0.15)
    kv(lines, "connect_threshold", 0.15)
    kv(lines, "max_iters", 4000)
    kv(lines, "edge_resolution", 0.05)
    kv(lines, "smoothing_attempts", 60)
    lines.append("")
    lines.append("[sensor]")
    kv(lines, "force_noise", [1.2, 1.2, 0.5])
    kv(lines, "torque_noise", [0.05, 0.05, 0.05])
    lines.append("")
    lines.append("[planning]")
    kv(lines, "require_perpendicular", True)
    lines.append("[[planning.handover_poses]]")
    kv(lines, "xyz", [0.0, -0.02, 0.34])
    kv(lines, "rpy", [0.0, -HALF_PI, 0.0])  # body z along +x: side + axial grasps meet
    lines.append("")
    lines.append("[scene]")
    lines.append("[[scene.bodies]]")
    kv(lines, "id", "table")
    kv(lines, "kind", "static-environment")
    lines.append('shape = {type = "box", size = [1.4, 1.0, 0.04]}')
    kv(lines, "xyz", [0.0, 0.0, -0.02])
    lines.append("")
    arm_block(lines, "left", [-0.42, 0.0, 0.0], 0.0)
    arm_block(lines, "right", [0.42, 0.0, 0.0], math.pi)


def peg_scenario(name, seed, pairs, clearance, depth, description,
                 controller_extra=None, body_kind="cylinder",
                 body_size=(0.016, 0.05), error_mm=2.0, error_deg=1.0):
    """A peg-carrier mating object plus a held socket block."""
    lines = []
    scenario_header(lines, name, seed, description)

    body_half = body_size[1] / 2 if body_kind == "cylinder" else body_size[2] / 2

    # mating object: lying on the table, peg axis horizontal
    lines.append("[objects.mating]")
    if body_kind == "cylinder":
        lines.append(f'shape = {{type = "cylinder", size = {fmt(list(body_size))}}}')
        lie_r = body_size[0]
    else:
        lines.append(f'shape = {{type = "box", size = {fmt(list(body_size))}}}')
        lie_r = body_size[1] / 2
    kv(lines, "initial_xyz", [0.1, -0.22, lie_r])
    kv(lines, "initial_rpy", [-HALF_PI, 0.0, 0.0])  # peg (-z_obj) points +y world
    lines.append("[[objects.mating.stable_placements]]")
    kv(lines, "xyz", [-0.05, -0.26, lie_r])
    kv(lines, "rpy", [-HALF_PI, 0.0, HALF_PI])
    lines.append("")
    mating_grasps(lines, body_half)

    # assembly object: socket block on the table, hole face up
    lines.append("[objects.assembly]")
    lines.append('shape = {type = "box", size = [0.07, 0.07, 0.03]}')
    kv(lines, "initial_xyz", [-0.1, -0.2, 0.015])
    kv(lines, "initial_rpy", [0.0, 0.0, 0.0])
    lines.append("[[objects.assembly.stable_placements]]")
    kv(lines, "xyz", [-0.05, -0.3, 0.015])
    kv(lines, "rpy", [0.0, 0.0, 0.0])
    lines.append("")
    for arm in ("left", "right"):
        for gname, approach, rpy, off in [
            ("top_x", [0.0, 0.0, -1.0], [math.pi, 0.0, 0.0], [0.0, 0.0, 0.015]),
            ("top_y", [0.0, 0.0, -1.0], [math.pi, 0.0, HALF_PI], [0.0, 0.0, 0.015]),
            ("side_y", [0.0, 1.0, 0.0], [HALF_PI, 0.0, -HALF_PI], [0.0, -0.0, 0.0]),
        ]:
            grasp_block(lines, "assembly", gname, arm, off, rpy, approach, 0.07)
    lines.append("")

    lines.append("[assembly]")
    kv(lines, "assembly_pose_xyz", [0.0, 0.12, 0.24])
    kv(lines, "assembly_pose_rpy", [0.0, 0.0, 0.0])
    kv(lines, "insert_arm", "right")
    kv(lines, "insert_grasp", "side_ym")
    lines.append("")

    lines.append("[peg_hole]")
    kv(lines, "clearance", clearance)
    kv(lines, "depth", depth)
    kv(lines, "stiffness", 5000.0)
    kv(lines, "friction", 0.3)
    kv(lines, "chamfer", 0.001)
    kv(lines, "jam_angle_deg", 3.0)
    kv(lines, "max_contact_force", 20.0)
    kv(lines, "frame_xyz", [0.0, 0.0, 0.015])  # hole mouth on the top face
    kv(lines, "frame_rpy", [0.0, 0.0, 0.0])
    kv(lines, "peg_tip_xyz", [0.0, 0.0, -(body_half + 0.015)])
    kv(lines, "peg_tip_rpy", [0.0, 0.0, 0.0])
    for kind, params, center in pairs:
        lines.append("[[peg_hole.pairs]]")
        kv(lines, "kind", kind)
        kv(lines, "params", params)
        kv(lines, "center", center)
    lines.append("")

    ctl = dict(
        linear_threshold=4.0,
        spiral_exit_threshold=7.0,
        delta_theta=0.09,
        delta_r=7e-7,
        max_spiral_radius=0.0035,
        gain_m=1.0, gain_c=50.0, gain_k=200.0,
        dt=0.02,
        target_insertion_depth=round(depth - 0.003, 6),
        linear_step=0.001,
        max_linear_steps=60,
        max_spiral_probes=20000,
        max_impedance_steps=2000,
        spiral_mode="literal",
        probe_depth=0.002,
        impedance_feed=0.0002,
        standoff=0.01,
    )
    ctl.update(controller_extra or {})
    controller_block(lines, ctl)

    # per-scenario error bounds
    text = "\n".join(lines) + "\n"
    text = text.replace("position_mm = 2.0", f"position_mm = {fmt(error_mm)}")
    text = text.replace("rotation_deg = 1.0", f"rotation_deg = {fmt(error_deg)}")
    return text


def manifold_pairs():
    """Fifteen pairs: ten circular, three rectangular, two trapezoid."""
    pairs = []
    # ten circular pins, two rows of five in the middle
    for i in range(5):
        x = -0.012 + i * 0.006
        pairs.append(("circle", [0.0015], [x, 0.004]))
        pairs.append(("circle", [0.0015], [x, -0.004]))
    # three rectangular pins along the long edges
    pairs.append(("rectangle", [0.004, 0.002], [-0.009, 0.009]))
    pairs.append(("rectangle", [0.004, 0.002], [0.009, 0.009]))
    pairs.append(("rectangle", [0.004, 0.002], [0.0, -0.009]))
    # two trapezoid pins at the short edges
    pairs.append(("trapezoid", [0.004, 0.0025, 0.003], [-0.017, 0.0]))
    pairs.append(("trapezoid", [0.004, 0.0025, 0.003], [0.017, 0.0]))
    return pairs


SCENARIOS = {
    "round_peg": dict(
        seed=7,
        pairs=[("circle", [0.003], [0.0, 0.0])],
        clearance=0.0005, depth=0.008,
        description="Single round peg into a held socket; the nominal scenario.",
        error_mm=3.0, error_deg=1.5,
    ),
    "manifold_connector": dict(
        seed=11,
        pairs=manifold_pairs(),
        clearance=0.0004, depth=0.006,
        description=("Manifold connector stand-in: ten circular, three rectangular, "
                     "and two trapezoid peg-hole pairs (plausible-scale dimensions)."),
        body_kind="box", body_size=(0.044, 0.028, 0.05),
        error_mm=1.0, error_deg=0.4,
        controller_extra={"delta_r": 5e-7},
    ),
    "usb": dict(
        seed=23,
        pairs=[("rectangle", [0.011, 0.0045], [0.0, 0.0])],
        clearance=0.0004, depth=0.007,
        description="USB-A style rectangular shroud (plausible-scale dimensions).",
        body_kind="box", body_size=(0.02, 0.012, 0.044),
        error_mm=1.2, error_deg=0.5,
        controller_extra={"delta_r": 5e-7},
    ),
    "rj45": dict(
        seed=31,
        pairs=[("rectangle", [0.0113, 0.0065], [0.0, 0.0])],
        clearance=0.0004, depth=0.0065,
        description="RJ45 style rectangular plug (plausible-scale dimensions).",
        body_kind="box", body_size=(0.018, 0.012, 0.04),
        error_mm=1.0, error_deg=0.5,
        controller_extra={"delta_r": 5e-7},
    ),
    "vacuum_tube": dict(
        seed=43,
        pairs=[("circle", [0.004], [0.0, 0.0])],
        clearance=0.0006, depth=0.009,
        description="One-touch vacuum tube fitting (plausible-scale dimensions).",
        error_mm=2.0, error_deg=1.0,
    ),
    "power_plug": dict(
        seed=53,
        pairs=[("circle", [0.0024], [-0.0095, 0.0]),
               ("circle", [0.0024], [0.0095, 0.0]),
               ("circle", [0.0024], [0.0, 0.0165])],
        clearance=0.0005, depth=0.0075,
        description="Three-prong power plug (plausible-scale dimensions).",
        body_kind="box", body_size=(0.036, 0.036, 0.04),
        error_mm=1.2, error_deg=0.4,
        controller_extra={"delta_r": 5e-7},
    ),
    "dsub25": dict(
        seed=61,
        pairs=[("trapezoid", [0.0165, 0.0135, 0.0055], [0.0, 0.0])],
        clearance=0.0005, depth=0.006,
        description="D-sub DB25 style trapezoid shell (plausible-scale dimensions).",
        body_kind="box", body_size=(0.03, 0.014, 0.04),
        error_mm=1.0, error_deg=0.5,
        controller_extra={"delta_r": 5e-7},
    ),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, kw in SCENARIOS.items():
        text = peg_scenario(name, **kw)
        (OUT / f"{name}.toml").write_text(text)
        print("wrote", OUT / f"{name}.toml")


if __name__ == "__main__":
    sys.exit(main())
