"""End-to-end orchestration: plan both objects to their pre-assembly poses,
then run the compliant insertion against the contact plant.

The stages mirror the system workflow: the mating object is planned first
(handover allowed, perpendicular-handover constraint on), then the assembly
object is planned for the free arm with pick-and-place regrasp only while
the mating arm holds position. Control starts from the pre-assembly poses
with the configured calibration error injected into the mating grasp.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import regrasp
from .collision import Body, Scene, config_collision_free
from .contact import PegInHolePlant, SensorModel
from .controller import ControllerConfig, Phase, run_insertion
from .kinematics import solve_ik
from .motion import JointPath, PlannerParams, plan_regrasp_motion, rrt_connect, shortcut_smooth
from .regrasp import (CTX_GOAL, CTX_INITIAL, Grasp, build_regrasp_graph,
                      filter_feasible_grasps, generate_handover_nodes,
                      generate_placement_nodes, is_perpendicular_handover)
from .scenario import Scenario
from .se3 import Pose, compose, invert

EXIT_OK = 0
EXIT_PLAN_FAILURE = 1
EXIT_INSERTION_FAILURE = 2
EXIT_INPUT_ERROR = 3

MODE_PLAN_ONLY = "plan-only"
MODE_CONTROL_ONLY = "control-only"
MODE_FULL = "full"


def hand_link_id(arm_name: str, chain) -> str:
    """Id of the distal shaped link (the gripper body)."""
    shaped = [i for i, j in enumerate(chain.joints) if j.shape is not None]
    idx = shaped[-1] if shaped else len(chain.joints) - 1
    return f"{arm_name}/link{idx}"


class GraspChecker:
    """IK + collision feasibility for grasp nodes.

    The scene passed in holds the static environment plus every object that
    should act as an obstacle; the target object's body is placed at the
    query pose for each check. Non-moving arms sit at their parked configs.
    """

    def __init__(self, arms, homes, static_bodies, target_spec, parked=None,
                 grasp_seed_attempts: int = 1):
        self.arms = arms
        self.homes = {k: np.asarray(v, dtype=float) for k, v in homes.items()}
        self.static_bodies = list(static_bodies)
        self.target_spec = target_spec
        self.parked = dict(parked or {})
        self.grasp_seed_attempts = grasp_seed_attempts

    def scene_with_target(self, object_pose: Pose) -> Scene:
        scene = Scene()
        for b in self.static_bodies:
            scene.add(Body(b.id, b.shape, b.pose, b.kind))
        scene.add(Body(self.target_spec.object_id, self.target_spec.shape,
                       object_pose, "object"))
        return scene

    def _configs(self, moving_arm, q):
        out = {}
        for name in self.arms:
            if name == moving_arm:
                out[name] = q
            else:
                out[name] = self.parked.get(name, self.homes[name])
        return out

    def evaluate_grasp(self, object_pose: Pose, grasp: Grasp):
        target = compose(object_pose, grasp.hand_pose_in_object)
        chain = self.arms[grasp.arm]
        q = solve_ik(chain, target, self.homes[grasp.arm])
        if q is None:
            return False, False, None
        scene = self.scene_with_target(object_pose)
        exclude = [(hand_link_id(grasp.arm, chain), self.target_spec.object_id)]
        ok = config_collision_free(scene, self.arms, self._configs(grasp.arm, q),
                                   extra_exclude=exclude)
        return True, ok, q

    def evaluate_handover_pair(self, object_pose: Pose, grasp_left: Grasp,
                               grasp_right: Grasp):
        ql = solve_ik(self.arms["left"],
                      compose(object_pose, grasp_left.hand_pose_in_object),
                      self.homes["left"])
        qr = solve_ik(self.arms["right"],
                      compose(object_pose, grasp_right.hand_pose_in_object),
                      self.homes["right"])
        if ql is None or qr is None:
            return False, None, None
        scene = self.scene_with_target(object_pose)
        exclude = [
            (hand_link_id("left", self.arms["left"]), self.target_spec.object_id),
            (hand_link_id("right", self.arms["right"]), self.target_spec.object_id),
        ]
        ok = config_collision_free(scene, self.arms, {"left": ql, "right": qr},
                                   extra_exclude=exclude)
        return ok, ql, qr


class EdgeRealizer:
    """Turns regrasp-graph edges into collision-checked joint motions.

    Tracks the world state (arm configs, object pose/attachment) along the
    path being realized; reset per candidate path via on_path_start.
    """

    def __init__(self, checker: GraspChecker, params: PlannerParams, rng,
                 initial_pose: Pose):
        self.checker = checker
        self.params = params
        self.rng = rng
        self.initial_pose = initial_pose
        self.segments_meta = []
        self.reset(None)

    def reset(self, _path):
        self.q_now = dict(self.checker.parked)
        for name, home in self.checker.homes.items():
            self.q_now.setdefault(name, home)
        self.q_now = {k: np.asarray(v, dtype=float) for k, v in self.q_now.items()}
        self.object_pose = self.initial_pose
        self.holder = None
        self.grasp = None
        self.picked = False

    def _plan_move(self, arm: str, q_to, attached: bool):
        """RRT for one arm between its current config and q_to."""
        chain = self.checker.arms[arm]
        scene = self.checker.scene_with_target(self.object_pose)
        exclude = [(hand_link_id(arm, chain), self.checker.target_spec.object_id)]
        if attached:
            scene.attach(self.checker.target_spec.object_id, self.holder,
                         invert(self.grasp.hand_pose_in_object))
        elif self.holder is not None and self.holder != arm:
            # object held by the other arm: place it at the hand via attachment
            hold_chain = self.checker.arms[self.holder]
            scene.attach(self.checker.target_spec.object_id, self.holder,
                         invert(self.grasp.hand_pose_in_object))
            exclude.append((hand_link_id(self.holder, hold_chain),
                            self.checker.target_spec.object_id))

        def state_free(q):
            configs = dict(self.q_now)
            configs[arm] = q
            return config_collision_free(scene, self.checker.arms, configs,
                                         extra_exclude=exclude)

        def edge_free(q0, q1):
            steps = max(1, int(math.ceil(
                float(np.max(np.abs(q1 - q0))) / self.params.edge_resolution)))
            return all(state_free(q0 + (q1 - q0) * (i / steps))
                       for i in range(1, steps + 1))

        path = rrt_connect(self.q_now[arm], q_to, state_free,
                           chain.lower_limits, chain.upper_limits,
                           self.params, self.rng)
        if path is None:
            return None
        path = shortcut_smooth(path, edge_free, self.params.smoothing_attempts, self.rng)
        self.q_now[arm] = np.asarray(q_to, dtype=float)
        return path

    def plan_edge(self, u, v):
        """Realize one graph edge; returns [(label, arm, JointPath), ...] or None."""
        segs = []
        try:
            if not self.picked:
                # reach the first grasp: transit of u's arm from its parked config
                seg = self._plan_move(u.grasp.arm, u.q, attached=False)
                if seg is None:
                    return None
                segs.append(("pick", u.grasp.arm, seg))
                self.holder = u.grasp.arm
                self.grasp = u.grasp
                self.picked = True

            if u.pose_key == v.pose_key:
                if u.context == regrasp.CTX_HANDOVER:
                    # receiver transits to its handover grasp, then takes over
                    seg = self._plan_move(v.grasp.arm, v.q, attached=False)
                    if seg is None:
                        return None
                    segs.append(("handover", v.grasp.arm, seg))
                else:
                    # placement regrasp: release, retreat, re-pick
                    prev_holder = self.holder
                    self.holder = None
                    seg = self._plan_move(prev_holder, self.checker.homes[prev_holder],
                                          attached=False)
                    if seg is None:
                        return None
                    segs.append(("retreat", prev_holder, seg))
                    seg = self._plan_move(v.grasp.arm, v.q, attached=False)
                    if seg is None:
                        return None
                    segs.append(("pick", v.grasp.arm, seg))
                self.holder = v.grasp.arm
                self.grasp = v.grasp
            else:
                # transfer: carry the object to the new pose
                seg = self._plan_move(v.grasp.arm, v.q, attached=True)
                if seg is None:
                    return None
                label = "transfer" if v.context not in (CTX_GOAL,) else "goal-move"
                segs.append((label, v.grasp.arm, seg))
                self.object_pose = v.object_pose
        except ValueError:
            return None
        return segs


@dataclass
class ObjectPlan:
    object_id: str
    path: object               # RegraspPath
    edge_paths: list
    deleted_edges: list
    graph: object
    final_grasp: Grasp = None
    final_q: np.ndarray = None

    @property
    def handover_count(self) -> int:
        return sum(1 for a in self.path.actions if a == "handover")

    @property
    def has_perpendicular_handover(self) -> bool:
        return any(is_perpendicular_handover(a.grasp, b.grasp)
                   for a, b in self.path.handover_pairs())


def default_handover_poses(scenario: Scenario) -> list:
    mid = 0.5 * (scenario.arms["left"].base.translation
                 + scenario.arms["right"].base.translation)
    return [Pose(np.eye(3), mid + np.array([0.0, 0.0, 0.25]))]


def plan_object(scenario: Scenario, spec, goal_pose: Pose, arms_allowed,
                obstacles, parked, use_handover: bool,
                require_perpendicular: bool, rng) -> ObjectPlan | None:
    checker = GraspChecker(scenario.arms, scenario.homes, obstacles, spec,
                           parked=parked)
    group_a, group_d = [], []
    for arm in sorted(arms_allowed):
        cands = [g for g in spec.grasps if g.arm == arm]
        if not cands:
            continue
        group_a += filter_feasible_grasps(spec.initial_pose, cands, arm, checker,
                                          regrasp.CTX_INITIAL, "init")
        group_d += filter_feasible_grasps(goal_pose, cands, arm, checker,
                                          regrasp.CTX_GOAL, "goal")
    group_b = []
    if use_handover and {"left", "right"} <= set(arms_allowed):
        poses = scenario.handover_poses or default_handover_poses(scenario)
        group_b = generate_handover_nodes(
            [g for g in spec.grasps if g.arm == "left"],
            [g for g in spec.grasps if g.arm == "right"], poses, checker)
    placement_cands = [g for g in spec.grasps if g.arm in arms_allowed]
    group_c = generate_placement_nodes(spec.stable_placements, placement_cands, checker)

    try:
        graph = build_regrasp_graph(group_a, group_b, group_c, group_d)
    except regrasp.UnplannableGraphError:
        return None

    realizer = EdgeRealizer(checker, scenario.planner, rng, spec.initial_pose)
    plan = plan_regrasp_motion(graph, scenario.planner, realizer.plan_edge,
                               require_perpendicular=require_perpendicular,
                               checker=checker, on_path_start=realizer.reset)
    if plan is None:
        return None
    final = plan.path.nodes[-1]
    return ObjectPlan(spec.object_id, plan.path, plan.edge_paths,
                      plan.deleted_edges, graph, final.grasp, final.q)


def _error_pose(rng, error) -> Pose:
    if error.position <= 0.0 and error.rotation <= 0.0:
        return Pose.identity()
    dp = rng.uniform(-error.position, error.position, 3) if error.position > 0 else np.zeros(3)
    dr = rng.uniform(-error.rotation, error.rotation, 3) if error.rotation > 0 else np.zeros(3)
    return Pose.from_xyz_rpy(dp, dr)


def choose_insert_grasp(scenario: Scenario) -> Grasp:
    cands = sorted((g for g in scenario.mating.grasps if g.arm == scenario.insert_arm),
                   key=lambda g: g.name)
    if scenario.insert_grasp:
        for g in cands:
            if g.name == scenario.insert_grasp:
                return g
    if not cands:
        raise ValueError(f"no mating grasp for insert arm {scenario.insert_arm!r}")
    return cands[0]


def run_control_stage(scenario: Scenario, grasp: Grasp, trial_seed: int,
                      config: ControllerConfig | None = None):
    """Insertion from the pre-assembly poses with injected grasp error."""
    config = config or scenario.controller
    model = scenario.make_hole_model()
    v = -model.hole_frame.rotation[:, 2]
    cfg = ControllerConfig(**{**config.__dict__, "v_direction": v})

    rng = np.random.default_rng(trial_seed)
    err = _error_pose(rng, scenario.error)
    pre_pose = scenario.pre_assembly_mating_pose()
    hand_world = compose(pre_pose, grasp.hand_pose_in_object)
    hand_to_peg_true = compose(invert(grasp.hand_pose_in_object),
                               compose(err, scenario.peg_tip))
    sensor = SensorModel(scenario.sensor.force_bounds, scenario.sensor.torque_bounds,
                         seed=trial_seed, mounting=scenario.sensor.mounting)
    plant = PegInHolePlant(model, sensor, hand_to_peg_true, hand_world)
    result = run_insertion(cfg, plant, hand_world)
    return result, plant


@dataclass
class RunReport:
    scenario_name: str
    seed: int
    mode: str
    outcome: str
    plan: dict = field(default_factory=dict)
    control: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        if self.outcome == "done":
            return EXIT_OK
        if self.outcome == "plan-failed":
            return EXIT_PLAN_FAILURE
        return EXIT_INSERTION_FAILURE


def _plan_summary(plans) -> dict:
    out = {}
    for plan in plans:
        lengths = []
        for edge_segs in plan.edge_paths:
            lengths.append(sum(seg.joint_space_length() for _, _, seg in edge_segs))
        out[plan.object_id] = {
            "regrasp_path": plan.path.node_ids(),
            "actions": list(plan.path.actions),
            "edge_path_lengths_rad": [round(v, 6) for v in lengths],
            "deleted_edges": [f"{a}|{b}" for a, b in plan.deleted_edges],
            "handover_count": plan.handover_count,
            "perpendicular_handover": plan.has_perpendicular_handover,
            "final_arm": plan.final_grasp.arm,
            "final_grasp": plan.final_grasp.name,
        }
    return out


def _control_summary(result, plant, dt: float) -> dict:
    counts = result.phase_steps
    steps = {p.value: int(counts.get(p, 0)) for p in
             (Phase.LINEAR, Phase.SPIRAL, Phase.IMPEDANCE)}
    durations = {k: round(v * dt, 6) for k, v in steps.items()}
    return {
        "outcome": result.outcome,
        "failed_phase": result.failed_phase.value if result.failed_phase else "",
        "final_insertion_depth": round(plant.insertion_depth, 9),
        "trace_length": len(result.trace),
        "steps": steps,
        "sim_duration_s": durations,
    }


def run_pipeline(scenario: Scenario, mode: str = MODE_FULL,
                 dump_graph_path=None, controller_overrides=None):
    """Run plan / control / full; returns (RunReport, trace or None)."""
    if mode not in (MODE_PLAN_ONLY, MODE_CONTROL_ONLY, MODE_FULL):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(scenario.seed)
    plans = []
    insert_grasp = None

    if mode in (MODE_PLAN_ONLY, MODE_FULL):
        static = list(scenario.bodies)
        # mating plan: the assembly object is an obstacle at its initial pose
        obstacles_m = static + [Body(scenario.assembly.object_id,
                                     scenario.assembly.shape,
                                     scenario.assembly.initial_pose, "object")]
        mating_plan = plan_object(
            scenario, scenario.mating, scenario.pre_assembly_mating_pose(),
            ("left", "right"), obstacles_m, {}, use_handover=True,
            require_perpendicular=scenario.require_perpendicular, rng=rng)
        if mating_plan is None:
            report = RunReport(scenario.name, scenario.seed, mode, "plan-failed",
                               plan={"failed_object": "mating"})
            return report, None
        if dump_graph_path:
            regrasp.dump_graph(mating_plan.graph, dump_graph_path)

        free_arm = "left" if mating_plan.final_grasp.arm == "right" else "right"
        obstacles_a = static + [Body(scenario.mating.object_id,
                                     scenario.mating.shape,
                                     scenario.pre_assembly_mating_pose(), "object")]
        parked = {mating_plan.final_grasp.arm: mating_plan.final_q}
        assembly_plan = plan_object(
            scenario, scenario.assembly, scenario.assembly_pose, (free_arm,),
            obstacles_a, parked, use_handover=False,
            require_perpendicular=False, rng=rng)
        if assembly_plan is None:
            report = RunReport(scenario.name, scenario.seed, mode, "plan-failed",
                               plan={"failed_object": "assembly",
                                     **_plan_summary([mating_plan])})
            return report, None
        plans = [mating_plan, assembly_plan]
        insert_grasp = mating_plan.final_grasp

    if mode == MODE_PLAN_ONLY:
        report = RunReport(scenario.name, scenario.seed, mode, "done",
                           plan=_plan_summary(plans))
        return report, None

    if insert_grasp is None:
        insert_grasp = choose_insert_grasp(scenario)
    cfg = scenario.controller
    if controller_overrides:
        cfg = ControllerConfig(**{**cfg.__dict__, **controller_overrides})
    result, plant = run_control_stage(scenario, insert_grasp, scenario.seed, cfg)
    outcome = "done" if result.success else "insertion-failed"
    report = RunReport(scenario.name, scenario.seed, mode, outcome,
                       plan=_plan_summary(plans),
                       control=_control_summary(result, plant, cfg.dt))
    return report, result.trace


def emit_trace_csv(trace, path) -> None:
    """Write the controller trace: t,phase,px,py,pz,fx,fy,fz,tx,ty,tz.

    Fixed decimal formatting keeps reruns byte-identical under one seed.
    """
    if len(trace) == 0:
        raise ValueError("trace is empty")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "phase", "px", "py", "pz", "fx", "fy", "fz", "tx", "ty", "tz"])
        for rec in trace.records:
            w.writerow([f"{rec.t:.6f}", rec.phase.value]
                       + [f"{v:.9f}" for v in rec.position]
                       + [f"{v:.6f}" for v in rec.force]
                       + [f"{v:.6f}" for v in rec.torque])


def sweep_trial(scenario: Scenario, trial: int, mode_overrides=None):
    """One control-only trial with the per-trial derived seed."""
    grasp = choose_insert_grasp(scenario)
    cfg = scenario.controller
    if mode_overrides:
        cfg = ControllerConfig(**{**cfg.__dict__, **mode_overrides})
    result, plant = run_control_stage(scenario, grasp, scenario.seed + trial, cfg)
    counts = result.phase_steps
    return {
        "trial": trial,
        "seed": scenario.seed + trial,
        "success": result.success,
        "failed_phase": result.failed_phase.value if result.failed_phase else "",
        "final_insertion_depth": round(plant.insertion_depth, 9),
        "steps_linear": int(counts.get(Phase.LINEAR, 0)),
        "steps_spiral": int(counts.get(Phase.SPIRAL, 0)),
        "steps_impedance": int(counts.get(Phase.IMPEDANCE, 0)),
    }


def batch_sweep(scenario: Scenario, n_trials: int, jobs: int = 1,
                controller_overrides=None, pos_error=None, rot_error=None) -> dict:
    """Monte-Carlo robustness sweep: control-only trials with derived seeds
    (scenario seed + trial index) and aggregate statistics.

    pos_error (m) / rot_error (rad) override the scenario's injected-error
    bounds when given.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if pos_error is not None or rot_error is not None:
        from dataclasses import replace as _dc_replace
        from .scenario import ErrorInjection
        err = ErrorInjection(
            position=scenario.error.position if pos_error is None else pos_error,
            rotation=scenario.error.rotation if rot_error is None else rot_error)
        scenario = _dc_replace(scenario, error=err)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(_sweep_worker,
                                   [(scenario, t, controller_overrides)
                                    for t in range(n_trials)]))
    else:
        trials = [sweep_trial(scenario, t, controller_overrides)
                  for t in range(n_trials)]
    n_ok = sum(1 for t in trials if t["success"])
    agg = {
        "scenario": scenario.name,
        "n_trials": n_trials,
        "n_success": n_ok,
        "success_rate": round(n_ok / n_trials, 6),
    }
    for key in ("steps_linear", "steps_spiral", "steps_impedance"):
        agg[f"mean_{key}"] = round(float(np.mean([t[key] for t in trials])), 3)
    return {"aggregate": agg, "trials": trials}


def _sweep_worker(args):
    scenario, trial, overrides = args
    return sweep_trial(scenario, trial, overrides)


# ---------------------------------------------------------------------------
# structured-text (TOML) report writing
# ---------------------------------------------------------------------------

def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(v)}")


def _emit_table(lines, table, prefix):
    scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
    subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
    if prefix and (scalars or not subtables):
        lines.append(f"[{prefix}]")
    for k, v in scalars.items():
        if isinstance(v, (list, tuple)):
            inner = ", ".join(_toml_scalar(x) for x in v)
            lines.append(f"{k} = [{inner}]")
        else:
            lines.append(f"{k} = {_toml_scalar(v)}")
    if scalars:
        lines.append("")
    for k, v in subtables.items():
        _emit_table(lines, v, f"{prefix}.{k}" if prefix else k)


def report_to_toml(report: RunReport) -> str:
    doc = {
        "scenario": report.scenario_name,
        "seed": report.seed,
        "mode": report.mode,
        "outcome": report.outcome,
    }
    if report.plan:
        doc["plan"] = report.plan
    if report.control:
        doc["control"] = report.control
    lines = []
    _emit_table(lines, doc, "")
    return "\n".join(lines).rstrip() + "\n"


def sweep_to_toml(sweep: dict) -> str:
    lines = []
    _emit_table(lines, {"aggregate": sweep["aggregate"]}, "")
    for t in sweep["trials"]:
        lines.append("[[trial]]")
        for k, v in t.items():
            lines.append(f"{k} = {_toml_scalar(v)}")
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def write_report(text: str, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
