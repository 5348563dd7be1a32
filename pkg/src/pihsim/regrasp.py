"""Regrasp graph construction and constrained shortest-path search.

Nodes are feasible (grasp, object pose) pairs in four context groups:
initial, handover, placement, goal. Edges encode transfers:

  - same object pose, handover context, opposite arms, pair-feasible
    simultaneously  -> a handover exchange;
  - same object pose, placement context, different grasp -> put the object
    down and pick it up again (either arm; the object rests free);
  - same grasp identity across two object poses -> carry the object.

Paths run from any initial node to any goal node; unit edge cost makes the
shortest path the fewest-transfer plan. The perpendicular-handover
constraint requires at least one handover edge whose two grasp approach
axes are orthogonal within tolerance.

Feasibility checks (IK + collision) are injected through a checker object
so the graph logic stays independent of the kinematics stack; see
pipeline.GraspChecker for the production implementation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from .se3 import Pose

CTX_INITIAL = "initial"
CTX_HANDOVER = "handover"
CTX_PLACEMENT = "placement"
CTX_GOAL = "goal"

PERPENDICULAR_TOL = 0.15  # rad


class UnplannableGraphError(ValueError):
    """Initial or goal node group is empty; no plan can exist."""


@dataclass
class Grasp:
    hand_pose_in_object: Pose
    approach_axis_in_object: np.ndarray
    arm: str
    jaw_width: float = 0.04
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.approach_axis_in_object, dtype=float)
        n = np.linalg.norm(a)
        if n < 1e-12:
            raise ValueError("approach axis has zero norm")
        self.approach_axis_in_object = a / n


@dataclass
class RegraspNode:
    node_id: str
    grasp: Grasp
    context: str
    object_pose: Pose
    pose_key: str
    ik_ok: bool = True
    collision_ok: bool = True
    q: np.ndarray | None = None
    compatible: tuple = ()  # opposite-arm handover node ids forming feasible pairs

    @property
    def feasible(self) -> bool:
        return self.ik_ok and self.collision_ok


def pose_key_of(pose: Pose, decimals: int = 6) -> str:
    """Stable identifier for an object pose (quantized)."""
    vals = np.concatenate([pose.translation, pose.rotation.reshape(-1)])
    return ",".join(f"{v:.{decimals}f}" for v in np.round(vals, decimals) + 0.0)


def node_id_for(context: str, pose_tag: str, grasp: Grasp) -> str:
    return f"{context[0]}:{pose_tag}:{grasp.arm}:{grasp.name}"


def is_perpendicular_handover(g1: Grasp, g2: Grasp, tol: float = PERPENDICULAR_TOL) -> bool:
    """True iff the two approach axes are orthogonal within tol radians."""
    d = float(np.dot(g1.approach_axis_in_object, g2.approach_axis_in_object))
    d = min(1.0, max(-1.0, d))
    return abs(math.acos(d) - 0.5 * math.pi) <= tol


def filter_feasible_grasps(object_pose: Pose, candidates, arm: str, checker,
                           context: str = CTX_INITIAL, pose_tag: str = "") -> list:
    """Nodes for the candidates of `arm` that are IK-feasible and
    collision-free on the object at object_pose."""
    if not candidates:
        raise ValueError("candidate list is empty")
    tag = pose_tag or pose_key_of(object_pose)
    out = []
    for grasp in candidates:
        if grasp.arm != arm:
            continue
        ik_ok, coll_ok, q = checker.evaluate_grasp(object_pose, grasp)
        if ik_ok and coll_ok:
            out.append(RegraspNode(
                node_id_for(context, tag, grasp), grasp, context, object_pose,
                pose_key_of(object_pose), ik_ok, coll_ok, q))
    return out


def generate_handover_nodes(candidates_left, candidates_right, handover_poses,
                            checker) -> list:
    """Nodes for grasp pairs (one per arm) simultaneously feasible on the
    object at some handover pose, including the gripper-gripper check."""
    if not handover_poses:
        raise ValueError("handover pose set is empty")
    nodes = {}
    for pi, pose in enumerate(handover_poses):
        tag = f"ho{pi}"
        for gl in candidates_left:
            for gr in candidates_right:
                ok, ql, qr = checker.evaluate_handover_pair(pose, gl, gr)
                if not ok:
                    continue
                nid_l = node_id_for(CTX_HANDOVER, tag, gl)
                nid_r = node_id_for(CTX_HANDOVER, tag, gr)
                if nid_l not in nodes:
                    nodes[nid_l] = RegraspNode(nid_l, gl, CTX_HANDOVER, pose,
                                               pose_key_of(pose), True, True, ql)
                if nid_r not in nodes:
                    nodes[nid_r] = RegraspNode(nid_r, gr, CTX_HANDOVER, pose,
                                               pose_key_of(pose), True, True, qr)
                nodes[nid_l].compatible = tuple(sorted(set(nodes[nid_l].compatible) | {nid_r}))
                nodes[nid_r].compatible = tuple(sorted(set(nodes[nid_r].compatible) | {nid_l}))
    return [nodes[k] for k in sorted(nodes)]


def generate_placement_nodes(stable_placements, candidates, checker) -> list:
    """Nodes for every (stable placement pose x feasible grasp) pair."""
    out = []
    for pi, pose in enumerate(stable_placements):
        tag = f"pl{pi}"
        for grasp in candidates:
            ik_ok, coll_ok, q = checker.evaluate_grasp(pose, grasp)
            if ik_ok and coll_ok:
                out.append(RegraspNode(
                    node_id_for(CTX_PLACEMENT, tag, grasp), grasp, CTX_PLACEMENT,
                    pose, pose_key_of(pose), ik_ok, coll_ok, q))
    return out


@dataclass
class RegraspGraph:
    graph: nx.Graph = field(default_factory=nx.Graph)
    deleted: set = field(default_factory=set)

    def node(self, node_id: str) -> RegraspNode:
        return self.graph.nodes[node_id]["data"]

    def live_neighbors(self, node_id: str):
        for other in self.graph.neighbors(node_id):
            if frozenset((node_id, other)) not in self.deleted:
                yield other

    def has_live_edge(self, a: str, b: str) -> bool:
        return self.graph.has_edge(a, b) and frozenset((a, b)) not in self.deleted


def _grasp_identity(node: RegraspNode):
    return (node.grasp.arm, node.grasp.name)


def _edges_between(u: RegraspNode, v: RegraspNode) -> bool:
    if u.pose_key == v.pose_key:
        if u.context == CTX_HANDOVER and v.context == CTX_HANDOVER:
            return u.grasp.arm != v.grasp.arm and v.node_id in u.compatible
        if u.context == CTX_PLACEMENT and v.context == CTX_PLACEMENT:
            return _grasp_identity(u) != _grasp_identity(v)
        return False
    return _grasp_identity(u) == _grasp_identity(v)


def build_regrasp_graph(initial_nodes, handover_nodes, placement_nodes,
                        goal_nodes) -> RegraspGraph:
    """Assemble the four node groups and the transfer edges (unit cost)."""
    if not initial_nodes:
        raise UnplannableGraphError("no feasible grasps at the initial pose")
    if not goal_nodes:
        raise UnplannableGraphError("no feasible grasps at the goal pose")
    rg = RegraspGraph()
    all_nodes = sorted(
        list(initial_nodes) + list(handover_nodes) + list(placement_nodes) + list(goal_nodes),
        key=lambda n: n.node_id)
    for node in all_nodes:
        if not node.feasible:
            continue
        if rg.graph.has_node(node.node_id):
            raise ValueError(f"duplicate node id {node.node_id}")
        rg.graph.add_node(node.node_id, data=node)
    ids = sorted(rg.graph.nodes)
    for i, a in enumerate(ids):
        na = rg.node(a)
        for b in ids[i + 1:]:
            nb = rg.node(b)
            if _edges_between(na, nb):
                rg.graph.add_edge(a, b)
    return rg


def edge_action(u: RegraspNode, v: RegraspNode) -> str:
    if u.pose_key == v.pose_key:
        if u.context == CTX_HANDOVER:
            return "handover"
        return "pick"  # place-down already happened when the placement was reached
    if v.context == CTX_PLACEMENT:
        return "place"
    if v.context == CTX_GOAL:
        return "goal-move"
    return "transit"


@dataclass
class RegraspPath:
    nodes: list
    actions: list

    def node_ids(self):
        return [n.node_id for n in self.nodes]

    def handover_pairs(self):
        """Consecutive node pairs exchanged through a handover edge."""
        out = []
        for a, b, act in zip(self.nodes, self.nodes[1:], self.actions):
            if act == "handover":
                out.append((a, b))
        return out


def _edge_is_perpendicular_handover(u: RegraspNode, v: RegraspNode, tol: float) -> bool:
    return (u.context == CTX_HANDOVER and v.context == CTX_HANDOVER
            and u.pose_key == v.pose_key
            and is_perpendicular_handover(u.grasp, v.grasp, tol))


def search_shortest_path(rg: RegraspGraph, require_perpendicular: bool = False,
                         tol: float = PERPENDICULAR_TOL):
    """Minimum-edge-count path from any initial to any goal node.

    With require_perpendicular, the path must traverse at least one handover
    edge whose grasps are perpendicular. Ties break toward the
    lexicographically smallest node-id sequence. Returns None when no path
    satisfies the constraint (the caller's signal to backtrack).
    """
    starts = sorted(n for n in rg.graph.nodes if rg.node(n).context == CTX_INITIAL)
    goals = {n for n in rg.graph.nodes if rg.node(n).context == CTX_GOAL}
    if not starts or not goals:
        return None

    # states are (node id, constraint satisfied); Dijkstra on
    # (length, id sequence) yields the lexicographically first shortest path
    heap = []
    for s in starts:
        flag = not require_perpendicular
        heapq.heappush(heap, (0, (s,), s, flag))
    seen = set()
    while heap:
        dist, ids, node, flag = heapq.heappop(heap)
        if (node, flag) in seen:
            continue
        seen.add((node, flag))
        if node in goals and flag:
            nodes = [rg.node(i) for i in ids]
            actions = [edge_action(a, b) for a, b in zip(nodes, nodes[1:])]
            return RegraspPath(nodes, actions)
        nu = rg.node(node)
        for other in sorted(rg.live_neighbors(node)):
            nv = rg.node(other)
            nflag = flag or _edge_is_perpendicular_handover(nu, nv, tol)
            if (other, nflag) in seen:
                continue
            heapq.heappush(heap, (dist + 1, ids + (other,), other, nflag))
    return None


def delete_edge(rg: RegraspGraph, node_pair) -> RegraspGraph:
    """Mark an edge deleted; subsequent searches will not traverse it."""
    a, b = node_pair
    if not rg.graph.has_edge(a, b):
        raise KeyError(f"no edge between {a!r} and {b!r}")
    rg.deleted.add(frozenset((a, b)))
    return rg


def rebuild_node(rg: RegraspGraph, node_id: str, new_object_pose: Pose,
                 checker) -> RegraspGraph:
    """Move a (placement-style) node to a new object pose.

    The node and its incident edges are removed, feasibility is re-evaluated
    at the new pose, and the node plus its edges are reinserted when
    feasible; stale deleted-edge records touching the node are purged.
    """
    if not rg.graph.has_node(node_id):
        raise KeyError(f"unknown node {node_id!r}")
    old = rg.node(node_id)
    if old.context == CTX_HANDOVER:
        raise ValueError("handover nodes are rebuilt through pair regeneration")
    rg.graph.remove_node(node_id)
    rg.deleted = {pair for pair in rg.deleted if node_id not in pair}

    ik_ok, coll_ok, q = checker.evaluate_grasp(new_object_pose, old.grasp)
    if not (ik_ok and coll_ok):
        return rg
    node = replace(old, object_pose=new_object_pose,
                   pose_key=pose_key_of(new_object_pose), ik_ok=ik_ok,
                   collision_ok=coll_ok, q=q)
    rg.graph.add_node(node.node_id, data=node)
    for other in sorted(rg.graph.nodes):
        if other == node.node_id:
            continue
        if _edges_between(node, rg.node(other)):
            rg.graph.add_edge(node.node_id, other)
    return rg


def dump_graph(rg: RegraspGraph, path) -> None:
    """Write a plain-text snapshot of the graph for debugging."""
    lines = ["[nodes]"]
    for nid in sorted(rg.graph.nodes):
        n = rg.node(nid)
        lines.append(f"{nid} context={n.context} arm={n.grasp.arm} "
                     f"ik_ok={n.ik_ok} collision_ok={n.collision_ok}")
    lines.append("")
    lines.append("[edges]")
    for a, b in sorted(tuple(sorted(e)) for e in rg.graph.edges):
        lines.append(f"{a} -- {b}")
    lines.append("")
    lines.append("[deleted]")
    for a, b in sorted(tuple(sorted(e)) for e in rg.deleted):
        lines.append(f"{a} -- {b}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
