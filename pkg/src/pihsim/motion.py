"""Joint-space motion planning: RRT-connect, shortcut smoothing, and the
regrasp/motion backtracking loop.

Collision checking is injected as callables so the planner is usable both
against the full scene stack and against synthetic test worlds:
  state_free(q) -> bool        single configuration
  edge_free(q0, q1) -> bool    straight joint-space segment

Joint-space distance is unweighted Euclidean over joint angles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .regrasp import RegraspGraph, delete_edge, rebuild_node, search_shortest_path


class CollidingEndpointError(ValueError):
    """Start or goal configuration is in collision."""


@dataclass
class PlannerParams:
    step_size: float = 0.1
    connect_threshold: float = 0.1
    max_iters: int = 3000
    edge_resolution: float = 0.02
    seed: int = 0
    smoothing_attempts: int = 100
    max_replans: int = 5
    max_rebuilds: int = 3

    def __post_init__(self):
        for name in ("step_size", "connect_threshold", "max_iters", "edge_resolution"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SearchTree:
    nodes: list = field(default_factory=list)
    parents: list = field(default_factory=list)

    def add(self, q, parent: int) -> int:
        if parent >= len(self.nodes):
            raise ValueError("parent index out of range")
        self.nodes.append(np.asarray(q, dtype=float))
        self.parents.append(parent)
        return len(self.nodes) - 1

    def nearest(self, q) -> int:
        d = [float(np.linalg.norm(n - q)) for n in self.nodes]
        return int(np.argmin(d))

    def path_to_root(self, index: int):
        out = []
        while index >= 0:
            out.append(self.nodes[index])
            index = self.parents[index]
        return out


@dataclass
class JointPath:
    configs: list

    def __len__(self):
        return len(self.configs)

    def joint_space_length(self) -> float:
        return float(sum(
            np.linalg.norm(b - a) for a, b in zip(self.configs, self.configs[1:])))

    def densified(self, step: float) -> "JointPath":
        if len(self.configs) < 2:
            return JointPath([c.copy() for c in self.configs])
        out = [self.configs[0]]
        for a, b in zip(self.configs, self.configs[1:]):
            dist = float(np.linalg.norm(b - a))
            n = max(1, int(np.ceil(dist / step)))
            for i in range(1, n + 1):
                out.append(a + (b - a) * (i / n))
        return JointPath(out)


def _interp_free(q0, q1, state_free, resolution: float) -> bool:
    dist = float(np.max(np.abs(q1 - q0))) if len(q0) else 0.0
    n = max(1, int(np.ceil(dist / resolution)))
    for i in range(1, n + 1):
        if not state_free(q0 + (q1 - q0) * (i / n)):
            return False
    return True


def rrt_connect(start, goal, state_free, lower, upper, params: PlannerParams,
                rng=None):
    """Bidirectional RRT between two collision-free configurations.

    Returns a JointPath from start to goal, or None after max_iters. Both
    trees alternate roles; the connect step repeatedly extends the second
    tree toward the first tree's newest node.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not state_free(start):
        raise CollidingEndpointError("start configuration is in collision")
    if not state_free(goal):
        raise CollidingEndpointError("goal configuration is in collision")
    if float(np.linalg.norm(goal - start)) <= params.connect_threshold:
        if _interp_free(start, goal, state_free, params.edge_resolution):
            return JointPath([start.copy(), goal.copy()] if np.any(start != goal) else [start.copy()])
    if rng is None:
        rng = np.random.default_rng(params.seed)

    tree_a = SearchTree([start.copy()], [-1])
    tree_b = SearchTree([goal.copy()], [-1])
    a_is_start = True

    def extend(tree, q_target):
        """One bounded step toward q_target; returns (index|None, reached)."""
        ni = tree.nearest(q_target)
        q_near = tree.nodes[ni]
        delta = q_target - q_near
        dist = float(np.linalg.norm(delta))
        if dist < 1e-12:
            return None, True
        if dist <= params.step_size:
            q_new = q_target.copy()
            reached = True
        else:
            q_new = q_near + delta * (params.step_size / dist)
            reached = False
        if not state_free(q_new):
            return None, False
        if not _interp_free(q_near, q_new, state_free, params.edge_resolution):
            return None, False
        return tree.add(q_new, ni), reached

    for _ in range(params.max_iters):
        q_rand = rng.uniform(lower, upper)
        idx_a, _ = extend(tree_a, q_rand)
        if idx_a is not None:
            q_new = tree_a.nodes[idx_a]
            # greedy connect from the other tree
            while True:
                idx_b, reached = extend(tree_b, q_new)
                if idx_b is None:
                    break
                gap = float(np.linalg.norm(tree_b.nodes[idx_b] - q_new))
                if reached or gap <= params.connect_threshold:
                    if not _interp_free(tree_b.nodes[idx_b], q_new, state_free,
                                        params.edge_resolution):
                        break
                    part_a = tree_a.path_to_root(idx_a)[::-1]
                    part_b = tree_b.path_to_root(idx_b)
                    if a_is_start:
                        configs = part_a + part_b
                    else:
                        configs = part_b[::-1] + part_a[::-1]
                    return JointPath([c.copy() for c in configs])
        tree_a, tree_b = tree_b, tree_a
        a_is_start = not a_is_start
    return None


def shortcut_smooth(path: JointPath, edge_free, attempts: int,
                    rng=None) -> JointPath:
    """Random shortcutting: endpoints fixed, length never increases."""
    if rng is None:
        rng = np.random.default_rng(0)
    configs = [c.copy() for c in path.configs]
    for _ in range(attempts):
        if len(configs) < 3:
            break
        i = int(rng.integers(0, len(configs) - 2))
        j = int(rng.integers(i + 2, len(configs)))
        direct = float(np.linalg.norm(configs[j] - configs[i]))
        via = float(sum(np.linalg.norm(b - a)
                        for a, b in zip(configs[i:j], configs[i + 1:j + 1])))
        if direct >= via - 1e-12:
            continue
        if edge_free(configs[i], configs[j]):
            configs = configs[:i + 1] + configs[j:]
    return JointPath(configs)


@dataclass
class MotionPlan:
    path: object                # RegraspPath actually realized
    edge_paths: list            # list of lists of JointPath, one list per edge
    deleted_edges: list
    rebuilds: int = 0


def plan_regrasp_motion(rg: RegraspGraph, params: PlannerParams, plan_edge,
                        rebuild_candidates=None, require_perpendicular: bool = False,
                        checker=None, on_path_start=None):
    """High/low backtracking loop over the regrasp graph.

    plan_edge(u_node, v_node) returns a list of JointPath segments for the
    transfer, or None when motion planning fails. On a failed edge the graph
    edge is deleted and the graph re-searched; when the search exhausts,
    nodes from rebuild_candidates ((node_id, new_pose) pairs) are rebuilt.
    on_path_start(path) runs before each candidate path is realized (lets a
    stateful realizer reset its world state). Returns a MotionPlan or None
    after the budgets are spent.
    """
    rebuild_queue = list(rebuild_candidates or [])
    rebuilds = 0
    deleted = []
    for _ in range(params.max_replans):
        path = search_shortest_path(rg, require_perpendicular)
        if path is None:
            if rebuilds < params.max_rebuilds and rebuild_queue and checker is not None:
                node_id, new_pose = rebuild_queue.pop(0)
                if rg.graph.has_node(node_id):
                    rebuild_node(rg, node_id, new_pose, checker)
                rebuilds += 1
                continue
            return None
        if on_path_start is not None:
            on_path_start(path)
        edge_paths = []
        failed_at = None
        for u, v in zip(path.nodes, path.nodes[1:]):
            segs = plan_edge(u, v)
            if segs is None:
                failed_at = (u.node_id, v.node_id)
                break
            edge_paths.append(segs)
        if failed_at is None:
            return MotionPlan(path, edge_paths, deleted, rebuilds)
        delete_edge(rg, failed_at)
        deleted.append(failed_at)
    return None
