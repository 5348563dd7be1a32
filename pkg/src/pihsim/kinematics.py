"""Serial-chain forward/inverse kinematics for the simulated arms.

Chains are revolute joints described by a rotation axis and a fixed link
offset (the transform from the previous joint frame to this joint's origin).
IK is iterative damped least squares; it returns None when no solution is
found within the iteration budget or the result violates joint limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .se3 import Pose, compose, rodrigues, rotation_log

IK_POS_TOL = 1e-4   # m
IK_ROT_TOL = 1e-3   # rad
IK_DAMPING = 1e-2
IK_MAX_ITERS = 200
IK_MAX_STEP = 0.5   # rad, per-iteration clamp on the largest joint move


@dataclass
class Joint:
    axis: np.ndarray
    offset: Pose = field(default_factory=Pose.identity)
    limits: tuple = (-np.pi, np.pi)
    shape: object = None  # optional collision geometry, mounted in the joint frame

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(self.axis)
        if n < 1e-12:
            raise ValueError("joint axis has zero norm")
        self.axis = self.axis / n
        if self.limits[0] > self.limits[1]:
            raise ValueError("joint limits inverted")


@dataclass
class KinematicChain:
    joints: list
    base: Pose = field(default_factory=Pose.identity)
    tool: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if not self.joints:
            raise ValueError("chain needs at least one joint")

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def lower_limits(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper_limits(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    def check_config(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_joints,):
            raise ValueError(f"config length {q.shape} does not match {self.n_joints} joints")
        return q

    def within_limits(self, q, slack: float = 1e-9) -> bool:
        q = self.check_config(q)
        return bool(np.all(q >= self.lower_limits - slack) and np.all(q <= self.upper_limits + slack))

    def link_frames(self, q) -> list:
        """World frame of each joint after its rotation, tool frame last."""
        q = self.check_config(q)
        frames = []
        cur = self.base
        for joint, qi in zip(self.joints, q):
            cur = compose(cur, joint.offset)
            cur = compose(cur, Pose(rodrigues(qi, joint.axis)))
            frames.append(cur)
        frames.append(compose(cur, self.tool))
        return frames

    def forward_kinematics(self, q) -> Pose:
        return self.link_frames(q)[-1]

    def jacobian(self, q) -> np.ndarray:
        """Geometric Jacobian, rows [linear; angular], world frame."""
        frames = self.link_frames(q)
        tip = frames[-1].translation
        J = np.zeros((6, self.n_joints))
        for i, joint in enumerate(self.joints):
            z = frames[i].rotation @ joint.axis
            p = frames[i].translation
            J[:3, i] = np.cross(z, tip - p)
            J[3:, i] = z
        return J

    def workspace_radius(self) -> float:
        """Upper bound on tip distance from the base origin."""
        r = 0.0
        for joint in self.joints:
            r += float(np.linalg.norm(joint.offset.translation))
        return r + float(np.linalg.norm(self.tool.translation))


def solve_ik(chain: KinematicChain, target: Pose, seed,
             damping: float = IK_DAMPING, max_iters: int = IK_MAX_ITERS,
             pos_tol: float = IK_POS_TOL, rot_tol: float = IK_ROT_TOL):
    """Damped-least-squares IK. Returns a limit-respecting config or None."""
    q = chain.check_config(seed).copy()

    # quick reject: target beyond the reachable ball
    reach = chain.workspace_radius()
    offset = target.translation - chain.base.translation
    if np.linalg.norm(offset) > reach + pos_tol:
        return None

    lo = chain.lower_limits
    hi = chain.upper_limits
    lam2 = damping * damping
    for _ in range(max_iters):
        cur = chain.forward_kinematics(q)
        e_pos = target.translation - cur.translation
        e_rot = rotation_log(target.rotation @ cur.rotation.T)
        if np.linalg.norm(e_pos) < pos_tol and np.linalg.norm(e_rot) < rot_tol:
            if chain.within_limits(q):
                return q
            return None
        err = np.concatenate([e_pos, e_rot])
        J = chain.jacobian(q)
        A = J @ J.T + lam2 * np.eye(6)
        dq = J.T @ np.linalg.solve(A, err)
        biggest = np.max(np.abs(dq))
        if biggest > IK_MAX_STEP:
            dq *= IK_MAX_STEP / biggest
        q = np.clip(q + dq, lo, hi)
    return None
