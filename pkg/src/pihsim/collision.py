"""Primitive-shape scene representation and collision queries.

Shapes are boxes, cylinders, and compounds of those. Cylinders are tested
as capsules (axis segment plus radius), which is conservative at the flat
ends; exact touching counts as collision. Scenes are treated as immutable
snapshots by the query functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .se3 import Pose, compose

BODY_ROBOT_LINK = "robot-link"
BODY_OBJECT = "object"
BODY_STATIC = "static-environment"


@dataclass
class ShapePrimitive:
    """Box (size = full extents), cylinder (radius, length along local z),
    or compound of child primitives with their own local poses."""

    kind: str
    size: tuple = ()
    local_pose: Pose = field(default_factory=Pose.identity)
    children: tuple = ()

    def __post_init__(self):
        if self.kind == "box":
            if len(self.size) != 3 or min(self.size) <= 0.0:
                raise ValueError("box needs three positive extents")
        elif self.kind == "cylinder":
            if len(self.size) != 2 or min(self.size) <= 0.0:
                raise ValueError("cylinder needs positive (radius, length)")
        elif self.kind == "compound":
            if not self.children:
                raise ValueError("compound needs at least one child")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    def bounding_radius(self) -> float:
        if self.kind == "box":
            r = 0.5 * math.sqrt(sum(s * s for s in self.size))
        elif self.kind == "cylinder":
            r = math.hypot(self.size[0], 0.5 * self.size[1])
        else:
            r = max(
                float(np.linalg.norm(c.local_pose.translation)) + c.bounding_radius()
                for c in self.children
            )
        return r + float(np.linalg.norm(self.local_pose.translation))


def box(sx: float, sy: float, sz: float, local_pose: Pose | None = None) -> ShapePrimitive:
    return ShapePrimitive("box", (sx, sy, sz), local_pose or Pose.identity())


def cylinder(radius: float, length: float, local_pose: Pose | None = None) -> ShapePrimitive:
    return ShapePrimitive("cylinder", (radius, length), local_pose or Pose.identity())


def compound(children) -> ShapePrimitive:
    return ShapePrimitive("compound", (), Pose.identity(), tuple(children))


@dataclass
class Body:
    id: str
    shape: ShapePrimitive
    pose: Pose = field(default_factory=Pose.identity)
    kind: str = BODY_OBJECT


@dataclass
class Scene:
    """Set of bodies plus an attachment map.

    attachments: object id -> (arm name, object pose in the hand frame).
    While attached, a body's world pose is derived from the holding arm's
    forward kinematics instead of its stored pose.
    """

    bodies: dict = field(default_factory=dict)
    attachments: dict = field(default_factory=dict)

    def add(self, body: Body) -> None:
        if body.id in self.bodies:
            raise ValueError(f"duplicate body id {body.id!r}")
        self.bodies[body.id] = body

    def attach(self, object_id: str, arm: str, pose_in_hand: Pose) -> None:
        if object_id not in self.bodies:
            raise ValueError(f"unknown body {object_id!r}")
        for oid, (holder, _) in self.attachments.items():
            if holder == arm and oid != object_id:
                raise ValueError(f"arm {arm!r} already holds {oid!r}")
        self.attachments[object_id] = (arm, pose_in_hand)

    def detach(self, object_id: str) -> None:
        self.attachments.pop(object_id, None)

    def copy(self) -> "Scene":
        out = Scene()
        out.bodies = {
            bid: Body(b.id, b.shape, b.pose.copy(), b.kind) for bid, b in self.bodies.items()
        }
        out.attachments = dict(self.attachments)
        return out


def _flatten(shape: ShapePrimitive, pose: Pose):
    """Yield (kind, size, world_pose) leaves of a shape tree."""
    p = compose(pose, shape.local_pose)
    if shape.kind == "compound":
        for child in shape.children:
            yield from _flatten(child, p)
    else:
        yield shape.kind, shape.size, p


def _leaf_collides(ka, sa, pa: Pose, kb, sb, pb: Pose) -> bool:
    if ka == "box" and kb == "box":
        return bool(kernels.obb_obb_overlap(
            pa.translation, 0.5 * np.asarray(sa, dtype=float), np.ascontiguousarray(pa.rotation).reshape(-1),
            pb.translation, 0.5 * np.asarray(sb, dtype=float), np.ascontiguousarray(pb.rotation).reshape(-1)))
    if ka == "cylinder" and kb == "cylinder":
        a0, a1 = _cyl_segment(sa, pa)
        b0, b1 = _cyl_segment(sb, pb)
        return kernels.segment_segment_distance(a0, a1, b0, b1) <= sa[0] + sb[0]
    if ka == "cylinder":
        ka, sa, pa, kb, sb, pb = kb, sb, pb, ka, sa, pa
    # box vs cylinder
    c0, c1 = _cyl_segment(sb, pb)
    d = kernels.segment_obb_distance(
        c0, c1, pa.translation, 0.5 * np.asarray(sa, dtype=float),
        np.ascontiguousarray(pa.rotation).reshape(-1))
    return d <= sb[0]


def _cyl_segment(size, pose: Pose):
    half = 0.5 * size[1]
    axis = pose.rotation[:, 2]
    return pose.translation - half * axis, pose.translation + half * axis


def pair_collides(a: Body, b: Body) -> bool:
    """True iff the two bodies' shapes overlap at their current poses."""
    ra = a.shape.bounding_radius()
    rb = b.shape.bounding_radius()
    gap = np.linalg.norm(b.pose.translation - a.pose.translation)
    if gap > ra + rb:
        return False
    for ka, sa, pa in _flatten(a.shape, a.pose):
        for kb, sb, pb in _flatten(b.shape, b.pose):
            if _leaf_collides(ka, sa, pa, kb, sb, pb):
                return True
    return False


def _arm_link_bodies(arm_name, chain, q):
    """Bodies for every link of a chain that carries collision geometry."""
    frames = chain.link_frames(q)
    out = []
    for i, joint in enumerate(chain.joints):
        if joint.shape is None:
            continue
        out.append((i, Body(f"{arm_name}/link{i}", joint.shape, frames[i], BODY_ROBOT_LINK)))
    return out


def config_collision_free(scene: Scene, arms: dict, q_all: dict,
                          extra_exclude=()) -> bool:
    """Check a multi-arm configuration against the scene.

    arms: {name: KinematicChain}; q_all: {name: joint config}. Adjacent links
    of the same arm and hand/attached-object pairs are excluded, as are the
    (id, id) pairs in extra_exclude (order-insensitive).
    """
    for name, chain in arms.items():
        if name not in q_all:
            raise ValueError(f"missing joint config for arm {name!r}")
        if len(q_all[name]) != len(chain.joints):
            raise ValueError(f"config length mismatch for arm {name!r}")

    exclude = {frozenset(p) for p in extra_exclude}
    link_bodies = []  # (arm, link index, Body)
    hand_ids = {}
    for name, chain in arms.items():
        links = _arm_link_bodies(name, chain, q_all[name])
        for idx, body in links:
            link_bodies.append((name, idx, body))
        if links:
            hand_ids[name] = links[-1][1].id

    # place attached objects at the hand
    placed = {}
    for oid, (holder, pose_in_hand) in scene.attachments.items():
        if holder not in arms:
            continue
        hand = arms[holder].forward_kinematics(q_all[holder])
        placed[oid] = compose(hand, pose_in_hand)

    world_bodies = []
    for bid, bdy in scene.bodies.items():
        pose = placed.get(bid, bdy.pose)
        world_bodies.append(Body(bid, bdy.shape, pose, bdy.kind))

    candidates = [(name, idx, b) for name, idx, b in link_bodies]

    # robot links vs environment/objects and the other arm's links
    for i, (name_a, idx_a, body_a) in enumerate(candidates):
        for bdy in world_bodies:
            pair = frozenset((body_a.id, bdy.id))
            if pair in exclude:
                continue
            attachment = scene.attachments.get(bdy.id)
            if attachment is not None and attachment[0] == name_a \
                    and hand_ids.get(name_a) == body_a.id:
                continue  # hand vs its own attached object
            if pair_collides(body_a, bdy):
                return False
        for name_b, idx_b, body_b in candidates[i + 1:]:
            if name_a == name_b and abs(idx_a - idx_b) <= 1:
                continue  # adjacent links share a joint
            if frozenset((body_a.id, body_b.id)) in exclude:
                continue
            if pair_collides(body_a, body_b):
                return False

    # attached objects vs the static world and each other
    moving = [b for b in world_bodies if b.id in placed]
    for i, body_a in enumerate(moving):
        for bdy in world_bodies:
            if bdy.id == body_a.id or bdy.id in placed:
                continue
            if frozenset((body_a.id, bdy.id)) in exclude:
                continue
            if pair_collides(body_a, bdy):
                return False
        for body_b in moving[i + 1:]:
            if pair_collides(body_a, body_b):
                return False
    return True


def edge_collision_free(scene: Scene, arms: dict, q_from: dict, q_to: dict,
                        resolution: float = 0.02, extra_exclude=()) -> bool:
    """Check the straight joint-space segment between two configurations.

    Interpolates every arm jointly at steps no larger than `resolution`
    radians per joint; discrete checking, so features thinner than the sweep
    of one step can be missed at coarse resolutions.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    longest = 0.0
    for name in arms:
        d = np.max(np.abs(np.asarray(q_to[name]) - np.asarray(q_from[name]))) if len(q_from[name]) else 0.0
        longest = max(longest, float(d))
    steps = max(1, int(math.ceil(longest / resolution)))
    for s in range(steps + 1):
        t = s / steps
        q_mid = {
            name: (1.0 - t) * np.asarray(q_from[name], dtype=float)
            + t * np.asarray(q_to[name], dtype=float)
            for name in arms
        }
        if not config_collision_free(scene, arms, q_mid, extra_exclude):
            return False
    return True
