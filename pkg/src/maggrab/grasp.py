"""
Grab-pose planning and the approach procedure.

Everything is in the robot-base frame with the base at the origin. The grab
point is the point of the conductor closest to the base; the tool y axis runs
along the conductor and the tool z axis points from the base towards the grab
point. The robot first reaches a pre-grasp ("intermittent") point a distance
``d`` short of the grab point along tool z, then moves in a straight line.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from maggrab.errors import DegenerateGeometry, DegenerateParallel, IterationLimit
from maggrab.geom import Line3, RigidTransform, closest_point_on_line, rot_z, vec3
from maggrab.localize import ALPHA_MIN, ConductorEstimate

ARRIVAL_TOL = 1e-9  # m; pose commands are executed exactly in simulation


@dataclass(frozen=True, eq=False)
class GraspPlan:
    grab_point: np.ndarray
    orientation: np.ndarray  # columns v_x, v_pl, v_z
    intermittent_point: np.ndarray

    @property
    def v_x(self) -> np.ndarray:
        return self.orientation[:, 0]

    @property
    def v_pl(self) -> np.ndarray:
        return self.orientation[:, 1]

    @property
    def v_z(self) -> np.ndarray:
        return self.orientation[:, 2]


@dataclass(frozen=True)
class ProcedureParams:
    alpha_min: float = ALPHA_MIN
    approach_offset_d: float = 0.20
    d_min: float = 0.05
    d_max: float = 0.40
    dwell_k: float = 1.0
    max_iterations: int = 50

    def __post_init__(self):
        if not 0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")
        if not self.approach_offset_d > 0:
            raise ValueError("approach_offset_d must be positive")
        if not self.dwell_k > 0:
            raise ValueError("dwell_k must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


class Phase(enum.Enum):
    IDLE = "Idle"
    AWAIT_COMMAND = "AwaitCommand"
    LOCALIZE = "Localize"
    ROTATE_TOOL = "RotateTool"
    MOVE_MIDPOINT = "MoveMidpoint"
    MOVE_INTERMITTENT = "MoveIntermittent"
    LINEAR_APPROACH = "LinearApproach"
    GRABBED = "Grabbed"


# Phases after which the procedure dwells and analyses a fresh estimate.
ANALYSIS_PHASES = frozenset(
    {Phase.LOCALIZE, Phase.ROTATE_TOOL, Phase.MOVE_MIDPOINT, Phase.MOVE_INTERMITTENT}
)
_AFTER_ANALYSIS = frozenset(
    {Phase.ROTATE_TOOL, Phase.MOVE_MIDPOINT, Phase.MOVE_INTERMITTENT, Phase.LINEAR_APPROACH}
)
TRANSITIONS = {
    Phase.IDLE: frozenset({Phase.AWAIT_COMMAND}),
    Phase.AWAIT_COMMAND: frozenset({Phase.LOCALIZE}),
    Phase.LOCALIZE: _AFTER_ANALYSIS | {Phase.LOCALIZE},
    Phase.ROTATE_TOOL: _AFTER_ANALYSIS,
    Phase.MOVE_MIDPOINT: _AFTER_ANALYSIS,
    Phase.MOVE_INTERMITTENT: _AFTER_ANALYSIS,
    Phase.LINEAR_APPROACH: frozenset({Phase.LINEAR_APPROACH, Phase.GRABBED}),
    Phase.GRABBED: frozenset({Phase.IDLE}),
}


@dataclass(frozen=True, eq=False)
class ProcedureState:
    phase: Phase = Phase.IDLE
    plan: GraspPlan | None = None
    iteration: int = 0


@dataclass(frozen=True, eq=False)
class PoseCommand:
    """Target tool pose in the base frame. ``kind`` names the waypoint type."""

    kind: str
    position: np.ndarray
    rotation: np.ndarray
    linear: bool = False

    def as_transform(self) -> RigidTransform:
        return RigidTransform(self.rotation, self.position)


def select_grab_point(line: Line3, base=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Point of ``line`` closest to ``base``."""
    return closest_point_on_line(line, base)


def grab_orientation(grab_point, v_pl) -> np.ndarray:
    """Tool orientation with columns ``[v_x, v_pl, v_z]``.

    ``v_x = v_pl x P_G`` and ``v_z = v_x x v_pl`` (both normalized). When
    ``v_z`` would point back towards the base, ``v_x`` and ``v_z`` are both
    negated, which keeps the determinant at +1 and makes the result
    independent of the sign of ``v_pl`` except for ``v_x``.
    """
    g = vec3(grab_point)
    v_pl = vec3(v_pl)
    vx = np.cross(v_pl, g)
    n = np.linalg.norm(vx)
    if n < 1e-9:
        raise DegenerateGeometry("conductor direction is parallel to the base-to-grab-point vector")
    vx = vx / n
    vz = np.cross(vx, v_pl)
    vz = vz / np.linalg.norm(vz)
    if np.dot(vz, g) < 0:
        vx, vz = -vx, -vz
    return np.column_stack([vx, v_pl, vz])


def intermittent_point(grab_point, v_z, d: float) -> np.ndarray:
    if d < 0:
        raise ValueError("offset must be non-negative")
    return vec3(grab_point) - vec3(v_z) * d


def plan_grasp(line: Line3, approach_offset_d: float, base=(0.0, 0.0, 0.0)) -> GraspPlan:
    g = select_grab_point(line, base)
    R = grab_orientation(g - vec3(base), line.direction)
    return GraspPlan(g, R, intermittent_point(g, R[:, 2], approach_offset_d))


def step_procedure(state: ProcedureState, est, ee_pose: RigidTransform, params: ProcedureParams):
    """Advance the approach procedure by one transition.

    ``est`` is a base-frame ``ConductorEstimate``, a ``DegenerateParallel``
    instance when the field vectors were too close to parallel, or ``None``
    when no estimate is available (e.g. before localization or when the field
    was too weak). It is only consulted in analysis phases.

    Returns ``(new_state, command)``; ``command`` is a ``PoseCommand`` or None.

    Raises:
        IterationLimit: more than ``params.max_iterations`` analysis steps.
    """
    phase = state.phase

    if phase is Phase.IDLE:
        return replace(state, phase=Phase.AWAIT_COMMAND, plan=None, iteration=0), None
    if phase is Phase.AWAIT_COMMAND:
        # operator command received
        return replace(state, phase=Phase.LOCALIZE), None
    if phase is Phase.GRABBED:
        return ProcedureState(Phase.IDLE), None

    if phase is Phase.LINEAR_APPROACH:
        plan = state.plan
        if np.linalg.norm(ee_pose.translation - plan.grab_point) <= ARRIVAL_TOL:
            return replace(state, phase=Phase.GRABBED), None
        return state, PoseCommand("grab", plan.grab_point, ee_pose.rotation, linear=True)

    # analysis phases
    if state.iteration >= params.max_iterations:
        raise IterationLimit(f"no grab after {params.max_iterations} localization cycles")
    iteration = state.iteration + 1

    if est is None:
        return replace(state, iteration=iteration), None

    if isinstance(est, DegenerateParallel):
        R = ee_pose.rotation @ rot_z(np.pi / 2.0)
        cmd = PoseCommand("rotate", ee_pose.translation, R)
        return ProcedureState(Phase.ROTATE_TOOL, state.plan, iteration), cmd

    line = est.line if isinstance(est, ConductorEstimate) else est
    plan = plan_grasp(line, params.approach_offset_d)
    here = ee_pose.translation
    dist = float(np.linalg.norm(here - plan.intermittent_point))

    if dist > params.d_max:
        mid = 0.5 * (here + plan.intermittent_point)
        return ProcedureState(Phase.MOVE_MIDPOINT, plan, iteration), PoseCommand("midpoint", mid, plan.orientation)
    if dist >= params.d_min:
        return (
            ProcedureState(Phase.MOVE_INTERMITTENT, plan, iteration),
            PoseCommand("intermittent", plan.intermittent_point, plan.orientation),
        )
    # orientation is frozen at approach start
    return (
        ProcedureState(Phase.LINEAR_APPROACH, plan, iteration),
        PoseCommand("grab", plan.grab_point, ee_pose.rotation, linear=True),
    )
