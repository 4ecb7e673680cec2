"""
Наблюдения робота в симуляции: видимые объекты в пирамиде обзора
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.geom.kinematics import to_local
from app.schemas.config import PolicyConfig
from app.schemas.dataset import Candidate, FrameObservation
from app.schemas.models import CameraIntrinsics, Pose2
from app.sim.world import WorldState
from app.training.encoder import InstructionEmbedding
from app.training.features import ObservationFeature, featurize


@dataclass(frozen=True)
class VisibleObject:
    """Объект в поле зрения: id, кандидат в системе робота, радиус основания"""
    object_id: str
    candidate: Candidate
    footprint_radius: float


def visible_objects(state: WorldState, robot_pose: Pose2, intr: CameraIntrinsics,
                    sensor_range: float = 6.0) -> List[VisibleObject]:
    """
    Объекты перед роботом в горизонтальном угле обзора и в пределах дальности

    Перекрытия не учитываются: позиции берутся из состояния мира.
    """
    objects = state.objects()
    if not objects:
        return []
    centers = np.array([[obj.pose.x, obj.pose.y] for obj in objects], dtype=float)
    local = to_local(robot_pose.as_array(), centers)
    # u = cx - fx * left / forward должно лежать в [0, width]
    left_limit = intr.cx / intr.fx
    right_limit = (intr.width - intr.cx) / intr.fx

    visible = []
    for obj, (forward, left) in zip(objects, local):
        if forward <= 0 or math.hypot(forward, left) > sensor_range:
            continue
        ratio = left / forward
        if ratio > left_limit or -ratio > right_limit:
            continue
        visible.append(VisibleObject(
            object_id=obj.id,
            candidate=Candidate(rel_x=float(forward), rel_y=float(left), label=obj.description),
            footprint_radius=obj.footprint_radius,
        ))
    return visible


def observe(state: WorldState, robot_pose: Pose2, intr: CameraIntrinsics, instr: InstructionEmbedding,
            cfg: Optional[PolicyConfig] = None, previous: Sequence[Candidate] = (),
            sensor_range: float = 6.0) -> ObservationFeature:
    """K слотов текущего кадра и предыдущего кадра для инструкции"""
    current = [item.candidate for item in visible_objects(state, robot_pose, intr, sensor_range)]
    observation = FrameObservation(current=current, previous=list(previous))
    return featurize(observation, instr, cfg or PolicyConfig(embedding_dim=instr.dim))
