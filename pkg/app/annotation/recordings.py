"""
Записи проходов робота и выборка кадров
"""
import math
from typing import List, Optional

import numpy as np

from app.geom.kinematics import integrate_step
from app.planning.lattice import min_clearance, obstacle_array
from app.schemas.models import Pose2, Twist
from app.schemas.world import Recording, World

# Отступ от границы арены и от препятствий для синтетического прохода
_ARENA_MARGIN = 0.5
_CLEARANCE = 0.4


def sample_indices(pose_count: int, source_fps: float, sampling_fps: float, duration_s: float) -> List[int]:
    """
    Индексы кадров записи при частоте sampling_fps

    Если sampling_fps >= source_fps, берется каждый кадр. Число кадров
    не превышает duration_s * sampling_fps и длину записи.
    """
    if sampling_fps >= source_fps:
        stride = 1
        limit = int(round(duration_s * source_fps))
    else:
        stride = max(1, int(round(source_fps / sampling_fps)))
        limit = int(round(duration_s * sampling_fps))
    return list(range(0, pose_count, stride))[:limit]


def synthesize_recording(world: World, duration_s: float, fps: float, rng: np.random.Generator,
                         start: Optional[Pose2] = None) -> Recording:
    """
    Плавный случайный проход внутри арены

    Скорость меняется случайным блужданием; если следующий шаг выводит за
    внутреннюю границу арены или к препятствию, робот разворачивается на месте.
    """
    arena = world.arena
    points = obstacle_array([p for obstacle in world.obstacles for p in obstacle])
    pose = start or Pose2(x=(arena.x_min + arena.x_max) / 2, y=(arena.y_min + arena.y_max) / 2,
                          theta=float(rng.uniform(-math.pi, math.pi)))
    dt = 1.0 / fps
    steps = int(round(duration_s * fps))
    v, omega = 0.3, 0.0
    poses = [pose]
    for _ in range(steps - 1):
        v = float(np.clip(v + rng.normal(0.0, 0.05), 0.1, 0.5))
        omega = float(np.clip(omega + rng.normal(0.0, 0.15), -0.9, 0.9))
        candidate = integrate_step(pose, Twist(v=v, omega=omega), dt)
        inside = (arena.x_min + _ARENA_MARGIN <= candidate.x <= arena.x_max - _ARENA_MARGIN
                  and arena.y_min + _ARENA_MARGIN <= candidate.y <= arena.y_max - _ARENA_MARGIN)
        if not inside or min_clearance(candidate.position(), points) < _CLEARANCE:
            candidate = integrate_step(pose, Twist(v=0.0, omega=0.9), dt)
        pose = candidate
        poses.append(pose)
    return Recording(source_fps=fps, poses=poses)
