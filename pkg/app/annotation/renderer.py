"""
Синтетический рендер кадра: глубина, маски объектов, доли видимости

Объекты -- вертикальные цилиндры, пол -- плоскость z=0. Камера стоит на
высоте mount_height над полом и смотрит вдоль курса робота. Крышки
цилиндров не рисуются.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from app.schemas.config import CameraConfig
from app.schemas.dataset import ObjectSpec
from app.schemas.models import CameraIntrinsics, Pose2
from app.schemas.world import World
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


@dataclass
class RenderedFrame:
    """Карта глубины (z вдоль оптической оси), маски и видимость объектов"""
    depth: np.ndarray
    masks: Dict[str, np.ndarray] = field(default_factory=dict)
    visibility: Dict[str, float] = field(default_factory=dict)

    @property
    def object_ids(self) -> List[str]:
        return list(self.masks)


def _pixel_rays(intr: CameraIntrinsics):
    """Направления лучей в оптической системе при z=1: (H, W) для x и y"""
    u, v = np.meshgrid(np.arange(intr.width, dtype=float), np.arange(intr.height, dtype=float))
    return (u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy


def _cylinder_hits(obj: ObjectSpec, origin_xy: np.ndarray, world_dx: np.ndarray, world_dy: np.ndarray,
                   up: np.ndarray, mount_height: float, max_depth: float) -> np.ndarray:
    """Параметр t входа луча в боковую поверхность цилиндра; inf при промахе"""
    ox = origin_xy[0] - obj.pose.x
    oy = origin_xy[1] - obj.pose.y
    a = world_dx ** 2 + world_dy ** 2
    b = 2.0 * (world_dx * ox + world_dy * oy)
    c = ox * ox + oy * oy - obj.footprint_radius ** 2
    disc = b * b - 4.0 * a * c
    hit = disc >= 0
    sqrt_disc = np.sqrt(np.where(hit, disc, 0.0))
    t = (-b - sqrt_disc) / (2.0 * a)

    z = mount_height + t * up
    bottom = obj.pose.z - obj.height / 2.0
    top = obj.pose.z + obj.height / 2.0
    hit &= (t > 0) & (t <= max_depth) & (z >= bottom) & (z <= top)
    return np.where(hit, t, np.inf)


def frame_fraction(obj: ObjectSpec, robot_pose: Pose2, intr: CameraIntrinsics) -> float:
    """Доля углового размера объекта, попадающая в горизонтальный обзор камеры"""
    c, s = math.cos(robot_pose.theta), math.sin(robot_pose.theta)
    dx, dy = obj.pose.x - robot_pose.x, obj.pose.y - robot_pose.y
    forward = c * dx + s * dy
    left = -s * dx + c * dy
    dist = math.hypot(forward, left)
    if forward <= 0 or dist <= obj.footprint_radius:
        return 0.0
    bearing = math.atan2(left, forward)
    half = math.asin(obj.footprint_radius / dist)
    left_limit = math.atan2(intr.cx, intr.fx)
    right_limit = math.atan2(intr.width - intr.cx, intr.fx)
    overlap = min(bearing + half, left_limit) - max(bearing - half, -right_limit)
    return max(0.0, min(1.0, overlap / (2.0 * half)))


def render_frame(world: World, robot_pose: Pose2, camera: CameraConfig,
                 objects: Optional[List[ObjectSpec]] = None) -> RenderedFrame:
    """
    Рендер кадра из позы робота

    Args:
        world: мир (объекты берутся из world.objects, если objects не задан)
        robot_pose: поза робота; камера смотрит вдоль theta
        camera: внутренние параметры, высота установки, дальность
        objects: объекты в текущих позициях (для динамических сцен)

    Returns:
        RenderedFrame; объекты без видимых пикселей в маски не попадают
    """
    intr = camera.intrinsics
    objects = world.objects if objects is None else objects
    ray_x, ray_y = _pixel_rays(intr)

    # Оптическая система -> мир: вперед = 1, влево = -x, вверх = -y
    c, s = math.cos(robot_pose.theta), math.sin(robot_pose.theta)
    world_dx = c * 1.0 - s * (-ray_x)
    world_dy = s * 1.0 + c * (-ray_x)
    up = -ray_y
    origin = np.array([robot_pose.x, robot_pose.y])

    with np.errstate(divide="ignore", invalid="ignore"):
        floor_t = np.where(up < 0, camera.mount_height / -up, np.inf)
    floor_t = np.where(floor_t <= camera.max_depth, floor_t, np.inf)

    hits = [_cylinder_hits(obj, origin, world_dx, world_dy, up, camera.mount_height, camera.max_depth)
            for obj in objects]
    nearest = np.minimum.reduce([floor_t, *hits]) if hits else floor_t
    depth = np.where(np.isfinite(nearest), nearest, np.nan)

    frame = RenderedFrame(depth=depth)
    for obj, t in zip(objects, hits):
        unoccluded = np.isfinite(t)
        visible = unoccluded & (t <= nearest)
        total = int(unoccluded.sum())
        count = int(visible.sum())
        if count == 0:
            continue
        frame.masks[obj.id] = visible
        frame.visibility[obj.id] = (count / total) * frame_fraction(obj, robot_pose, intr)

    logger.debug("Кадр отрисован", event="frame_rendered",
                 objects=len(frame.masks), valid_pixels=int(np.isfinite(depth).sum()))
    return frame
