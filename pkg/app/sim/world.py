"""
Состояние мира во времени: движение объектов по сценариям и проверка столкновений
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.geom.kinematics import integrate_step
from app.planning.lattice import min_clearance, obstacle_array
from app.schemas.dataset import ObjectSpec
from app.schemas.models import Point3, Pose2, Twist
from app.schemas.world import Waypoint, World


def script_position(script: Sequence[Waypoint], t: float) -> Tuple[float, float]:
    """
    Позиция по кусочно-линейному сценарию

    До первой точки -- первая точка, после последней -- последняя. Точки с
    равным временем задают мгновенный переход.
    """
    if not script:
        raise ValueError("пустой сценарий")
    times = [waypoint.t for waypoint in script]
    i = int(np.searchsorted(times, t, side="right")) - 1
    if i < 0:
        return script[0].x, script[0].y
    if i >= len(script) - 1:
        return script[-1].x, script[-1].y
    a, b = script[i], script[i + 1]
    alpha = (t - a.t) / (b.t - a.t)
    return a.x + alpha * (b.x - a.x), a.y + alpha * (b.y - a.y)


@dataclass
class WorldState:
    """Мир в момент t: текущие позиции объектов"""
    world: World
    t: float = 0.0
    positions: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        self._obstacles = obstacle_array([p for obstacle in self.world.obstacles for p in obstacle])
        if not self.positions:
            self.positions = self._positions_at(self.t)

    def _positions_at(self, t: float) -> Dict[str, Tuple[float, float]]:
        positions = {}
        for obj in self.world.objects:
            script = self.world.dynamic_scripts.get(obj.id)
            positions[obj.id] = script_position(script, t) if script else (obj.pose.x, obj.pose.y)
        return positions

    @property
    def obstacle_points(self) -> np.ndarray:
        return self._obstacles

    def advance(self, dt: float) -> "WorldState":
        t = self.t + dt
        return WorldState(world=self.world, t=t, positions=self._positions_at(t))

    def position(self, object_id: str) -> Tuple[float, float]:
        return self.positions[object_id]

    def objects(self) -> List[ObjectSpec]:
        """Объекты с текущими позициями"""
        moved = []
        for obj in self.world.objects:
            x, y = self.positions[obj.id]
            if (x, y) == (obj.pose.x, obj.pose.y):
                moved.append(obj)
            else:
                moved.append(obj.model_copy(update={"pose": Point3(x=x, y=y, z=obj.pose.z)}))
        return moved


def in_collision(state: WorldState, pose: Pose2, robot_radius: float, target_id: Optional[str] = None) -> bool:
    """Робот ближе robot_radius к точке препятствия или к основанию нецелевого объекта"""
    xy = pose.position()
    if min_clearance(xy, state.obstacle_points) < robot_radius:
        return True
    for obj in state.world.objects:
        if obj.id == target_id:
            continue
        x, y = state.positions[obj.id]
        if float(np.hypot(xy[0] - x, xy[1] - y)) < robot_radius + obj.footprint_radius:
            return True
    return False


def step_world(state: WorldState, robot_pose: Pose2, twist: Twist, dt: float, robot_radius: float = 0.3,
               target_id: Optional[str] = None) -> Tuple[WorldState, Pose2, bool]:
    """Шаг мира: интегрирование робота, сдвиг объектов по сценариям, флаг столкновения"""
    pose = integrate_step(robot_pose, twist, dt)
    next_state = state.advance(dt)
    return next_state, pose, in_collision(next_state, pose, robot_radius, target_id)
