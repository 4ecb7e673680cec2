"""
Планировщик на решетке состояний: 15 примитивов постоянной скорости

Стоимость примитива j:
    J_j = min_i |p_i^j - goal|^2 + C_ob * [d_j < r_r]
где d_j -- минимальное расстояние от поз примитива до точек препятствий.
Выбирается примитив с минимальной стоимостью, при равенстве -- с меньшим индексом.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.geom.kinematics import integrate_step, rollout_array
from app.schemas.config import PlannerConfig
from app.schemas.models import PlanarPoint, Pose2, Twist
from app.schemas.world import Outcome, PlanTraceEntry
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

# (v, omega) в порядке перечисления; порядок задает разрешение равенств
PRIMITIVES: Tuple[Tuple[float, float], ...] = (
    (0.0, 0.0),
    (0.2, 0.0), (0.2, 0.3), (0.2, 0.6), (0.2, 0.9), (0.2, -0.3), (0.2, -0.6), (0.2, -0.9),
    (0.5, 0.0), (0.5, 0.3), (0.5, 0.6), (0.5, 0.9), (0.5, -0.3), (0.5, -0.6), (0.5, -0.9),
)

PointLike = Union[PlanarPoint, Sequence[float], np.ndarray]


def obstacle_array(obstacles) -> np.ndarray:
    """Точки препятствий (P, 2); None и пустые списки дают (0, 2)"""
    if obstacles is None:
        return np.empty((0, 2))
    points = np.asarray(obstacles, dtype=float)
    if points.size == 0:
        return np.empty((0, 2))
    return points.reshape(-1, 2)


def min_clearance(positions: np.ndarray, obstacles: np.ndarray) -> np.ndarray:
    """Минимальное расстояние от каждой позиции (..., 2) до множества точек; inf без препятствий"""
    positions = np.asarray(positions, dtype=float)
    if obstacles.shape[0] == 0:
        return np.full(positions.shape[:-1], np.inf)
    delta = positions[..., None, :] - obstacles
    return np.sqrt(np.min(np.sum(delta * delta, axis=-1), axis=-1))


def _pose_array(p: Union[Pose2, np.ndarray]) -> np.ndarray:
    return p.as_array() if isinstance(p, Pose2) else np.asarray(p, dtype=float)


@dataclass
class RecedingHorizonResult:
    """Выполненная траектория и причина остановки"""
    trajectory: List[Pose2]
    commands: List[Twist]
    outcome: Outcome
    steps: int
    final_distance: float
    trace: List[PlanTraceEntry] = field(default_factory=list)


class StateLatticePlanner:
    """Планировщик на 15 примитивах"""

    def __init__(self, cfg: Optional[PlannerConfig] = None):
        self.cfg = cfg or PlannerConfig()
        self.primitives = np.array(PRIMITIVES, dtype=float)
        self._commands = np.repeat(self.primitives[:, None, :], self.cfg.steps, axis=1)

        logger.debug(
            "StateLatticePlanner инициализирован",
            event="planner_initialized",
            primitives=len(PRIMITIVES),
            steps=self.cfg.steps,
            dt=self.cfg.dt,
            robot_radius=self.cfg.robot_radius,
            collision_penalty=self.cfg.collision_penalty,
        )

    # ========== ПРИМИТИВЫ И СТОИМОСТЬ ==========
    def rollouts_array(self, p0: Union[Pose2, np.ndarray]) -> np.ndarray:
        """Позы всех примитивов (15, steps, 3)"""
        return rollout_array(_pose_array(p0), self._commands, self.cfg.dt)

    def primitive_rollouts(self, p0: Pose2) -> List[List[Pose2]]:
        return [[Pose2.from_array(row) for row in traj] for traj in self.rollouts_array(p0)]

    def costs(self, p0: Union[Pose2, np.ndarray], goal: PointLike, obstacles=None) -> np.ndarray:
        """Стоимости всех 15 примитивов"""
        positions = self.rollouts_array(p0)[..., :2]
        goal_xy = np.asarray(goal, dtype=float)[:2]
        goal_term = np.min(np.sum((positions - goal_xy) ** 2, axis=-1), axis=-1)
        clearance = np.min(min_clearance(positions, obstacle_array(obstacles)), axis=-1)
        return goal_term + np.where(clearance < self.cfg.robot_radius, self.cfg.collision_penalty, 0.0)

    def select(self, p0: Union[Pose2, np.ndarray], goal: PointLike, obstacles=None) -> Tuple[int, np.ndarray]:
        """Индекс лучшего примитива и вектор стоимостей"""
        costs = self.costs(p0, goal, obstacles)
        return int(np.argmin(costs)), costs

    def plan_step(self, p0: Pose2, goal: PointLike, obstacles=None) -> Twist:
        index, _ = self.select(p0, goal, obstacles)
        v, omega = PRIMITIVES[index]
        return Twist(v=v, omega=omega)

    # ========== ЗАМКНУТЫЙ КОНТУР ==========
    def teacher_trajectory(self, p0: Pose2, goal: PointLike, obstacles=None, M: int = 8) -> List[Pose2]:
        """M поз, полученных повторным выбором примитива и одним шагом dt"""
        if M < 1:
            raise ValueError(f"M должно быть >= 1, получено {M}")
        points = obstacle_array(obstacles)
        pose = p0
        poses = []
        for _ in range(M):
            pose = integrate_step(pose, self.plan_step(pose, goal, points), self.cfg.dt)
            poses.append(pose)
        return poses

    def receding_horizon_control(self, p0: Pose2, goal: PointLike, obstacles=None,
                                 max_steps: int = 120) -> RecedingHorizonResult:
        """
        Перепланирование на каждом шаге с выполнением первой команды

        Успех проверяется до планирования (расстояние <= success_radius),
        столкновение -- после шага (расстояние до препятствия < robot_radius).
        """
        if max_steps < 1:
            raise ValueError(f"max_steps должно быть >= 1, получено {max_steps}")
        points = obstacle_array(obstacles)
        goal_xy = np.asarray(goal, dtype=float)[:2]
        pose = p0
        trajectory = [p0]
        commands: List[Twist] = []
        trace: List[PlanTraceEntry] = []

        def distance(p: Pose2) -> float:
            return float(np.hypot(p.x - goal_xy[0], p.y - goal_xy[1]))

        outcome = Outcome.TIMEOUT
        for step in range(max_steps):
            if distance(pose) <= self.cfg.success_radius:
                outcome = Outcome.SUCCESS
                break
            index, costs = self.select(pose, goal_xy, points)
            trace.append(PlanTraceEntry(step=step, primitive_index=index, costs=costs.tolist(), pose=pose))
            logger.plan_selected(step, index, float(costs[index]))
            twist = Twist(v=PRIMITIVES[index][0], omega=PRIMITIVES[index][1])
            pose = integrate_step(pose, twist, self.cfg.dt)
            trajectory.append(pose)
            commands.append(twist)
            if min_clearance(pose.position(), points) < self.cfg.robot_radius:
                outcome = Outcome.COLLISION
                break
        else:
            if distance(pose) <= self.cfg.success_radius:
                outcome = Outcome.SUCCESS

        return RecedingHorizonResult(
            trajectory=trajectory,
            commands=commands,
            outcome=outcome,
            steps=len(commands),
            final_distance=distance(pose),
            trace=trace,
        )


# ========== ФУНКЦИОНАЛЬНЫЙ ИНТЕРФЕЙС ==========
def primitive_rollouts(p0: Pose2, cfg: Optional[PlannerConfig] = None) -> List[List[Pose2]]:
    return StateLatticePlanner(cfg).primitive_rollouts(p0)


def primitive_cost(traj, goal: PointLike, obstacles, cfg: Optional[PlannerConfig] = None) -> float:
    """Стоимость одной траектории примитива (список Pose2 или массив (steps, 3))"""
    cfg = cfg or PlannerConfig()
    if isinstance(traj, np.ndarray):
        positions = traj[:, :2]
    else:
        positions = np.array([[p.x, p.y] for p in traj], dtype=float)
    goal_term = float(np.min(np.sum((positions - np.asarray(goal, dtype=float)[:2]) ** 2, axis=-1)))
    clearance = float(np.min(min_clearance(positions, obstacle_array(obstacles))))
    return goal_term + (cfg.collision_penalty if clearance < cfg.robot_radius else 0.0)


def plan_step(p0: Pose2, goal: PointLike, obstacles=None, cfg: Optional[PlannerConfig] = None) -> Twist:
    return StateLatticePlanner(cfg).plan_step(p0, goal, obstacles)


def teacher_trajectory(p0: Pose2, goal: PointLike, obstacles=None, cfg: Optional[PlannerConfig] = None,
                       M: int = 8) -> List[Pose2]:
    return StateLatticePlanner(cfg).teacher_trajectory(p0, goal, obstacles, M)


def receding_horizon_control(p0: Pose2, goal: PointLike, obstacles=None, cfg: Optional[PlannerConfig] = None,
                             max_steps: int = 120) -> RecedingHorizonResult:
    return StateLatticePlanner(cfg).receding_horizon_control(p0, goal, obstacles, max_steps)
