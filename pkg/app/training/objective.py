"""
Целевая функция обучения: достижение объекта, следование учителю, гладкость

    J = J_pose + lambda_col * epsilon * J_col + J_smooth

epsilon = 0, если цель ближе mask_radius к начальной позе, иначе 1.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from app.geom.kinematics import jacobian_array, rollout_array, rollout_vjp
from app.schemas.config import ObjectiveConfig
from app.schemas.models import CommandSequence, ObjectiveBreakdown, PlanarPoint, Pose2
from app.utils.errors import ShapeMismatchError

PoseLike = Union[np.ndarray, Sequence[Pose2]]
PointLike = Union[PlanarPoint, Sequence[float], np.ndarray]


def _poses_xy(poses: PoseLike) -> np.ndarray:
    if isinstance(poses, np.ndarray):
        return np.asarray(poses, dtype=float)[..., :2]
    return np.array([[p.x, p.y] for p in poses], dtype=float)


def _goal_xy(goal: PointLike) -> np.ndarray:
    if isinstance(goal, Pose2):
        return goal.position()
    return np.asarray(goal, dtype=float)[:2]


# ========== СЛАГАЕМЫЕ ==========
def j_pose(poses: PoseLike, goal: PointLike) -> float:
    """Квадрат расстояния на плоскости между последней позой и целью"""
    xy = _poses_xy(poses)
    delta = xy[-1] - _goal_xy(goal)
    return float(delta @ delta)


def j_col(poses: PoseLike, teacher: PoseLike) -> float:
    """Сумма квадратов расстояний до поз учителя по первым M шагам"""
    xy = _poses_xy(poses)
    ref = _poses_xy(teacher)
    if ref.shape[0] > xy.shape[0]:
        raise ShapeMismatchError(f"траектория учителя длиной {ref.shape[0]} длиннее rollout ({xy.shape[0]})")
    delta = xy[:ref.shape[0]] - ref
    return float(np.sum(delta * delta))


def j_smooth(seq: Union[CommandSequence, np.ndarray]) -> float:
    """Сумма квадратов разностей соседних команд, k = 0..N-2"""
    commands = seq.as_array() if isinstance(seq, CommandSequence) else np.asarray(seq, dtype=float)
    diff = np.diff(commands, axis=0)
    return float(np.sum(diff * diff))


def mask_epsilon(p0: Pose2, goal: PointLike, mask_radius: float) -> int:
    """Маска epsilon: 0 для целей ближе mask_radius"""
    delta = _goal_xy(goal) - p0.position()
    return 0 if float(np.hypot(*delta)) < mask_radius else 1


def _check_horizons(seq: CommandSequence, teacher: PoseLike, cfg: ObjectiveConfig) -> None:
    if len(seq) != cfg.N:
        raise ShapeMismatchError(f"ожидалось N={cfg.N} команд, получено {len(seq)}")
    if len(teacher) != cfg.M:
        raise ShapeMismatchError(f"ожидалось M={cfg.M} поз учителя, получено {len(teacher)}")


# ========== ПОЛНАЯ ФУНКЦИЯ ==========
def total_objective(seq: CommandSequence, p0: Pose2, goal: PointLike, teacher: PoseLike,
                    cfg: ObjectiveConfig) -> ObjectiveBreakdown:
    """Все слагаемые и итог для одной последовательности команд"""
    _check_horizons(seq, teacher, cfg)
    poses = rollout_array(p0.as_array(), seq.as_array(), seq.dt)
    pose_term = j_pose(poses, goal)
    col_term = j_col(poses, teacher)
    smooth_term = j_smooth(seq)
    epsilon = mask_epsilon(p0, goal, cfg.mask_radius)
    return ObjectiveBreakdown(
        j_pose=pose_term,
        j_col=col_term,
        j_smooth=smooth_term,
        total=pose_term + cfg.lambda_col * epsilon * col_term + smooth_term,
        epsilon=epsilon,
    )


def _smooth_grad(commands: np.ndarray) -> np.ndarray:
    diff = np.diff(commands, axis=-2)
    grad = np.zeros_like(commands)
    grad[..., 1:, :] += 2.0 * diff
    grad[..., :-1, :] -= 2.0 * diff
    return grad


def objective_gradient(seq: CommandSequence, p0: Pose2, goal: PointLike, teacher: PoseLike,
                       cfg: ObjectiveConfig) -> np.ndarray:
    """Точный градиент J по командам, форма (N, 2): столбцы dJ/dv, dJ/domega"""
    _check_horizons(seq, teacher, cfg)
    commands = seq.as_array()
    p = p0.as_array()
    poses = rollout_array(p, commands, seq.dt)
    jac = jacobian_array(p, commands, seq.dt)

    grad_xy = np.zeros((cfg.N, 2))
    grad_xy[-1] += 2.0 * (poses[-1, :2] - _goal_xy(goal))
    weight = cfg.lambda_col * mask_epsilon(p0, goal, cfg.mask_radius)
    if weight:
        ref = _poses_xy(teacher)
        grad_xy[:cfg.M] += weight * 2.0 * (poses[:cfg.M, :2] - ref)

    grad = np.einsum("ki,kijc->jc", grad_xy, jac[:, :2])
    return grad + _smooth_grad(commands)


# ========== ПАКЕТНЫЙ ВАРИАНТ ДЛЯ ОБУЧЕНИЯ ==========
@dataclass
class BatchObjective:
    """Средние по пакету слагаемые и градиент по командам каждого примера"""
    j_pose: np.ndarray
    j_col: np.ndarray
    j_smooth: np.ndarray
    epsilon: np.ndarray
    total: np.ndarray
    grad_commands: np.ndarray

    def mean_breakdown(self) -> dict:
        return {
            "j_pose": float(np.mean(self.j_pose)),
            "j_col": float(np.mean(self.j_col)),
            "j_smooth": float(np.mean(self.j_smooth)),
            "total": float(np.mean(self.total)),
            "epsilon": float(np.mean(self.epsilon)),
        }


def batch_objective(commands: np.ndarray, goals: np.ndarray, teachers: np.ndarray,
                    cfg: ObjectiveConfig, dt: float) -> BatchObjective:
    """
    Целевая функция для пакета с началом в нуле системы робота

    Args:
        commands: (B, N, 2)
        goals: (B, 2) цели в системе робота
        teachers: (B, M, 2) позиции учителя
        cfg: горизонты, маска и вес J_col
        dt: шаг интегрирования

    Returns:
        BatchObjective; grad_commands -- градиент суммарного J каждого примера
    """
    commands = np.asarray(commands, dtype=float)
    goals = np.asarray(goals, dtype=float)
    teachers = np.asarray(teachers, dtype=float)[..., :2]
    if commands.shape[1:] != (cfg.N, 2):
        raise ShapeMismatchError(f"команды {commands.shape}, ожидалось (B, {cfg.N}, 2)")
    if teachers.shape[1:] != (cfg.M, 2):
        raise ShapeMismatchError(f"учитель {teachers.shape}, ожидалось (B, {cfg.M}, 2)")

    origin = np.zeros(3)
    poses = rollout_array(origin, commands, dt)
    pose_delta = poses[:, -1, :2] - goals
    col_delta = poses[:, :cfg.M, :2] - teachers
    diff = np.diff(commands, axis=1)

    pose_terms = np.sum(pose_delta ** 2, axis=-1)
    col_terms = np.sum(col_delta ** 2, axis=(1, 2))
    smooth_terms = np.sum(diff ** 2, axis=(1, 2))
    epsilon = (np.hypot(goals[:, 0], goals[:, 1]) >= cfg.mask_radius).astype(float)
    weight = cfg.lambda_col * epsilon
    totals = pose_terms + weight * col_terms + smooth_terms

    grad_poses = np.zeros(poses.shape)
    grad_poses[:, -1, :2] = 2.0 * pose_delta
    grad_poses[:, :cfg.M, :2] += 2.0 * weight[:, None, None] * col_delta
    grad = rollout_vjp(origin, commands, dt, grad_poses) + _smooth_grad(commands)

    return BatchObjective(
        j_pose=pose_terms,
        j_col=col_terms,
        j_smooth=smooth_terms,
        epsilon=epsilon,
        total=totals,
        grad_commands=grad,
    )
