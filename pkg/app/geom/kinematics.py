"""
Кинематика SE(2): точное интегрирование дуги, rollout и его производные

Все пакетные функции работают с массивами numpy формы (..., 3) для поз
(x, y, theta) и (..., N, 2) для команд (v, omega). Угол внутри rollout не
нормализуется, нормализация выполняется только при выдаче Pose2.
"""
import math
from typing import List, Tuple

import numpy as np

from app.schemas.models import CommandSequence, Pose2, Twist
from app.utils.errors import GeometryError, ShapeMismatchError

# Порог прямолинейного предела
OMEGA_EPS = 1e-9
# Ниже этого |omega*dt| производные S и C считаются по ряду Тейлора
_SERIES_EPS = 1e-3


# ========== ЧЛЕНЫ ДУГИ ==========
def _arc_terms(a: np.ndarray, straight: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    S(a) = sin(a)/a, C(a) = (1 - cos(a))/a и их производные по a

    Для straight (|omega| < OMEGA_EPS) используется предел S=1, C=0.
    """
    S = np.sinc(a / np.pi)
    C = np.sin(a / 2.0) * np.sinc(a / (2.0 * np.pi))

    small = np.abs(a) < _SERIES_EPS
    safe = np.where(small, 1.0, a)
    a2 = safe * safe
    dS = np.where(small, -a / 3.0 + a ** 3 / 30.0, (safe * np.cos(safe) - np.sin(safe)) / a2)
    dC = np.where(small, 0.5 - a ** 2 / 8.0 + a ** 4 / 144.0,
                  (safe * np.sin(safe) - (1.0 - np.cos(safe))) / a2)

    S = np.where(straight, 1.0, S)
    C = np.where(straight, 0.0, C)
    return S, C, dS, dC


def _step_terms(state: np.ndarray, commands: np.ndarray, dt: float):
    """Приращения шага и частные производные по (v, omega)"""
    theta = state[..., 2]
    v = commands[..., 0]
    omega = commands[..., 1]
    straight = np.abs(omega) < OMEGA_EPS
    S, C, dS, dC = _arc_terms(omega * dt, straight)

    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    dx_dv = dt * (cos_t * S - sin_t * C)
    dy_dv = dt * (sin_t * S + cos_t * C)
    dx = v * dx_dv
    dy = v * dy_dv
    dx_dw = v * dt * dt * (cos_t * dS - sin_t * dC)
    dy_dw = v * dt * dt * (sin_t * dS + cos_t * dC)
    return dx, dy, dx_dv, dy_dv, dx_dw, dy_dw


def _check_dt(dt: float) -> float:
    if not math.isfinite(dt) or dt <= 0:
        raise GeometryError(f"dt должно быть положительным и конечным, получено {dt}")
    return float(dt)


# ========== ПАКЕТНЫЕ ОПЕРАЦИИ ==========
def integrate_array(state: np.ndarray, commands: np.ndarray, dt: float) -> np.ndarray:
    """Один шаг для массива поз (..., 3) и команд (..., 2); угол не нормализуется"""
    state = np.asarray(state, dtype=float)
    commands = np.asarray(commands, dtype=float)
    dx, dy, *_ = _step_terms(state, commands, dt)
    out = np.empty(np.broadcast_shapes(state.shape, commands.shape[:-1] + (3,)))
    out[..., 0] = state[..., 0] + dx
    out[..., 1] = state[..., 1] + dy
    out[..., 2] = state[..., 2] + commands[..., 1] * dt
    return out


def rollout_array(p0: np.ndarray, commands: np.ndarray, dt: float) -> np.ndarray:
    """
    Rollout для пакета: p0 (..., 3), commands (..., N, 2) -> позы (..., N, 3)

    Поза k получена после применения команд 0..k; p0 в выход не входит.
    """
    p0 = np.asarray(p0, dtype=float)
    commands = np.asarray(commands, dtype=float)
    if commands.ndim < 2 or commands.shape[-1] != 2:
        raise ShapeMismatchError(f"команды должны иметь форму (..., N, 2), получено {commands.shape}")
    steps = commands.shape[-2]
    batch = np.broadcast_shapes(p0.shape[:-1], commands.shape[:-2])
    poses = np.empty(batch + (steps, 3))
    state = np.broadcast_to(p0, batch + (3,))
    for k in range(steps):
        state = integrate_array(state, commands[..., k, :], dt)
        poses[..., k, :] = state
    return poses


def rollout_vjp(p0: np.ndarray, commands: np.ndarray, dt: float, grad_poses: np.ndarray) -> np.ndarray:
    """
    Обратный проход через rollout (сопряженная переменная)

    grad_poses (..., N, 3) -- градиент скаляра по выходным позам.
    Возвращает градиент по командам (..., N, 2).
    """
    p0 = np.asarray(p0, dtype=float)
    commands = np.asarray(commands, dtype=float)
    grad_poses = np.asarray(grad_poses, dtype=float)
    steps = commands.shape[-2]
    if grad_poses.shape[-2:] != (steps, 3):
        raise ShapeMismatchError(f"градиент поз {grad_poses.shape} не согласован с N={steps}")

    poses = rollout_array(p0, commands, dt)
    batch = poses.shape[:-2]
    # Состояния перед каждым шагом
    before = np.concatenate([np.broadcast_to(p0, batch + (3,))[..., None, :], poses[..., :-1, :]], axis=-2)
    dx, dy, dx_dv, dy_dv, dx_dw, dy_dw = _step_terms(before, commands, dt)

    grad_commands = np.zeros(batch + (steps, 2))
    adj = np.zeros(batch + (3,))
    for k in range(steps - 1, -1, -1):
        adj = adj + grad_poses[..., k, :]
        grad_commands[..., k, 0] = adj[..., 0] * dx_dv[..., k] + adj[..., 1] * dy_dv[..., k]
        grad_commands[..., k, 1] = adj[..., 0] * dx_dw[..., k] + adj[..., 1] * dy_dw[..., k] + adj[..., 2] * dt
        adj = adj.copy()
        adj[..., 2] = adj[..., 2] - adj[..., 0] * dy[..., k] + adj[..., 1] * dx[..., k]
    return grad_commands


def jacobian_array(p0: np.ndarray, commands: np.ndarray, dt: float) -> np.ndarray:
    """
    Полный якобиан одного rollout: J[k, i, j, c] = d pose_k[i] / d command_j[c]

    Форма (N, 3, N, 2). Элементы с j > k равны нулю (причинность).
    """
    p0 = np.asarray(p0, dtype=float).reshape(3)
    commands = np.asarray(commands, dtype=float)
    steps = commands.shape[0]
    poses = rollout_array(p0, commands, dt)
    before = np.vstack([p0[None, :], poses[:-1]])
    dx, dy, dx_dv, dy_dv, dx_dw, dy_dw = _step_terms(before, commands, dt)

    jac = np.zeros((steps, 3, steps, 2))
    for k in range(steps):
        if k > 0:
            prev = jac[k - 1, :, :k, :]
            # A_k = I + e_x * (-dy) d/dtheta + e_y * dx d/dtheta
            jac[k, :, :k, :] = prev
            jac[k, 0, :k, :] -= dy[k] * prev[2]
            jac[k, 1, :k, :] += dx[k] * prev[2]
        jac[k, 0, k] = (dx_dv[k], dx_dw[k])
        jac[k, 1, k] = (dy_dv[k], dy_dw[k])
        jac[k, 2, k] = (0.0, dt)
    return jac


# ========== ПРЕОБРАЗОВАНИЯ СИСТЕМ КООРДИНАТ ==========
def to_local(origin: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Точки (..., 2) из мировой системы в систему позы origin (x, y, theta)"""
    origin = np.asarray(origin, dtype=float)
    delta = np.asarray(points, dtype=float)[..., :2] - origin[:2]
    c, s = math.cos(origin[2]), math.sin(origin[2])
    local = np.empty_like(delta)
    local[..., 0] = c * delta[..., 0] + s * delta[..., 1]
    local[..., 1] = -s * delta[..., 0] + c * delta[..., 1]
    return local


def to_world(origin: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Точки (..., 2) из системы позы origin в мировую систему"""
    origin = np.asarray(origin, dtype=float)
    local = np.asarray(points, dtype=float)
    c, s = math.cos(origin[2]), math.sin(origin[2])
    world = np.empty(local.shape[:-1] + (2,))
    world[..., 0] = origin[0] + c * local[..., 0] - s * local[..., 1]
    world[..., 1] = origin[1] + s * local[..., 0] + c * local[..., 1]
    return world


def compose(transform: Pose2, pose: Pose2) -> Pose2:
    """Применение жесткого преобразования transform к позе"""
    x, y = to_world(transform.as_array(), np.array([pose.x, pose.y]))
    return Pose2(x=float(x), y=float(y), theta=transform.theta + pose.theta)


def relative_pose(origin: Pose2, pose: Pose2) -> Pose2:
    """Поза pose в системе origin"""
    x, y = to_local(origin.as_array(), np.array([pose.x, pose.y]))
    return Pose2(x=float(x), y=float(y), theta=pose.theta - origin.theta)


# ========== ОБЕРТКИ НАД Pose2 ==========
def integrate_step(p: Pose2, u: Twist, dt: float) -> Pose2:
    """Точное интегрирование постоянной команды (v, omega) на интервале dt"""
    dt = _check_dt(dt)
    state = integrate_array(p.as_array(), np.array([u.v, u.omega]), dt)
    if not np.all(np.isfinite(state)):
        raise GeometryError("интегрирование дало нефинитную позу")
    return Pose2.from_array(state)


def rollout(p0: Pose2, seq: CommandSequence) -> List[Pose2]:
    """Позы p̂_0..p̂_{N-1} после последовательного применения команд"""
    dt = _check_dt(seq.dt)
    poses = rollout_array(p0.as_array(), seq.as_array(), dt)
    if not np.all(np.isfinite(poses)):
        raise GeometryError("rollout дал нефинитную позу")
    return [Pose2.from_array(row) for row in poses]


def rollout_jacobian(p0: Pose2, seq: CommandSequence) -> np.ndarray:
    """Якобиан (N, 3, N, 2) всех поз rollout по всем командам"""
    return jacobian_array(p0.as_array(), seq.as_array(), _check_dt(seq.dt))
