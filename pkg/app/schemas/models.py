"""
Pydantic схемы геометрии и кинематики
"""
import math
from typing import List, NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def normalize_angle(theta: float) -> float:
    """Приведение угла к (-pi, pi]"""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def _require_finite(value: float) -> float:
    if not math.isfinite(value):
        raise ValueError("значение должно быть конечным")
    return value


# ========== ПОЗЫ И ТОЧКИ ==========
class Pose2(BaseModel):
    """Поза SE(2): метры и радианы, theta в (-pi, pi]"""
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    model_config = ConfigDict(frozen=True)

    @field_validator("x", "y")
    @classmethod
    def validate_position(cls, v: float) -> float:
        return _require_finite(v)

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v: float) -> float:
        return normalize_angle(_require_finite(v))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @classmethod
    def from_array(cls, values) -> "Pose2":
        return cls(x=float(values[0]), y=float(values[1]), theta=float(values[2]))

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


class Point3(BaseModel):
    """Точка в 3D (метры)"""
    x: float
    y: float
    z: float

    model_config = ConfigDict(frozen=True)

    @field_validator("x", "y", "z")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        return _require_finite(v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values) -> "Point3":
        return cls(x=float(values[0]), y=float(values[1]), z=float(values[2]))


class PlanarPoint(NamedTuple):
    """Позиция на горизонтальной плоскости (вперед, влево)"""
    x: float
    y: float


# ========== КОМАНДЫ СКОРОСТИ ==========
class Twist(BaseModel):
    """Пара команд (v, omega)"""
    v: float = 0.0
    omega: float = 0.0

    model_config = ConfigDict(frozen=True)

    @field_validator("v", "omega")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        return _require_finite(v)


class TwistLimits(BaseModel):
    """Границы команд робота"""
    v_min: float = 0.0
    v_max: float = 0.5
    omega_max: float = Field(default=0.9, gt=0)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def validate_range(self) -> "TwistLimits":
        if self.v_max <= self.v_min:
            raise ValueError("v_max должно быть больше v_min")
        return self

    def contains(self, twist: Twist, tol: float = 1e-12) -> bool:
        return (self.v_min - tol <= twist.v <= self.v_max + tol
                and abs(twist.omega) <= self.omega_max + tol)


class CommandSequence(BaseModel):
    """Последовательность из N команд с шагом dt"""
    commands: List[Twist]
    dt: float = Field(default=0.333, gt=0)

    model_config = ConfigDict(frozen=True)

    @field_validator("commands")
    @classmethod
    def validate_commands(cls, v: List[Twist]) -> List[Twist]:
        if not v:
            raise ValueError("последовательность команд пуста")
        return v

    def __len__(self) -> int:
        return len(self.commands)

    def as_array(self) -> np.ndarray:
        """Массив (N, 2): столбцы v, omega"""
        return np.array([[c.v, c.omega] for c in self.commands], dtype=float)

    @classmethod
    def from_array(cls, values, dt: float = 0.333) -> "CommandSequence":
        return cls(commands=[Twist(v=float(v), omega=float(w)) for v, w in np.asarray(values, dtype=float)], dt=dt)

    @classmethod
    def constant(cls, twist: Twist, steps: int, dt: float = 0.333) -> "CommandSequence":
        return cls(commands=[twist] * steps, dt=dt)


# ========== КАМЕРА ==========
class CameraIntrinsics(BaseModel):
    """Параметры pinhole-камеры (пиксели)"""
    fx: float = Field(default=60.0, gt=0)
    fy: float = Field(default=60.0, gt=0)
    cx: float = 48.0
    cy: float = 36.0
    width: int = Field(default=96, gt=0)
    height: int = Field(default=72, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def validate_principal_point(self) -> "CameraIntrinsics":
        if not 0 <= self.cx < self.width:
            raise ValueError(f"cx={self.cx} вне [0, {self.width})")
        if not 0 <= self.cy < self.height:
            raise ValueError(f"cy={self.cy} вне [0, {self.height})")
        return self

    @property
    def half_fov(self) -> float:
        """Половина горизонтального угла обзора (рад)"""
        return math.atan2(max(self.cx, self.width - self.cx), self.fx)


class PixelProjection(NamedTuple):
    """Результат проекции точки на изображение"""
    u: float
    v: float
    inside: bool


class CropBox(BaseModel):
    """Прямоугольник кропа: центр (u, v) и размеры w x h в пикселях"""
    u: float
    v: float
    w: int = Field(ge=1)
    h: int = Field(ge=1)

    def bounds(self) -> Tuple[float, float, float, float]:
        return self.u - self.w / 2, self.v - self.h / 2, self.u + self.w / 2, self.v + self.h / 2


# ========== ЦЕЛЕВАЯ ФУНКЦИЯ ==========
class ObjectiveBreakdown(BaseModel):
    """Слагаемые целевой функции и итог"""
    j_pose: float = Field(ge=0)
    j_col: float = Field(ge=0)
    j_smooth: float = Field(ge=0)
    total: float = Field(ge=0)
    epsilon: int = Field(ge=0, le=1)

    def as_row(self) -> dict:
        return self.model_dump()
