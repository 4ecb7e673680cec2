"""
Pydantic схемы конфигурации запусков
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.models import CameraIntrinsics, TwistLimits
from app.utils.config import CHECKPOINT_SCHEMA_VERSION


class TrainingStage(str, Enum):
    """Стадия обучения"""
    PRETRAIN = "pretrain"
    FINETUNE = "finetune"


class PlanarConvention(str, Enum):
    """Какая ось камеры считается высотой при проекции на плоскость"""
    OPTICAL = "optical"  # x вправо, y вниз (высота), z вперед
    ROBOT = "robot"      # x вперед, y влево, z вверх (высота)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ========== ЦЕЛЕВАЯ ФУНКЦИЯ ==========
class ObjectiveConfig(_Section):
    """Горизонты и веса целевой функции"""
    N: int = Field(default=24, gt=0, description="Горизонт политики (шаги)")
    M: int = Field(default=8, gt=0, description="Горизонт учителя (шаги)")
    mask_radius: float = Field(default=1.0, gt=0, description="Порог маски epsilon (м)")
    lambda_col: float = Field(default=1.0, ge=0, description="Вес J_col")

    @model_validator(mode="after")
    def validate_horizons(self) -> "ObjectiveConfig":
        if self.M > self.N:
            raise ValueError(f"M={self.M} не может превышать N={self.N}")
        return self


# ========== ПОЛИТИКА И ОБУЧЕНИЕ ==========
class PolicyConfig(_Section):
    """Размеры FiLM-политики"""
    slots: int = Field(default=8, gt=0, description="K слотов кандидатов")
    embedding_dim: int = Field(default=64, gt=0, description="D размер эмбеддинга инструкции")
    hidden: int = Field(default=128, gt=0, description="H скрытый размер")
    history: int = Field(default=1, ge=0, le=1, description="L кадров истории")
    init_scale: float = Field(default=1.0, gt=0)

    @property
    def input_dim(self) -> int:
        return self.slots * 3 * (self.history + 1)


class TrainConfig(_Section):
    """Параметры обучения"""
    learning_rate: float = Field(default=1e-4, gt=0)
    batch_size: int = Field(default=256, ge=1)
    stage: TrainingStage = TrainingStage.PRETRAIN
    epochs: int = Field(default=20, ge=1)
    steps_per_epoch: int = Field(default=50, ge=1)
    seed: int = 0
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    grad_chunks: int = Field(default=1, ge=1, description="Число частей батча для параллельного градиента")
    workers: int = Field(default=1, ge=1)


# ========== ПЛАНИРОВЩИК ==========
class PlannerConfig(_Section):
    """Параметры state lattice планировщика"""
    robot_radius: float = Field(default=0.3, gt=0, description="r_r (м)")
    collision_penalty: float = Field(default=1000.0, ge=0, description="C_ob")
    steps: int = Field(default=8, gt=0)
    dt: float = Field(default=0.333, gt=0)
    success_radius: float = Field(default=0.2, gt=0)


# ========== КАМЕРА И РАЗМЕТКА ==========
class CameraConfig(_Section):
    """Камера робота"""
    intrinsics: CameraIntrinsics = Field(default_factory=CameraIntrinsics)
    mount_height: float = Field(default=0.5, gt=0, description="Высота камеры над полом (м)")
    planar_convention: PlanarConvention = PlanarConvention.OPTICAL
    max_depth: float = Field(default=12.0, gt=0)


class AnnotationConfig(_Section):
    """Параметры синтетической разметки"""
    sampling_fps: float = Field(default=2.0, gt=0)
    source_fps: float = Field(default=10.0, gt=0)
    duration_s: float = Field(default=10.0, gt=0)
    recordings: int = Field(default=1, ge=1)
    visibility_threshold: float = Field(default=0.5, ge=0, le=1)
    min_mask_pixels: int = Field(default=4, ge=1)
    noise_probability: float = Field(default=0.3, ge=0, le=1)
    implicit_probability: float = Field(default=0.3, ge=0, le=1)
    min_prompts: int = Field(default=1, ge=1)
    max_prompts: int = Field(default=8, ge=1)
    crop_height_range: Tuple[float, float] = (0.0, 1.0)
    crop_box_range: Tuple[int, int] = (8, 32)
    concurrency: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def validate_ranges(self) -> "AnnotationConfig":
        if self.min_prompts > self.max_prompts:
            raise ValueError("min_prompts > max_prompts")
        if self.crop_height_range[0] > self.crop_height_range[1]:
            raise ValueError("crop_height_range: минимум больше максимума")
        if self.crop_box_range[0] > self.crop_box_range[1]:
            raise ValueError("crop_box_range: минимум больше максимума")
        return self


class SimConfig(_Section):
    """Параметры симуляции эпизодов"""
    max_steps: int = Field(default=120, ge=1)
    success_radius: float = Field(default=0.2, gt=0)
    sensor_range: float = Field(default=6.0, gt=0)
    node_reach_radius: float = Field(default=0.3, gt=0)
    footprint_points: int = Field(default=16, ge=3)
    workers: int = Field(default=1, ge=1)


class AblationConfig(_Section):
    """Абляция по размеру датасета"""
    fractions: Tuple[float, ...] = (0.1, 0.25, 0.5, 1.0)
    seeds: Tuple[int, ...] = (0, 1, 2)
    held_out_fraction: float = Field(default=0.2, gt=0, lt=1)

    @model_validator(mode="after")
    def validate_fractions(self) -> "AblationConfig":
        for fraction in self.fractions:
            if not 0 < fraction <= 1:
                raise ValueError(f"доля {fraction} вне (0, 1]")
        return self


# ========== КОНФИГУРАЦИЯ ЗАПУСКА ==========
class PathsConfig(_Section):
    """Пути артефактов"""
    world: Optional[str] = None
    dataset: Optional[str] = None
    checkpoint: Optional[str] = None
    pretrain_checkpoint: Optional[str] = None
    suite: Optional[str] = None
    report: Optional[str] = None
    output_dir: str = "runs"


class RunConfig(_Section):
    """Полная конфигурация запуска (плоский key=value файл + переопределения)"""
    seed: int = 0
    paths: PathsConfig = Field(default_factory=PathsConfig)
    robot: TwistLimits = Field(default_factory=TwistLimits)
    camera: CameraConfig = Field(default_factory=CameraConfig)
    objective: ObjectiveConfig = Field(default_factory=ObjectiveConfig)
    policy: PolicyConfig = Field(default_factory=PolicyConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    annotation: AnnotationConfig = Field(default_factory=AnnotationConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)


# ========== ЧЕКПОИНТ ==========
class CheckpointFile(BaseModel):
    """Файл чекпоинта политики: веса, моменты Adam, счетчик шагов и конфигурация"""
    schema_name: str = Field(default="policy-checkpoint", alias="schema")
    schema_version: int = CHECKPOINT_SCHEMA_VERSION
    stage: TrainingStage
    step: int = Field(ge=0)
    horizon: int = Field(gt=0)
    policy: PolicyConfig
    limits: TwistLimits
    objective: ObjectiveConfig
    params: Dict[str, List]
    optimizer: Dict[str, Dict[str, List]] = Field(default_factory=dict, description="m и v по параметрам")
    config: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(populate_by_name=True)
