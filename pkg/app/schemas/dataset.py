"""
Pydantic схемы размеченного датасета
"""
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing_extensions import Annotated
from pydantic import StringConstraints

from app.schemas.models import CropBox, Point3, Pose2
from app.utils.config import DATASET_SCHEMA_VERSION


# ========== ОБЪЕКТЫ СЦЕНЫ ==========
class ObjectSpec(BaseModel):
    """Объект сцены: вертикальный цилиндр с существительным и прилагательными"""
    id: Annotated[str, StringConstraints(min_length=1, max_length=64)]
    class_noun: Annotated[str, StringConstraints(min_length=1, strip_whitespace=True)]
    attributes: List[str] = Field(default_factory=list)
    pose: Point3 = Field(description="Центр объекта в мире (x, y, высота центра)")
    footprint_radius: float = Field(gt=0)
    height: float = Field(default=0.8, gt=0)

    model_config = ConfigDict(frozen=True)

    @property
    def description(self) -> str:
        """Текстовое описание: прилагательные + существительное"""
        return " ".join([*self.attributes, self.class_noun])


# ========== ПРОМПТЫ ==========
class PromptCategory(str, Enum):
    """Категория промпта"""
    SIMPLE = "simple"
    DESCRIPTIVE = "descriptive"
    NOISY = "noisy"
    IMPLICIT = "implicit"


class PromptLabel(BaseModel):
    """Инструкция вида 'go to X' и ее категория"""
    text: str
    category: PromptCategory

    model_config = ConfigDict(frozen=True)

    @field_validator("text")
    @classmethod
    def validate_text(cls, v: str) -> str:
        if not v.strip().lower().startswith("go to"):
            raise ValueError(f"промпт должен начинаться с 'go to': {v!r}")
        return v


# ========== НАБЛЮДЕНИЯ ==========
class Candidate(BaseModel):
    """Кандидат в кадре: позиция в системе робота и описание"""
    rel_x: float
    rel_y: float
    label: str

    model_config = ConfigDict(frozen=True)


class FrameObservation(BaseModel):
    """Наблюдение кадра без привязки к инструкции (текущий и предыдущий кадры)"""
    current: List[Candidate] = Field(default_factory=list)
    previous: List[Candidate] = Field(default_factory=list)


# ========== РАЗМЕЧЕННЫЕ КАДРЫ ==========
class AnnotatedObject(BaseModel):
    """Размеченный объект: поза на плоскости, промпты, траектория учителя"""
    object_id: str
    pose_x: float = Field(description="p~ вперед (м), система робота")
    pose_y: float = Field(description="p~ влево (м), система робота")
    prompts: List[PromptLabel] = Field(min_length=1)
    teacher: List[Pose2] = Field(min_length=1)
    goal_crop: Optional[CropBox] = None


class AnnotatedFrame(BaseModel):
    """Запись датасета: кадр, наблюдение и размеченные объекты"""
    frame_id: int = Field(ge=0)
    recording: int = Field(default=0, ge=0)
    timestamp: float = Field(ge=0)
    robot_pose: Pose2
    observation: FrameObservation
    objects: List[AnnotatedObject] = Field(default_factory=list)

    @field_validator("objects")
    @classmethod
    def validate_teacher_lengths(cls, v: List[AnnotatedObject]) -> List[AnnotatedObject]:
        lengths = {len(obj.teacher) for obj in v}
        if len(lengths) > 1:
            raise ValueError(f"разная длина траекторий учителя в кадре: {sorted(lengths)}")
        return v


class DatasetHeader(BaseModel):
    """Первая строка файла датасета"""
    schema_name: str = Field(default="annotated-frame", alias="schema")
    schema_version: int = DATASET_SCHEMA_VERSION
    teacher_horizon: int = Field(gt=0)
    config: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(populate_by_name=True)
