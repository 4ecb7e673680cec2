"""
Pydantic схемы мира, эпизодов, топологической памяти и отчетов
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.dataset import ObjectSpec
from app.schemas.models import Pose2
from app.utils.config import REPORT_SCHEMA_VERSION, SUITE_SCHEMA_VERSION, WORLD_SCHEMA_VERSION


# ========== МИР ==========
class Waypoint(BaseModel):
    """Точка сценария движения объекта"""
    t: float = Field(ge=0)
    x: float
    y: float

    model_config = ConfigDict(frozen=True)


class Arena(BaseModel):
    """Границы арены (м)"""
    x_min: float = -5.0
    x_max: float = 5.0
    y_min: float = -5.0
    y_max: float = 5.0

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_bounds(self) -> "Arena":
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("пустая арена")
        return self

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


class World(BaseModel):
    """Статические препятствия, объекты и сценарии динамических объектов"""
    arena: Arena = Field(default_factory=Arena)
    objects: List[ObjectSpec] = Field(default_factory=list)
    obstacles: List[List[Tuple[float, float]]] = Field(default_factory=list)
    dynamic_scripts: Dict[str, List[Waypoint]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_world(self) -> "World":
        ids = [obj.id for obj in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("повторяющиеся id объектов")
        for obj in self.objects:
            if not self.arena.contains(obj.pose.x, obj.pose.y):
                raise ValueError(f"объект {obj.id} вне арены")
        for index, obstacle in enumerate(self.obstacles):
            for x, y in obstacle:
                if not self.arena.contains(x, y):
                    raise ValueError(f"препятствие {index} вне арены")
        for object_id, script in self.dynamic_scripts.items():
            if object_id not in ids:
                raise ValueError(f"сценарий для неизвестного объекта {object_id}")
            times = [waypoint.t for waypoint in script]
            if any(b < a for a, b in zip(times, times[1:])):
                raise ValueError(f"сценарий {object_id}: время не монотонно")
        return self

    def get_object(self, object_id: str) -> ObjectSpec:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


class Recording(BaseModel):
    """Записанный проход робота (последовательность поз)"""
    source_fps: float = Field(gt=0)
    poses: List[Pose2] = Field(min_length=1)

    @property
    def duration_s(self) -> float:
        return len(self.poses) / self.source_fps


class WorldFile(BaseModel):
    """Файл мира"""
    schema_version: int = WORLD_SCHEMA_VERSION
    world: World
    recordings: List[Recording] = Field(default_factory=list)


# ========== ЭПИЗОДЫ ==========
class ControllerKind(str, Enum):
    POLICY = "policy"
    PLANNER = "planner"


class EpisodeCategory(str, Enum):
    """Категории оценки"""
    SIMPLE = "simple"
    NOISY = "noisy"
    MULTI_OBJECT = "multi_object"
    DYNAMIC = "dynamic"


class Outcome(str, Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"


class Episode(BaseModel):
    """Эпизод оценки"""
    episode_id: str
    world: World
    start: Pose2 = Field(default_factory=Pose2)
    instruction: str = Field(min_length=1)
    target_id: str
    controller: ControllerKind = ControllerKind.POLICY
    max_steps: int = Field(default=120, ge=1)
    success_radius: float = Field(default=0.2, gt=0)
    category: EpisodeCategory = EpisodeCategory.SIMPLE
    with_obstacles: bool = False

    @model_validator(mode="after")
    def validate_target(self) -> "Episode":
        if self.target_id not in {obj.id for obj in self.world.objects}:
            raise ValueError(f"целевой объект {self.target_id} отсутствует в мире")
        return self


class TrajectorySample(BaseModel):
    """Строка дампа траектории"""
    t: float
    x: float
    y: float
    theta: float
    v: float
    omega: float


class EpisodeResult(BaseModel):
    """Траектория и исход эпизода"""
    episode_id: str
    outcome: Outcome
    steps: int
    final_distance: float
    collided: bool
    trajectory: List[TrajectorySample] = Field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.outcome == Outcome.SUCCESS


# ========== ТОПОЛОГИЧЕСКАЯ ПАМЯТЬ ==========
class NodeObject(BaseModel):
    """Объект, видимый из узла памяти"""
    label: str
    embedding: List[float]
    visibility: float = Field(ge=0, le=1)


class TopoNode(BaseModel):
    """Узел топологической памяти"""
    pose: Pose2
    objects: List[NodeObject] = Field(default_factory=list)


class TopoMemory(BaseModel):
    """Упорядоченная последовательность узлов"""
    nodes: List[TopoNode] = Field(min_length=1)


class LongDistanceResult(BaseModel):
    """Исход навигации на большую дистанцию"""
    selected_node: int
    switch_step: Optional[int]
    switch_events: int
    result: EpisodeResult


# ========== ОТЧЕТЫ ==========
class EpisodeRecord(BaseModel):
    """Запись эпизода в отчете"""
    episode_id: str
    category: EpisodeCategory
    with_obstacles: bool = False
    controller: str
    outcome: Outcome
    steps: int
    final_distance: float


class EvalReport(BaseModel):
    """Отчет оценки по категориям"""
    schema_version: int = REPORT_SCHEMA_VERSION
    per_category: Dict[EpisodeCategory, Optional[float]]
    total: float = Field(ge=0, le=1)
    collision_rate: float = Field(ge=0, le=1)
    obstacle_arrival: Dict[str, float] = Field(default_factory=dict)
    obstacle_collision: Dict[str, float] = Field(default_factory=dict)
    episodes: List[EpisodeRecord] = Field(default_factory=list)
    config: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("per_category")
    @classmethod
    def validate_rates(cls, v: Dict[EpisodeCategory, Optional[float]]) -> Dict[EpisodeCategory, Optional[float]]:
        for category, rate in v.items():
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ValueError(f"доля {category.value} вне [0, 1]")
        return v

    @model_validator(mode="after")
    def validate_total(self) -> "EvalReport":
        main = [record for record in self.episodes if not record.with_obstacles]
        if main:
            expected = sum(record.outcome == Outcome.SUCCESS for record in main) / len(main)
            if abs(expected - self.total) > 1e-9:
                raise ValueError("total не согласован с записями эпизодов")
        return self


class PlanTraceEntry(BaseModel):
    """Строка трассы планировщика"""
    step: int
    primitive_index: int
    costs: List[float]
    pose: Pose2


class SuiteHeader(BaseModel):
    """Первая строка файла набора эпизодов"""
    schema_name: str = Field(default="episode-suite", alias="schema")
    schema_version: int = SUITE_SCHEMA_VERSION
    episodes: int = Field(ge=0)
    config: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(populate_by_name=True)
