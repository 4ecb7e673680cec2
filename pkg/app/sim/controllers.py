"""
Контроллеры эпизода: обученная политика и планировщик с выбором цели по описанию
"""
from typing import Optional, Protocol, Sequence

from app.annotation.pipeline import world_obstacle_points
from app.planning.lattice import StateLatticePlanner
from app.schemas.config import PlannerConfig
from app.schemas.dataset import Candidate, FrameObservation
from app.schemas.models import Pose2, Twist
from app.sim.observation import VisibleObject
from app.sim.world import WorldState
from app.training.encoder import DEFAULT_DIM, InstructionEmbedding, encode_text
from app.training.features import featurize
from app.training.network import PolicyParams, policy_forward


class Controller(Protocol):
    """Одна команда на шаг по текущему наблюдению"""
    name: str
    embedding_dim: int

    def act(self, state: WorldState, pose: Pose2, visible: Sequence[VisibleObject],
            previous: Sequence[Candidate], instr: InstructionEmbedding) -> Twist: ...


class PolicyController:
    """Обученная политика: выполняется первая команда из N"""

    def __init__(self, params: PolicyParams, dt: float = 0.333, name: str = "policy"):
        self.params = params
        self.dt = dt
        self.name = name

    @property
    def embedding_dim(self) -> int:
        return self.params.config.embedding_dim

    def act(self, state: WorldState, pose: Pose2, visible: Sequence[VisibleObject],
            previous: Sequence[Candidate], instr: InstructionEmbedding) -> Twist:
        observation = FrameObservation(current=[item.candidate for item in visible], previous=list(previous))
        feature = featurize(observation, instr, self.params.config)
        return policy_forward(self.params, feature, instr, self.dt).commands[0]


def select_goal(visible: Sequence[VisibleObject], instr: InstructionEmbedding) -> Optional[VisibleObject]:
    """Видимый объект с наибольшим сходством описания; при равенстве ближайший"""
    best, best_key = None, None
    for item in visible:
        sim = float(encode_text(item.candidate.label, instr.dim) @ instr.vec)
        key = (-sim, item.candidate.rel_x ** 2 + item.candidate.rel_y ** 2)
        if best_key is None or key < best_key:
            best, best_key = item, key
    return best


class PlannerController:
    """
    Детектор + планировщик

    Цель -- видимый объект, ближайший к инструкции по описанию; препятствия --
    точки мира и основания остальных объектов. Если ничего не видно, робот стоит.
    """

    def __init__(self, cfg: Optional[PlannerConfig] = None, footprint_points: int = 16, name: str = "planner",
                 embedding_dim: int = DEFAULT_DIM):
        self.planner = StateLatticePlanner(cfg)
        self.footprint_points = footprint_points
        self.name = name
        self.embedding_dim = embedding_dim

    def act(self, state: WorldState, pose: Pose2, visible: Sequence[VisibleObject],
            previous: Sequence[Candidate], instr: InstructionEmbedding) -> Twist:
        goal = select_goal(visible, instr)
        if goal is None:
            return Twist()
        obstacles = world_obstacle_points(state.world, goal.object_id, self.footprint_points, state.objects())
        return self.planner.plan_step(pose, state.position(goal.object_id), obstacles)
