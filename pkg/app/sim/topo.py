"""
Топологическая память и навигация на большую дистанцию

Узел выбирается по сходству инструкции с объектами, видимыми из узла.
Близость к узлу оценивается евклидовым расстоянием.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.annotation.pipeline import world_obstacle_points
from app.annotation.renderer import render_frame
from app.planning.lattice import StateLatticePlanner
from app.schemas.config import CameraConfig, PlannerConfig, SimConfig
from app.schemas.models import Pose2
from app.schemas.world import (
    Episode,
    EpisodeResult,
    LongDistanceResult,
    NodeObject,
    Outcome,
    TopoMemory,
    TopoNode,
    TrajectorySample,
    World,
)
from app.sim.controllers import Controller
from app.sim.episode import EpisodeRunner, target_distance
from app.sim.world import WorldState, step_world
from app.training.encoder import DEFAULT_DIM, InstructionEmbedding, cosine, encode_instruction, encode_text
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


# ========== ПАМЯТЬ ==========
def build_memory(world: World, poses: Sequence[Pose2], camera: Optional[CameraConfig] = None,
                 dim: int = DEFAULT_DIM, min_visibility: float = 0.0,
                 memory_range: Optional[float] = None) -> TopoMemory:
    """
    Память по позам прохода: объекты узла и их видимость из рендера

    memory_range ограничивает дальность детектора при записи памяти.
    """
    camera = camera or CameraConfig()
    nodes = []
    for pose in poses:
        rendered = render_frame(world, pose, camera)
        objects = []
        for object_id in rendered.object_ids:
            visibility = min(1.0, rendered.visibility[object_id])
            obj = world.get_object(object_id)
            if visibility <= min_visibility:
                continue
            if memory_range is not None and math.hypot(obj.pose.x - pose.x, obj.pose.y - pose.y) > memory_range:
                continue
            label = obj.description
            objects.append(NodeObject(label=label, embedding=encode_text(label, dim).tolist(),
                                      visibility=visibility))
        nodes.append(TopoNode(pose=pose, objects=objects))
    return TopoMemory(nodes=nodes)


def score_nodes(memory: TopoMemory, instr: InstructionEmbedding) -> Tuple[List[float], int]:
    """
    Оценки узлов и номер лучшего

    Оценка узла -- максимум по объектам cos(инструкция, объект) * видимость,
    отрицательные значения обнуляются; узел без объектов получает 0.
    Поэтому узел, все объекты которого дают отрицательный косинус, равен
    пустому узлу. При равенстве выбирается меньший номер.
    """
    scores = []
    for node in memory.nodes:
        best = 0.0
        for obj in node.objects:
            best = max(best, cosine(instr.vec, np.asarray(obj.embedding, dtype=float)) * obj.visibility)
        scores.append(best)
    return scores, int(np.argmax(scores))


def memory_dim(memory: TopoMemory) -> int:
    """Размер эмбеддингов памяти (DEFAULT_DIM для памяти без объектов)"""
    for node in memory.nodes:
        if node.objects:
            return len(node.objects[0].embedding)
    return DEFAULT_DIM


def nearest_node(memory: TopoMemory, pose: Pose2) -> int:
    distances = [math.hypot(node.pose.x - pose.x, node.pose.y - pose.y) for node in memory.nodes]
    return int(np.argmin(distances))


# ========== НАВИГАЦИЯ ==========
class LongDistanceNavigator:
    """Следование по узлам памяти планировщиком и переключение на контроллер последней мили"""

    def __init__(self, camera: Optional[CameraConfig] = None, sim_cfg: Optional[SimConfig] = None,
                 planner_cfg: Optional[PlannerConfig] = None):
        self.sim_cfg = sim_cfg or SimConfig()
        self.planner = StateLatticePlanner(planner_cfg)
        self.runner = EpisodeRunner(camera, self.sim_cfg, self.planner.cfg.robot_radius, self.planner.cfg.dt)

    def navigate(self, ep: Episode, memory: TopoMemory, controller: Controller) -> LongDistanceResult:
        instr = encode_instruction(ep.instruction, memory_dim(memory))
        scores, selected = score_nodes(memory, instr)
        logger.info(
            "Выбран узел памяти",
            event="node_selected",
            episode_id=ep.episode_id,
            selected_node=selected,
            score=scores[selected],
        )

        state = WorldState(ep.world)
        pose = ep.start
        trajectory = [TrajectorySample(t=0.0, x=pose.x, y=pose.y, theta=pose.theta, v=0.0, omega=0.0)]
        cursor = 0
        for step in range(ep.max_steps):
            if target_distance(state, pose, ep.target_id) <= ep.success_radius:
                return self._finish(ep, selected, None, 0, Outcome.SUCCESS, step, state, pose, trajectory)
            if nearest_node(memory, pose) == selected:
                logger.policy_switched(selected, step, episode_id=ep.episode_id, controller=controller.name)
                result = self.runner.start(ep, state, pose, controller, ep.max_steps - step, step, trajectory)
                return LongDistanceResult(selected_node=selected, switch_step=step, switch_events=1, result=result)

            node = memory.nodes[cursor]
            if math.hypot(node.pose.x - pose.x, node.pose.y - pose.y) <= self.sim_cfg.node_reach_radius:
                cursor = min(cursor + 1, selected)
                node = memory.nodes[cursor]
            obstacles = world_obstacle_points(state.world, ep.target_id, self.sim_cfg.footprint_points,
                                              state.objects())
            twist = self.planner.plan_step(pose, (node.pose.x, node.pose.y), obstacles)
            state, pose, collided = step_world(state, pose, twist, self.planner.cfg.dt,
                                               self.planner.cfg.robot_radius, ep.target_id)
            trajectory.append(TrajectorySample(t=state.t, x=pose.x, y=pose.y, theta=pose.theta,
                                               v=twist.v, omega=twist.omega))
            if collided:
                return self._finish(ep, selected, None, 0, Outcome.COLLISION, step + 1, state, pose, trajectory)

        return self._finish(ep, selected, None, 0, Outcome.TIMEOUT, ep.max_steps, state, pose, trajectory)

    @staticmethod
    def _finish(ep: Episode, selected: int, switch_step: Optional[int], switch_events: int, outcome: Outcome,
                steps: int, state: WorldState, pose: Pose2,
                trajectory: List[TrajectorySample]) -> LongDistanceResult:
        final_distance = target_distance(state, pose, ep.target_id)
        if outcome == Outcome.TIMEOUT and final_distance <= ep.success_radius:
            outcome = Outcome.SUCCESS
        result = EpisodeResult(episode_id=ep.episode_id, outcome=outcome, steps=steps,
                               final_distance=final_distance, collided=outcome == Outcome.COLLISION,
                               trajectory=trajectory)
        logger.episode_finished(ep.episode_id, outcome.value, steps, final_distance=final_distance)
        return LongDistanceResult(selected_node=selected, switch_step=switch_step,
                                  switch_events=switch_events, result=result)


def long_distance_navigate(ep: Episode, memory: TopoMemory, controller: Controller,
                           camera: Optional[CameraConfig] = None, sim_cfg: Optional[SimConfig] = None,
                           planner_cfg: Optional[PlannerConfig] = None) -> LongDistanceResult:
    """Навигация к цели за пределами начальной видимости по топологической памяти"""
    return LongDistanceNavigator(camera, sim_cfg, planner_cfg).navigate(ep, memory, controller)
