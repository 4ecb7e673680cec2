"""
Выполнение эпизода: наблюдение -> контроллер -> первая команда -> шаг мира
"""
import math
from typing import List, Optional

from app.schemas.config import CameraConfig, SimConfig
from app.schemas.models import Pose2, Twist
from app.schemas.world import Episode, EpisodeResult, Outcome, TrajectorySample
from app.sim.controllers import Controller
from app.sim.observation import visible_objects
from app.sim.world import WorldState, step_world
from app.training.encoder import encode_instruction
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


def target_distance(state: WorldState, pose: Pose2, target_id: str) -> float:
    x, y = state.position(target_id)
    return math.hypot(pose.x - x, pose.y - y)


def _sample(t: float, pose: Pose2, twist: Twist) -> TrajectorySample:
    return TrajectorySample(t=t, x=pose.x, y=pose.y, theta=pose.theta, v=twist.v, omega=twist.omega)


class EpisodeRunner:
    """
    Замкнутый контур эпизода

    Успех проверяется перед каждым шагом и после последнего относительно
    текущей позиции цели; столкновение -- после шага.
    """

    def __init__(self, camera: Optional[CameraConfig] = None, sim_cfg: Optional[SimConfig] = None,
                 robot_radius: float = 0.3, dt: float = 0.333):
        self.camera = camera or CameraConfig()
        self.sim_cfg = sim_cfg or SimConfig()
        self.robot_radius = robot_radius
        self.dt = dt

    def start(self, ep: Episode, state: WorldState, pose: Pose2, controller: Controller,
              max_steps: Optional[int] = None, step_offset: int = 0,
              trajectory: Optional[List[TrajectorySample]] = None) -> EpisodeResult:
        """Цикл с заданного состояния; используется и для добора последней мили"""
        instr = encode_instruction(ep.instruction, controller.embedding_dim)
        max_steps = ep.max_steps if max_steps is None else max_steps
        trajectory = trajectory if trajectory is not None else [_sample(state.t, pose, Twist())]
        previous = []
        outcome = Outcome.TIMEOUT
        steps = 0

        for _ in range(max_steps):
            if target_distance(state, pose, ep.target_id) <= ep.success_radius:
                outcome = Outcome.SUCCESS
                break
            visible = visible_objects(state, pose, self.camera.intrinsics, self.sim_cfg.sensor_range)
            twist = controller.act(state, pose, visible, previous, instr)
            previous = [item.candidate for item in visible]
            state, pose, collided = step_world(state, pose, twist, self.dt, self.robot_radius, ep.target_id)
            steps += 1
            trajectory.append(_sample(state.t, pose, twist))
            if collided:
                outcome = Outcome.COLLISION
                break
        else:
            if target_distance(state, pose, ep.target_id) <= ep.success_radius:
                outcome = Outcome.SUCCESS

        final_distance = target_distance(state, pose, ep.target_id)
        result = EpisodeResult(
            episode_id=ep.episode_id,
            outcome=outcome,
            steps=step_offset + steps,
            final_distance=final_distance,
            collided=outcome == Outcome.COLLISION,
            trajectory=trajectory,
        )
        logger.episode_finished(ep.episode_id, outcome.value, result.steps,
                                controller=controller.name, final_distance=final_distance)
        return result

    def run(self, ep: Episode, controller: Controller) -> EpisodeResult:
        return self.start(ep, WorldState(ep.world), ep.start, controller)


def run_episode(ep: Episode, controller: Controller, camera: Optional[CameraConfig] = None,
                sim_cfg: Optional[SimConfig] = None, robot_radius: float = 0.3, dt: float = 0.333) -> EpisodeResult:
    """Траектория и исход эпизода (success / collision / timeout)"""
    return EpisodeRunner(camera, sim_cfg, robot_radius, dt).run(ep, controller)
