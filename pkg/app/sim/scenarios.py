"""
Демонстрационные миры и наборы эпизодов оценки
"""
import math
from collections import Counter
from typing import List, Optional, Tuple

import numpy as np

from app.annotation.prompts import generate_prompts
from app.schemas.config import AnnotationConfig
from app.schemas.dataset import ObjectSpec, PromptCategory
from app.schemas.models import Point3, Pose2
from app.schemas.world import (
    Arena,
    ControllerKind,
    Episode,
    EpisodeCategory,
    TopoMemory,
    Waypoint,
    World,
)
from app.sim.topo import build_memory
from app.sim.world import WorldState, in_collision
from app.utils.errors import LabError
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

# (id, существительное, прилагательные, x, y, радиус, высота)
_DEMO_OBJECTS = (
    ("chair-white", "chair", ("white",), 2.0, 1.0, 0.25, 0.8),
    ("chair-black", "chair", ("black",), 2.0, -1.5, 0.25, 0.8),
    ("desk", "desk", ("wooden",), -2.5, 2.5, 0.4, 0.8),
    ("plant", "plant", ("green", "tall"), -2.0, -2.5, 0.2, 1.0),
    ("lamp", "lamp", ("yellow",), 3.5, 3.5, 0.15, 0.8),
    ("bin", "bin", ("blue", "metal"), 0.0, 3.5, 0.2, 0.6),
    ("sofa", "sofa", ("red",), -3.5, 0.0, 0.45, 0.8),
)

# Стенки: отрезки (x0, y0) -> (x1, y1)
_DEMO_WALLS = (
    ((0.5, -4.0), (0.5, -2.8)),
    ((-1.0, 0.8), (-1.0, 1.8)),
)

_POINT_SPACING = 0.1
_START_MARGIN = 0.5


def wall_points(start: Tuple[float, float], end: Tuple[float, float],
                spacing: float = _POINT_SPACING) -> List[Tuple[float, float]]:
    """Точки отрезка с шагом не больше spacing (концы включены)"""
    length = math.hypot(end[0] - start[0], end[1] - start[1])
    count = max(2, int(math.ceil(length / spacing)) + 1)
    return [(float(x), float(y)) for x, y in zip(np.linspace(start[0], end[0], count),
                                                  np.linspace(start[1], end[1], count))]


def build_demo_world(seed: int = 0, jitter: float = 0.15) -> World:
    """Комната 10x10 м: семь объектов (два стула разного цвета) и две стенки"""
    rng = np.random.default_rng(seed)
    objects = []
    for object_id, noun, attributes, x, y, radius, height in _DEMO_OBJECTS:
        dx, dy = rng.uniform(-jitter, jitter, size=2)
        objects.append(ObjectSpec(
            id=object_id,
            class_noun=noun,
            attributes=list(attributes),
            pose=Point3(x=x + float(dx), y=y + float(dy), z=height / 2.0),
            footprint_radius=radius,
            height=height,
        ))
    return World(objects=objects, obstacles=[wall_points(a, b) for a, b in _DEMO_WALLS])


# ========== НАБОР ЭПИЗОДОВ ==========
def sample_start(world: World, target: ObjectSpec, rng: np.random.Generator,
                 distance_range: Tuple[float, float] = (1.5, 3.0), heading_noise: float = 0.2,
                 robot_radius: float = 0.3, attempts: int = 200) -> Pose2:
    """Стартовая поза лицом к цели на заданном расстоянии, без столкновений"""
    arena = world.arena
    state = WorldState(world)
    for _ in range(attempts):
        distance = float(rng.uniform(*distance_range))
        bearing = float(rng.uniform(-math.pi, math.pi))
        x = target.pose.x - distance * math.cos(bearing)
        y = target.pose.y - distance * math.sin(bearing)
        theta = bearing + float(rng.uniform(-heading_noise, heading_noise))
        if not (arena.x_min + _START_MARGIN <= x <= arena.x_max - _START_MARGIN
                and arena.y_min + _START_MARGIN <= y <= arena.y_max - _START_MARGIN):
            continue
        pose = Pose2(x=x, y=y, theta=theta)
        if in_collision(state, pose, robot_radius + 0.2, target.id):
            continue
        return pose
    raise LabError(f"не удалось выбрать старт для {target.id}")


def _noisy_instruction(target: ObjectSpec, rng: np.random.Generator) -> str:
    cfg = AnnotationConfig(noise_probability=1.0, implicit_probability=0.0)
    for prompt in generate_prompts(target, [], rng, cfg):
        if prompt.category == PromptCategory.NOISY:
            return prompt.text
    return f"go to the {target.class_noun}"


def _moving_script(world: World, target: ObjectSpec, rng: np.random.Generator,
                   start_t: float = 2.0, end_t: float = 6.0, shift: float = 0.8) -> List[Waypoint]:
    """Цель стоит start_t секунд, затем смещается на shift метров"""
    arena = world.arena
    angle = float(rng.uniform(-math.pi, math.pi))
    x = float(np.clip(target.pose.x + shift * math.cos(angle), arena.x_min + _START_MARGIN,
                      arena.x_max - _START_MARGIN))
    y = float(np.clip(target.pose.y + shift * math.sin(angle), arena.y_min + _START_MARGIN,
                      arena.y_max - _START_MARGIN))
    return [
        Waypoint(t=0.0, x=target.pose.x, y=target.pose.y),
        Waypoint(t=start_t, x=target.pose.x, y=target.pose.y),
        Waypoint(t=end_t, x=x, y=y),
    ]


def _blocking_objects(world: World, start: Pose2, target: ObjectSpec, index: int,
                      offset: float = 0.25, radius: float = 0.2) -> List[ObjectSpec]:
    """
    Две коробки поперек прямой старт-цель посередине

    Коробки -- обычные объекты мира: они попадают в наблюдение как кандидаты
    и в препятствия планировщика-учителя.
    """
    arena = world.arena
    mx, my = (start.x + target.pose.x) / 2.0, (start.y + target.pose.y) / 2.0
    heading = math.atan2(target.pose.y - start.y, target.pose.x - start.x)
    nx, ny = -math.sin(heading), math.cos(heading)
    boxes = []
    for k, side in enumerate((-1.0, 1.0)):
        x = float(np.clip(mx + side * offset * nx, arena.x_min, arena.x_max))
        y = float(np.clip(my + side * offset * ny, arena.y_min, arena.y_max))
        boxes.append(ObjectSpec(
            id=f"blocker-{index:03d}-{k}",
            class_noun="box",
            attributes=["brown"],
            pose=Point3(x=x, y=y, z=0.25),
            footprint_radius=radius,
            height=0.5,
        ))
    return boxes


def build_suite(world: World, rng: np.random.Generator, per_category: int = 5, obstacle_episodes: int = 5,
                max_steps: int = 120, controller: ControllerKind = ControllerKind.POLICY,
                robot_radius: float = 0.3) -> List[Episode]:
    """
    Набор эпизодов четырех категорий и поднабор с препятствиями

    simple -- цель с уникальным существительным и инструкция 'go to the <noun>';
    noisy -- инструкция с обманным прилагательным; multi_object -- цель среди
    объектов с тем же существительным, инструкция с прилагательными;
    dynamic -- цель смещается после старта.
    """
    nouns = Counter(obj.class_noun for obj in world.objects)
    unique = [obj for obj in world.objects if nouns[obj.class_noun] == 1]
    shared = [obj for obj in world.objects if nouns[obj.class_noun] > 1 and obj.attributes]
    if not unique:
        raise LabError("в мире нет объектов с уникальным существительным")

    episodes: List[Episode] = []

    def add(category: EpisodeCategory, index: int, target: ObjectSpec, instruction: str,
            episode_world: World, start: Optional[Pose2] = None, with_obstacles: bool = False) -> None:
        prefix = "obstacle" if with_obstacles else category.value
        episodes.append(Episode(
            episode_id=f"{prefix}-{index:03d}",
            world=episode_world,
            start=start or sample_start(world, target, rng, robot_radius=robot_radius),
            instruction=instruction,
            target_id=target.id,
            controller=controller,
            max_steps=max_steps,
            category=category,
            with_obstacles=with_obstacles,
        ))

    for i in range(per_category):
        target = unique[int(rng.integers(len(unique)))]
        add(EpisodeCategory.SIMPLE, i, target, f"go to the {target.class_noun}", world)
    for i in range(per_category):
        target = unique[int(rng.integers(len(unique)))]
        add(EpisodeCategory.NOISY, i, target, _noisy_instruction(target, rng), world)
    for i in range(per_category if shared else 0):
        target = shared[int(rng.integers(len(shared)))]
        add(EpisodeCategory.MULTI_OBJECT, i, target,
            f"go to the {' '.join([*target.attributes, target.class_noun])}", world)
    for i in range(per_category):
        target = unique[int(rng.integers(len(unique)))]
        scripts = {**world.dynamic_scripts, target.id: _moving_script(world, target, rng)}
        add(EpisodeCategory.DYNAMIC, i, target, f"go to the {target.class_noun}",
            world.model_copy(update={"dynamic_scripts": scripts}))
    for i in range(obstacle_episodes):
        target = unique[int(rng.integers(len(unique)))]
        start = sample_start(world, target, rng, robot_radius=robot_radius)
        blocked = world.model_copy(update={"objects": [*world.objects, *_blocking_objects(world, start, target, i)]})
        add(EpisodeCategory.SIMPLE, i, target, f"go to the {target.class_noun}", blocked, start, True)

    logger.info(
        "Набор эпизодов построен",
        event="suite_built",
        episodes=len(episodes),
        per_category=per_category,
        obstacle_episodes=obstacle_episodes,
        controller=controller.value,
    )
    return episodes


# ========== КОРИДОР ДЛЯ ДАЛЬНЕЙ НАВИГАЦИИ ==========
def build_memory_corridor(node_spacing: float = 1.5, nodes: int = 7, memory_range: float = 3.0,
                          max_steps: int = 150,
                          controller: ControllerKind = ControllerKind.PLANNER) -> Tuple[World, TopoMemory, Episode]:
    """
    Коридор вдоль оси x: узлы памяти от (-4.5, 0) с шагом node_spacing

    Цель (красный диван) стоит за последним узлом и не видна со старта;
    по пути стоят отвлекающие объекты.
    """
    x0 = -4.5
    target_x = x0 + node_spacing * nodes
    world = World(
        arena=Arena(x_min=-5.0, x_max=max(5.0, target_x + 1.0), y_min=-3.0, y_max=3.0),
        objects=[
            ObjectSpec(id="sofa", class_noun="sofa", attributes=["red"], pose=Point3(x=target_x, y=0.0, z=0.4),
                       footprint_radius=0.2),
            ObjectSpec(id="bin", class_noun="bin", attributes=["blue"], pose=Point3(x=-3.0, y=1.5, z=0.3),
                       footprint_radius=0.2, height=0.6),
            ObjectSpec(id="plant", class_noun="plant", attributes=["green"], pose=Point3(x=0.0, y=-1.5, z=0.5),
                       footprint_radius=0.2, height=1.0),
        ],
    )
    poses = [Pose2(x=x0 + node_spacing * i, y=0.0, theta=0.0) for i in range(nodes)]
    memory = build_memory(world, poses, memory_range=memory_range)
    episode = Episode(
        episode_id="corridor-000",
        world=world,
        start=poses[0],
        instruction="go to the red sofa",
        target_id="sofa",
        controller=controller,
        max_steps=max_steps,
    )
    return world, memory, episode
