"""
Тесты симуляции: мир, наблюдения, контроллеры, эпизоды, топологическая память и оценка
"""
import math

import numpy as np
import pytest

from app.schemas.config import PolicyConfig, SimConfig
from app.schemas.dataset import Candidate, ObjectSpec
from app.schemas.models import CameraIntrinsics, Point3, Pose2, Twist, TwistLimits
from app.schemas.world import (
    ControllerKind,
    Episode,
    EpisodeCategory,
    EpisodeRecord,
    NodeObject,
    Outcome,
    TopoMemory,
    TopoNode,
    Waypoint,
    World,
)
from app.sim.controllers import PlannerController, PolicyController, select_goal
from app.sim.episode import run_episode, target_distance
from app.sim.evaluation import Evaluator, aggregate
from app.sim.observation import VisibleObject, observe, visible_objects
from app.sim.scenarios import build_demo_world, build_memory_corridor, build_suite, sample_start, wall_points
from app.sim.topo import build_memory, long_distance_navigate, memory_dim, nearest_node, score_nodes
from app.sim.world import WorldState, in_collision, script_position, step_world
from app.training.encoder import DEFAULT_DIM, encode_instruction, encode_text
from app.training.network import PolicyParams
from app.utils.errors import ConfigError, LabError


class ConstantController:
    """Контроллер с постоянной командой"""
    name = "constant"
    embedding_dim = 8

    def __init__(self, twist: Twist):
        self.twist = twist

    def act(self, state, pose, visible, previous, instr):
        return self.twist


def make_episode(world, start=None, target_id="chair", instruction="go to the white chair", max_steps=40,
                 episode_id="ep-000", **update):
    return Episode(episode_id=episode_id, world=world, start=start or Pose2(), instruction=instruction,
                   target_id=target_id, max_steps=max_steps, **update)


def obj(object_id, x, y, noun="chair", attributes=("white",), radius=0.25):
    return ObjectSpec(id=object_id, class_noun=noun, attributes=list(attributes),
                      pose=Point3(x=x, y=y, z=0.4), footprint_radius=radius)


# ========== МИР ==========
class TestScripts:
    """Тесты сценариев движения объектов"""

    SCRIPT = [Waypoint(t=0.0, x=0.0, y=0.0), Waypoint(t=2.0, x=2.0, y=0.0), Waypoint(t=4.0, x=2.0, y=2.0)]

    @pytest.mark.parametrize("t,expected", [
        (-1.0, (0.0, 0.0)),
        (0.0, (0.0, 0.0)),
        (1.0, (1.0, 0.0)),
        (3.0, (2.0, 1.0)),
        (4.0, (2.0, 2.0)),
        (10.0, (2.0, 2.0)),
    ])
    def test_interpolation_and_clamping(self, t, expected):
        assert script_position(self.SCRIPT, t) == pytest.approx(expected)

    def test_instant_jump(self):
        """Равные времена -- мгновенный переход"""
        script = [Waypoint(t=0.0, x=0.0, y=0.0), Waypoint(t=1.0, x=1.0, y=0.0), Waypoint(t=1.0, x=1.0, y=5.0)]
        assert script_position(script, 0.5) == pytest.approx((0.5, 0.0))
        assert script_position(script, 1.0) == pytest.approx((1.0, 5.0))

    def test_empty_script(self):
        with pytest.raises(ValueError):
            script_position([], 0.0)


class TestWorldValidation:
    """Тесты проверок мира"""

    def test_duplicate_ids(self):
        with pytest.raises(ValueError):
            World(objects=[obj("a", 1.0, 0.0), obj("a", 2.0, 0.0)])

    def test_object_outside_arena(self):
        with pytest.raises(ValueError):
            World(objects=[obj("a", 7.0, 0.0)])

    def test_unknown_script(self):
        with pytest.raises(ValueError):
            World(objects=[obj("a", 1.0, 0.0)], dynamic_scripts={"b": [Waypoint(t=0.0, x=0.0, y=0.0)]})

    def test_non_monotone_script(self):
        script = [Waypoint(t=2.0, x=0.0, y=0.0), Waypoint(t=1.0, x=1.0, y=0.0)]
        with pytest.raises(ValueError):
            World(objects=[obj("a", 1.0, 0.0)], dynamic_scripts={"a": script})

    def test_get_object(self, simple_world):
        assert simple_world.get_object("sofa").class_noun == "sofa"
        with pytest.raises(KeyError):
            simple_world.get_object("lamp")


class TestWorldState:
    """Тесты состояния мира во времени"""

    def test_static_positions(self, simple_world):
        state = WorldState(simple_world)
        assert state.position("chair") == (2.0, 0.0)
        assert state.obstacle_points.shape == (0, 2)

    def test_advance_moves_scripted_object(self, simple_world):
        """Сдвиг по сценарию не меняет исходное состояние"""
        world = simple_world.model_copy(update={"dynamic_scripts": {
            "chair": [Waypoint(t=0.0, x=2.0, y=0.0), Waypoint(t=2.0, x=2.0, y=2.0)],
        }})
        state = WorldState(world)
        later = state.advance(1.0)
        assert later.t == pytest.approx(1.0)
        assert later.position("chair") == pytest.approx((2.0, 1.0))
        assert state.position("chair") == pytest.approx((2.0, 0.0))

        moved = {item.id: item for item in later.objects()}
        assert moved["chair"].pose.y == pytest.approx(1.0)
        assert moved["sofa"] is world.objects[1]

    def test_step_world(self, simple_world):
        state, pose, collided = step_world(WorldState(simple_world), Pose2(), Twist(v=0.5), 0.333)
        assert pose.x == pytest.approx(0.1665)
        assert state.t == pytest.approx(0.333)
        assert not collided


class TestCollision:
    """Тесты проверки столкновений"""

    def test_target_excluded(self, simple_world):
        """Цель не считается препятствием"""
        state = WorldState(simple_world)
        pose = Pose2(x=1.6)
        assert in_collision(state, pose, 0.3)
        assert not in_collision(state, pose, 0.3, target_id="chair")

    def test_footprint_boundary(self, simple_world):
        """Порог r_r + радиус основания"""
        state = WorldState(simple_world)
        assert not in_collision(state, Pose2(x=1.4), 0.3)
        assert in_collision(state, Pose2(x=1.5), 0.3)

    def test_obstacle_points(self):
        world = World(obstacles=[[(1.0, 0.0)]])
        state = WorldState(world)
        assert in_collision(state, Pose2(x=0.75), 0.3)
        assert not in_collision(state, Pose2(x=0.65), 0.3)

    def test_larger_radius_keeps_collision(self):
        """Столкновение при меньшем r_r сохраняется при большем"""
        rng = np.random.default_rng(31)
        hits = 0
        for _ in range(200):
            objects = [obj(f"o{k}", *rng.uniform(-2, 2, size=2), radius=float(rng.uniform(0.1, 0.5)))
                       for k in range(int(rng.integers(1, 5)))]
            world = World(objects=objects, obstacles=[[tuple(p) for p in rng.uniform(-2, 2, size=(3, 2))]])
            state = WorldState(world)
            pose = Pose2(x=rng.uniform(-2, 2), y=rng.uniform(-2, 2))
            small, large = sorted(rng.uniform(0.05, 0.8, size=2))
            if in_collision(state, pose, small):
                hits += 1
                assert in_collision(state, pose, large)
        assert hits > 0


# ========== НАБЛЮДЕНИЯ И КОНТРОЛЛЕРЫ ==========
class TestVisibleObjects:
    """Тесты пирамиды обзора"""

    def test_only_objects_ahead(self, simple_world):
        visible = visible_objects(WorldState(simple_world), Pose2(), CameraIntrinsics())
        assert [item.object_id for item in visible] == ["chair"]
        candidate = visible[0].candidate
        assert candidate.rel_x == pytest.approx(2.0)
        assert candidate.rel_y == pytest.approx(0.0)
        assert candidate.label == "white chair"
        assert visible[0].footprint_radius == 0.25

    def test_rotated_robot(self, simple_world):
        visible = visible_objects(WorldState(simple_world), Pose2(theta=math.pi / 2), CameraIntrinsics())
        assert [item.object_id for item in visible] == ["sofa"]
        assert visible[0].candidate.rel_x == pytest.approx(3.0)

    def test_sensor_range(self, simple_world):
        assert visible_objects(WorldState(simple_world), Pose2(), CameraIntrinsics(), sensor_range=1.5) == []

    def test_horizontal_fov(self):
        """Граница угла обзора: tan = cx / fx = 0.8"""
        world = World(objects=[obj("inside", 2.0, 1.5), obj("outside", 2.0, -1.7)])
        visible = visible_objects(WorldState(world), Pose2(), CameraIntrinsics())
        assert [item.object_id for item in visible] == ["inside"]

    def test_empty_world(self):
        assert visible_objects(WorldState(World()), Pose2(), CameraIntrinsics()) == []

    def test_observe_features(self, simple_world):
        """Признаки наблюдения имеют размер конфигурации"""
        cfg = PolicyConfig(slots=2, embedding_dim=8)
        feature = observe(WorldState(simple_world), Pose2(), CameraIntrinsics(),
                          encode_instruction("go to the white chair", 8), cfg)
        assert feature.slots == 2
        assert feature.current_valid.tolist() == [True, False]
        assert feature.as_vector(cfg.history).shape == (cfg.input_dim,)


class TestControllers:
    """Тесты контроллеров"""

    @staticmethod
    def visible(object_id, rel_x, label):
        return VisibleObject(object_id=object_id, candidate=Candidate(rel_x=rel_x, rel_y=0.0, label=label),
                             footprint_radius=0.25)

    def test_select_goal_by_description(self):
        items = [self.visible("a", 1.0, "white chair"), self.visible("b", 2.0, "red sofa")]
        goal = select_goal(items, encode_instruction("go to the red sofa"))
        assert goal.object_id == "b"

    def test_select_goal_tie_nearest(self):
        """Одинаковые описания -- ближайший объект"""
        items = [self.visible("far", 3.0, "red sofa"), self.visible("near", 1.0, "red sofa")]
        assert select_goal(items, encode_instruction("go to the red sofa")).object_id == "near"

    def test_select_goal_nothing_visible(self):
        assert select_goal([], encode_instruction("go to the red sofa")) is None

    def test_planner_stops_without_goal(self, simple_world):
        controller = PlannerController()
        twist = controller.act(WorldState(simple_world), Pose2(), [], [], encode_instruction("go to the sofa"))
        assert twist == Twist()

    def test_planner_drives_to_visible_goal(self, simple_world):
        state = WorldState(simple_world)
        visible = visible_objects(state, Pose2(), CameraIntrinsics())
        twist = PlannerController().act(state, Pose2(), visible, [], encode_instruction("go to the white chair"))
        assert twist == Twist(v=0.5, omega=0.0)

    def test_policy_controller_zero_weights(self, simple_world):
        """Нулевые веса -- середина диапазона скорости"""
        params = PolicyParams.zeros(PolicyConfig(), 8, TwistLimits())
        controller = PolicyController(params)
        state = WorldState(simple_world)
        visible = visible_objects(state, Pose2(), CameraIntrinsics())
        twist = controller.act(state, Pose2(), visible, [], encode_instruction("go to the white chair"))
        assert twist.v == pytest.approx(0.25)
        assert twist.omega == pytest.approx(0.0)
        assert controller.embedding_dim == PolicyConfig().embedding_dim


# ========== ЭПИЗОДЫ ==========
class TestEpisode:
    """Тесты замкнутого контура эпизода"""

    def test_planner_success(self, simple_world):
        result = run_episode(make_episode(simple_world), PlannerController())
        assert result.outcome == Outcome.SUCCESS
        assert result.success
        assert result.final_distance <= 0.2
        assert len(result.trajectory) == result.steps + 1

    def test_policy_success(self, simple_world):
        """Прямой ход 0.25 м/с доводит до стула за 22 шага"""
        params = PolicyParams.zeros(PolicyConfig(), 8, TwistLimits())
        result = run_episode(make_episode(simple_world), PolicyController(params))
        assert result.outcome == Outcome.SUCCESS
        assert result.steps == 22

    def test_timeout_when_nothing_visible(self, simple_world):
        ep = make_episode(simple_world, start=Pose2(theta=math.pi), max_steps=5)
        result = run_episode(ep, PlannerController())
        assert result.outcome == Outcome.TIMEOUT
        assert result.steps == 5
        assert len(result.trajectory) == 6
        assert result.final_distance == pytest.approx(2.0)

    def test_collision_stops_episode(self, simple_world):
        """Стенка на x = 1: столкновение на пятом шаге"""
        world = World(objects=simple_world.objects, obstacles=[wall_points((1.0, -0.5), (1.0, 0.5))])
        result = run_episode(make_episode(world), ConstantController(Twist(v=0.5)))
        assert result.outcome == Outcome.COLLISION
        assert result.collided
        assert result.steps == 5

    def test_start_within_success_radius(self, simple_world):
        result = run_episode(make_episode(simple_world, start=Pose2(x=1.9)), ConstantController(Twist(v=0.5)))
        assert result.outcome == Outcome.SUCCESS
        assert result.steps == 0

    def test_target_distance_follows_moving_target(self, simple_world):
        world = simple_world.model_copy(update={"dynamic_scripts": {
            "chair": [Waypoint(t=0.0, x=2.0, y=0.0), Waypoint(t=1.0, x=3.0, y=0.0)],
        }})
        state = WorldState(world).advance(1.0)
        assert target_distance(state, Pose2(), "chair") == pytest.approx(3.0)


# ========== ТОПОЛОГИЧЕСКАЯ ПАМЯТЬ ==========
def node(x, *objects):
    return TopoNode(pose=Pose2(x=x), objects=[
        NodeObject(label=label, embedding=encode_text(label, 16).tolist(), visibility=visibility)
        for label, visibility in objects
    ])


class TestTopoMemory:
    """Тесты памяти и выбора узла"""

    def test_score_nodes(self):
        memory = TopoMemory(nodes=[node(0.0), node(1.0, ("red sofa", 0.5)), node(2.0, ("red sofa", 1.0))])
        scores, selected = score_nodes(memory, encode_instruction("red sofa", 16))
        assert scores[0] == 0.0
        assert scores[1] == pytest.approx(0.5)
        assert scores[2] == pytest.approx(1.0)
        assert selected == 2

    def test_score_ties_lowest_index(self):
        memory = TopoMemory(nodes=[node(0.0, ("red sofa", 1.0)), node(1.0, ("red sofa", 1.0))])
        _, selected = score_nodes(memory, encode_instruction("red sofa", 16))
        assert selected == 0

    def test_negative_node_ties_empty(self):
        """Узел с отрицательным косинусом получает 0 и уступает пустому узлу с меньшим номером"""
        instr = encode_instruction("red sofa", 16)
        opposite = TopoNode(pose=Pose2(x=1.0), objects=[
            NodeObject(label="anti", embedding=(-instr.vec).tolist(), visibility=1.0)])
        scores, selected = score_nodes(TopoMemory(nodes=[node(0.0), opposite]), instr)
        assert scores == [0.0, 0.0]
        assert selected == 0

    @pytest.mark.parametrize("factor", [0.1, 0.5, 0.9])
    def test_scaled_visibility_keeps_selection(self, factor):
        """Умножение всех видимостей на положительную константу не меняет выбранный узел"""
        rng = np.random.default_rng(5)
        labels = ["red sofa", "blue bin", "green plant", "white chair", "brown box"]
        instr = encode_instruction("go to the red sofa", 16)
        for _ in range(50):
            nodes = [[(labels[int(rng.integers(len(labels)))], float(rng.uniform(0.05, 1.0)))
                      for _ in range(int(rng.integers(0, 4)))] for _ in range(6)]
            memory = TopoMemory(nodes=[node(float(i), *objects) for i, objects in enumerate(nodes)])
            scaled = TopoMemory(nodes=[node(float(i), *[(label, v * factor) for label, v in objects])
                                       for i, objects in enumerate(nodes)])
            assert score_nodes(scaled, instr)[1] == score_nodes(memory, instr)[1]

    def test_memory_dim(self):
        assert memory_dim(TopoMemory(nodes=[node(0.0), node(1.0, ("bin", 1.0))])) == 16
        assert memory_dim(TopoMemory(nodes=[node(0.0)])) == DEFAULT_DIM

    def test_nearest_node(self):
        memory = TopoMemory(nodes=[node(0.0), node(1.0), node(2.0)])
        assert nearest_node(memory, Pose2(x=1.4, y=0.3)) == 1
        assert nearest_node(memory, Pose2(x=-5.0)) == 0

    def test_build_memory(self, simple_world):
        """Объекты узла -- отрисованные из позы узла"""
        memory = build_memory(simple_world, [Pose2(), Pose2(theta=math.pi / 2)], dim=16)
        assert [o.label for o in memory.nodes[0].objects] == ["white chair"]
        assert [o.label for o in memory.nodes[1].objects] == ["red sofa"]
        assert memory.nodes[0].objects[0].visibility == pytest.approx(1.0)
        assert len(memory.nodes[0].objects[0].embedding) == 16

    def test_build_memory_range(self, simple_world):
        memory = build_memory(simple_world, [Pose2()], memory_range=1.0)
        assert memory.nodes[0].objects == []


class TestLongDistance:
    """Тесты навигации по памяти"""

    def test_corridor_switches_to_last_mile(self):
        """Выбирается первый узел, видящий диван; после переключения цель достигается"""
        _, memory, ep = build_memory_corridor()
        result = long_distance_navigate(ep, memory, PlannerController())
        assert result.selected_node == 5
        assert result.switch_step is not None
        assert result.switch_events == 1
        assert result.result.outcome == Outcome.SUCCESS

    def test_long_corridor_single_view(self):
        """Десять узлов, диван виден только из последнего: выбор, одно переключение, успех"""
        _, memory, ep = build_memory_corridor(nodes=10, memory_range=2.0, max_steps=250)
        seen = [i for i, n in enumerate(memory.nodes) if any(o.label == "red sofa" for o in n.objects)]
        assert seen == [9]
        result = long_distance_navigate(ep, memory, PlannerController())
        assert result.selected_node == 9
        assert result.switch_events == 1
        assert result.result.outcome == Outcome.SUCCESS

    def test_start_at_selected_node(self):
        """Старт у выбранного узла -- переключение на шаге 0"""
        _, memory, ep = build_memory_corridor()
        ep = ep.model_copy(update={"start": memory.nodes[5].pose})
        result = long_distance_navigate(ep, memory, PlannerController())
        assert result.switch_step == 0
        assert result.result.outcome == Outcome.SUCCESS


# ========== СЦЕНАРИИ ==========
class TestScenarios:
    """Тесты демонстрационного мира и набора эпизодов"""

    def test_wall_points(self):
        points = wall_points((0.0, 0.0), (1.0, 0.0))
        assert len(points) == 11
        assert points[0] == (0.0, 0.0)
        assert points[-1] == pytest.approx((1.0, 0.0))
        assert len(wall_points((1.0, 1.0), (1.0, 1.0))) == 2

    def test_demo_world(self):
        world = build_demo_world(seed=3)
        assert len(world.objects) == 7
        assert len(world.obstacles) == 2
        assert sum(o.class_noun == "chair" for o in world.objects) == 2
        assert world == build_demo_world(seed=3)
        assert world != build_demo_world(seed=4)

    def test_sample_start(self, rng):
        world = build_demo_world()
        target = world.get_object("lamp")
        start = sample_start(world, target, rng)
        distance = math.hypot(target.pose.x - start.x, target.pose.y - start.y)
        assert 1.5 <= distance <= 3.0
        bearing = math.atan2(target.pose.y - start.y, target.pose.x - start.x)
        assert abs(math.remainder(start.theta - bearing, 2 * math.pi)) <= 0.2 + 1e-9
        assert not in_collision(WorldState(world), start, 0.3, target.id)

    def test_sample_start_impossible(self, rng):
        world = build_demo_world()
        with pytest.raises(LabError):
            sample_start(world, world.get_object("lamp"), rng, distance_range=(20.0, 30.0), attempts=10)

    def test_build_suite(self, rng):
        world = build_demo_world()
        suite = build_suite(world, rng, per_category=2, obstacle_episodes=1)
        assert len(suite) == 9
        ids = [ep.episode_id for ep in suite]
        assert len(set(ids)) == len(ids)
        assert "simple-000" in ids and "obstacle-000" in ids

        by_category = {category: [ep for ep in suite if ep.category == category and not ep.with_obstacles]
                       for category in EpisodeCategory}
        assert all(len(episodes) == 2 for episodes in by_category.values())
        for ep in by_category[EpisodeCategory.MULTI_OBJECT]:
            assert ep.world.get_object(ep.target_id).class_noun == "chair"
            assert ep.instruction != "go to the chair"
        for ep in by_category[EpisodeCategory.DYNAMIC]:
            assert ep.target_id in ep.world.dynamic_scripts

        obstacle = [ep for ep in suite if ep.with_obstacles]
        assert len(obstacle) == 1
        assert len(obstacle[0].world.obstacles) == 2
        assert len(obstacle[0].world.objects) == 9

    def test_blockers_are_observable(self, rng):
        """Коробки поперек пути видны со старта и не задевают робота"""
        world = build_demo_world()
        for ep in build_suite(world, rng, per_category=0, obstacle_episodes=4):
            blockers = {obj.id for obj in ep.world.objects if obj.id.startswith("blocker-")}
            assert len(blockers) == 2
            state = WorldState(ep.world)
            seen = {item.object_id for item in visible_objects(state, ep.start, CameraIntrinsics())}
            assert blockers <= seen
            assert not in_collision(state, ep.start, 0.3, ep.target_id)
            labels = {item.candidate.label for item in visible_objects(state, ep.start, CameraIntrinsics())}
            assert "brown box" in labels

    def test_build_suite_needs_unique_noun(self, rng):
        world = World(objects=[obj("a", 1.0, 0.0), obj("b", -1.0, 0.0, attributes=("black",))])
        with pytest.raises(LabError):
            build_suite(world, rng)


# ========== ОЦЕНКА ==========
def record(episode_id, category, outcome, controller="policy", with_obstacles=False):
    return EpisodeRecord(episode_id=episode_id, category=category, with_obstacles=with_obstacles,
                         controller=controller, outcome=outcome, steps=10, final_distance=1.0)


class TestAggregate:
    """Тесты сводки отчета"""

    def test_rates(self):
        records = [
            record("s0", EpisodeCategory.SIMPLE, Outcome.SUCCESS),
            record("s1", EpisodeCategory.SIMPLE, Outcome.COLLISION),
            record("n0", EpisodeCategory.NOISY, Outcome.TIMEOUT),
            record("o0", EpisodeCategory.SIMPLE, Outcome.SUCCESS, "a", True),
            record("o0", EpisodeCategory.SIMPLE, Outcome.COLLISION, "b", True),
            record("o1", EpisodeCategory.SIMPLE, Outcome.COLLISION, "a", True),
        ]
        report = aggregate(records, {"seed": 1})
        assert report.per_category[EpisodeCategory.SIMPLE] == pytest.approx(0.5)
        assert report.per_category[EpisodeCategory.NOISY] == 0.0
        assert report.per_category[EpisodeCategory.MULTI_OBJECT] is None
        assert report.per_category[EpisodeCategory.DYNAMIC] is None
        assert report.total == pytest.approx(1 / 3)
        assert report.collision_rate == pytest.approx(1 / 3)
        assert report.obstacle_arrival == {"a": pytest.approx(0.5), "b": 0.0}
        assert report.obstacle_collision == {"a": pytest.approx(0.5), "b": 1.0}
        assert len(report.episodes) == 6
        assert report.config == {"seed": 1}

    def test_empty(self):
        report = aggregate([])
        assert report.total == 0.0
        assert all(rate is None for rate in report.per_category.values())
        assert report.obstacle_arrival == {}


class TestEvaluator:
    """Тесты прогона набора"""

    def test_empty_suite(self):
        with pytest.raises(ConfigError):
            Evaluator().run([])

    def test_policy_requires_checkpoint(self, simple_world):
        with pytest.raises(ConfigError):
            Evaluator().run([make_episode(simple_world)])

    def test_obstacle_episode_per_checkpoint(self, simple_world):
        """Эпизод с препятствиями прогоняется для каждого чекпоинта"""
        params = PolicyParams.zeros(PolicyConfig(), 8, TwistLimits())
        suite = [
            make_episode(simple_world),
            make_episode(simple_world, episode_id="obstacle-000", with_obstacles=True),
        ]
        jobs = Evaluator().jobs(suite, params, {"a": params, "b": params})
        assert [controller.name for _, controller in jobs] == ["policy", "a", "b"]

    def test_planner_suite(self, rng):
        """Набор планировщика в пуле потоков: порядок результатов совпадает с отчетом"""
        world = build_demo_world()
        suite = build_suite(world, rng, per_category=1, obstacle_episodes=1, max_steps=60,
                            controller=ControllerKind.PLANNER)
        run = Evaluator(sim_cfg=SimConfig(workers=2)).run(suite)
        assert len(run.report.episodes) == len(suite) == 5
        assert [r.episode_id for r in run.results] == [e.episode_id for e in run.report.episodes]
        assert 0.0 <= run.report.total <= 1.0
        assert set(run.report.obstacle_arrival) == {"planner"}
