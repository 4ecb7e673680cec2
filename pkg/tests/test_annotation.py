"""
Тесты синтетического рендера, промптов, записей и конвейера разметки
"""
import math

import numpy as np
import pytest

from app.annotation.backend import (
    DescribeRequest,
    PromptRequest,
    SegmentRequest,
    SyntheticAnnotationBackend,
    decode_depth,
    decode_mask,
    encode_depth,
    encode_mask,
    masks_from_response,
)
from app.annotation.pipeline import (
    annotate_dataset,
    crop_goal_box,
    footprint_ring,
    label_object_pose,
    world_obstacle_points,
)
from app.annotation.prompts import confidence_filter, generate_prompts, load_decoys
from app.annotation.recordings import sample_indices, synthesize_recording
from app.annotation.renderer import frame_fraction, render_frame
from app.schemas.config import AnnotationConfig, CameraConfig
from app.schemas.dataset import ObjectSpec, PromptCategory
from app.schemas.models import PlanarPoint, Point3, Pose2
from app.schemas.world import Recording, World
from app.utils.errors import BackendError, EmptyMaskError, GeometryError


@pytest.fixture
def camera():
    return CameraConfig()


def cylinder(obj_id, x, y, radius=0.25, z=0.4, height=0.8, noun="chair", attributes=()):
    return ObjectSpec(id=obj_id, class_noun=noun, attributes=list(attributes),
                      pose=Point3(x=x, y=y, z=z), footprint_radius=radius, height=height)


class TestRenderer:
    """Тесты рендера кадра"""

    def test_object_ahead_visible(self, simple_world, camera):
        """Объект прямо по курсу полностью видим, объект сбоку вне кадра"""
        frame = render_frame(simple_world, Pose2(), camera)
        assert frame.object_ids == ["chair"]
        assert frame.visibility["chair"] == pytest.approx(1.0)
        assert frame.depth.shape == (72, 96)

    def test_depth_at_principal_point(self, simple_world, camera):
        """Глубина центрального пикселя -- передняя поверхность цилиндра"""
        frame = render_frame(simple_world, Pose2(), camera)
        assert frame.depth[36, 48] == pytest.approx(1.75)

    def test_floor_below_horizon(self, camera):
        """Пол виден ниже горизонта, выше горизонта глубина невалидна"""
        frame = render_frame(World(), Pose2(), camera)
        bottom_row = 71
        expected = camera.mount_height / ((bottom_row - 36) / 60.0)
        assert frame.depth[bottom_row, 48] == pytest.approx(expected)
        assert np.isnan(frame.depth[0, 48])

    def test_full_occlusion(self, camera):
        """Полностью закрытый объект не получает маску"""
        world = World(objects=[
            cylinder("near", 1.0, 0.0, z=0.5, height=1.0),
            cylinder("far", 3.0, 0.0),
        ])
        frame = render_frame(world, Pose2(), camera)
        assert "near" in frame.masks
        assert "far" not in frame.masks

    def test_frame_fraction_edge(self, camera):
        """Объект на краю обзора виден наполовину"""
        intr = camera.intrinsics
        bearing = math.atan2(intr.cx, intr.fx)
        obj = cylinder("edge", 3.0 * math.cos(bearing), 3.0 * math.sin(bearing))
        assert frame_fraction(obj, Pose2(), intr) == pytest.approx(0.5)

    def test_frame_fraction_behind(self, camera):
        assert frame_fraction(cylinder("back", -2.0, 0.0), Pose2(), camera.intrinsics) == 0.0

    def test_rotated_robot(self, simple_world, camera):
        """Поворот робота к дивану делает видимым диван"""
        frame = render_frame(simple_world, Pose2(theta=math.pi / 2), camera)
        assert frame.object_ids == ["sofa"]


class TestObjectPose:
    """Тесты оценки позы объекта по маске"""

    def test_pose_near_true_center(self, simple_world, camera):
        """Медиана точек маски в пределах радиуса от центра"""
        frame = render_frame(simple_world, Pose2(), camera)
        pose = label_object_pose(frame.depth, frame.masks["chair"], camera.intrinsics)
        assert math.hypot(pose.x - 2.0, pose.y) <= 0.3
        assert pose.y == pytest.approx(0.0, abs=0.05)

    def test_empty_mask(self, simple_world, camera):
        frame = render_frame(simple_world, Pose2(), camera)
        with pytest.raises(EmptyMaskError):
            label_object_pose(frame.depth, np.zeros_like(frame.masks["chair"]), camera.intrinsics)

    def test_crop_inside_image(self, camera, rng):
        """Рамка кропа внутри изображения и в заданных размерах"""
        intr = camera.intrinsics
        for _ in range(20):
            box = crop_goal_box(PlanarPoint(2.0, 0.3), intr, (0.0, 1.0), rng, (8, 32))
            u0, v0, u1, v1 = box.bounds()
            assert u0 >= 0 and v0 >= 0
            assert u1 <= intr.width and v1 <= intr.height
            assert 1 <= box.w <= 32 and 1 <= box.h <= 32

    def test_crop_behind(self, camera, rng):
        with pytest.raises(GeometryError):
            crop_goal_box(PlanarPoint(-1.0, 0.0), camera.intrinsics, (0.0, 1.0), rng)

    def test_obstacle_points_exclude_target(self, simple_world):
        """Окружность цели не входит в препятствия"""
        points = world_obstacle_points(simple_world, "chair", footprint_points=12)
        assert points.shape == (12, 2)
        np.testing.assert_allclose(np.hypot(points[:, 0], points[:, 1] - 3.0), 0.4)

    def test_footprint_ring(self):
        ring = footprint_ring(1.0, 2.0, 0.5, points=4)
        np.testing.assert_allclose(ring[0], [1.5, 2.0])


class TestPrompts:
    """Тесты генерации инструкций"""

    chair = ObjectSpec(id="c", class_noun="chair", attributes=["white"], pose=Point3(x=1.0, y=0.0, z=0.4),
                       footprint_radius=0.25)
    sofa = ObjectSpec(id="s", class_noun="sofa", pose=Point3(x=2.0, y=0.0, z=0.4), footprint_radius=0.4)

    def test_basic_categories(self, rng):
        """Без шума: простой, описательный и относительный промпты"""
        cfg = AnnotationConfig(noise_probability=0.0, implicit_probability=0.0)
        prompts = generate_prompts(self.chair, [self.sofa], rng, cfg)
        assert [p.text for p in prompts] == [
            "go to the chair",
            "go to the white chair",
            "go to the white chair next to the sofa",
        ]
        assert [p.category for p in prompts] == [PromptCategory.SIMPLE, PromptCategory.DESCRIPTIVE,
                                                 PromptCategory.DESCRIPTIVE]

    def test_noisy_and_implicit(self, rng):
        """Шумный промпт заменяет прилагательное обманкой, неявный -- без существительного"""
        cfg = AnnotationConfig(noise_probability=1.0, implicit_probability=1.0)
        prompts = generate_prompts(self.chair, [], rng, cfg)
        by_category = {p.category: p.text for p in prompts}
        noisy = by_category[PromptCategory.NOISY]
        assert noisy.endswith(" chair") and "white" not in noisy
        assert noisy.split()[-2] in load_decoys()
        assert by_category[PromptCategory.IMPLICIT] == "go to the white one"

    def test_noisy_without_attributes(self, rng):
        """У объекта без прилагательных шум добавляет одно"""
        cfg = AnnotationConfig(noise_probability=1.0, implicit_probability=1.0)
        prompts = generate_prompts(self.sofa, [], rng, cfg)
        categories = [p.category for p in prompts]
        assert PromptCategory.IMPLICIT not in categories
        assert PromptCategory.NOISY in categories

    @pytest.mark.parametrize("decoys", [["white"], []])
    def test_decoys_exhausted(self, rng, decoys):
        """Нет подходящей обманки -- шумный промпт не строится, простой остается"""
        cfg = AnnotationConfig(noise_probability=1.0, implicit_probability=0.0)
        prompts = generate_prompts(self.chair, [], rng, cfg, decoys=decoys)
        assert PromptCategory.NOISY not in [p.category for p in prompts]
        assert prompts[0].text == "go to the chair"

    def test_min_prompts_padding(self, rng):
        """Недостающие промпты добираются простыми формулировками"""
        cfg = AnnotationConfig(noise_probability=0.0, implicit_probability=0.0, min_prompts=3)
        texts = [p.text for p in generate_prompts(self.sofa, [], rng, cfg)]
        assert texts == ["go to the sofa", "go to a sofa", "go to that sofa"]

    def test_max_prompts(self, rng):
        cfg = AnnotationConfig(noise_probability=1.0, implicit_probability=1.0, max_prompts=2)
        assert len(generate_prompts(self.chair, [self.sofa], rng, cfg)) == 2

    def test_deterministic(self):
        """Одинаковое зерно -- одинаковые промпты"""
        cfg = AnnotationConfig(noise_probability=0.5, implicit_probability=0.5)
        a = generate_prompts(self.chair, [self.sofa], np.random.default_rng(3), cfg)
        b = generate_prompts(self.chair, [self.sofa], np.random.default_rng(3), cfg)
        assert a == b

    @pytest.mark.parametrize("visibility,expected", [(0.49, False), (0.5, True), (0.9, True)])
    def test_confidence_filter(self, visibility, expected):
        """Порог видимости включает границу"""
        assert confidence_filter(visibility, 0.5) is expected

    def test_confidence_filter_range(self):
        with pytest.raises(ValueError):
            confidence_filter(1.5)


class TestRecordings:
    """Тесты выборки кадров и синтетических проходов"""

    def test_subsampling(self):
        """10 Гц -> 2 Гц: каждый пятый кадр, не больше duration * fps"""
        assert sample_indices(100, 10.0, 2.0, 10.0) == list(range(0, 100, 5))
        assert sample_indices(100, 10.0, 2.0, 3.0) == [0, 5, 10, 15, 20, 25]

    def test_sampling_above_source(self):
        """Частота выборки выше исходной -- каждый кадр"""
        assert sample_indices(30, 10.0, 20.0, 2.0) == list(range(20))

    def test_short_recording(self):
        assert sample_indices(3, 10.0, 2.0, 10.0) == [0]

    def test_synthesized_inside_arena(self, rng):
        """Синтетический проход остается в арене"""
        world = World()
        recording = synthesize_recording(world, duration_s=20.0, fps=10.0, rng=rng)
        assert len(recording.poses) == 200
        for pose in recording.poses:
            assert world.arena.x_min < pose.x < world.arena.x_max
            assert world.arena.y_min < pose.y < world.arena.y_max


class TestSyntheticBackend:
    """Тесты синтетического бэкенда и кодирования"""

    def test_mask_encoding(self, rng):
        mask = rng.random((7, 9)) > 0.5
        np.testing.assert_array_equal(decode_mask(encode_mask(mask), 7, 9), mask)

    def test_depth_encoding(self):
        depth = np.array([[1.0, np.nan], [2.5, 3.0]])
        decoded = decode_depth(encode_depth(depth))
        assert np.isnan(decoded[0, 1])
        assert decoded[1, 0] == pytest.approx(2.5)

    @pytest.mark.asyncio
    async def test_segment_and_describe(self, simple_world, camera):
        """Маски по рендеру, описание по объекту мира"""
        backend = SyntheticAnnotationBackend(simple_world, camera)
        intr = camera.intrinsics
        response = await backend.segment(SegmentRequest(frame_index=0, robot_pose=Pose2(), width=intr.width,
                                                        height=intr.height, depth=""))
        masks = masks_from_response(response, intr.height, intr.width)
        assert [ref for ref, _, _ in masks] == ["chair"]
        description = await backend.describe(DescribeRequest(frame_index=0, object_ref="chair"))
        assert description.description == "white chair"
        assert backend.total_requests == 2

    @pytest.mark.asyncio
    async def test_unknown_object(self, simple_world, camera):
        backend = SyntheticAnnotationBackend(simple_world, camera)
        with pytest.raises(BackendError) as exc_info:
            await backend.describe(DescribeRequest(frame_index=4, object_ref="ghost"))
        assert exc_info.value.frame_index == 4

    @pytest.mark.asyncio
    async def test_prompts_deterministic(self, simple_world, camera):
        backend = SyntheticAnnotationBackend(simple_world, camera)
        request = PromptRequest(frame_index=1, object_ref="chair", class_noun="chair", attributes=["white"],
                                neighbor_nouns=["sofa"], seed=9)
        first = await backend.propose_prompts(request)
        second = await backend.propose_prompts(request)
        assert first == second
        assert first.prompts[0].text == "go to the chair"


class FailingBackend(SyntheticAnnotationBackend):
    """Бэкенд, падающий на сегментации"""

    async def segment(self, request):
        raise RuntimeError("segmentation service exploded")


class TestAnnotationPipeline:
    """Тесты конвейера разметки"""

    @staticmethod
    def recording():
        return Recording(source_fps=2.0, poses=[Pose2(), Pose2(theta=0.1), Pose2(x=0.5)])

    @staticmethod
    def cfg():
        return AnnotationConfig(sampling_fps=2.0, source_fps=2.0, duration_s=10.0)

    @pytest.mark.asyncio
    async def test_frames_and_labels(self, simple_world, camera):
        """Каждый кадр размечен: поза стула, промпты, учитель длины M"""
        backend = SyntheticAnnotationBackend(simple_world, camera, self.cfg())
        frames = await annotate_dataset([self.recording()], simple_world, backend, camera, self.cfg(),
                                        teacher_horizon=8, seed=1)
        assert [f.frame_id for f in frames] == [0, 1, 2]
        assert [f.timestamp for f in frames] == [0.0, 0.5, 1.0]
        for frame in frames:
            assert [obj.object_id for obj in frame.objects] == ["chair"]
            obj = frame.objects[0]
            assert len(obj.teacher) == 8
            assert all(p.text.startswith("go to") for p in obj.prompts)
            assert obj.goal_crop is not None
        # Поза в системе робота: после сдвига на 0.5 м объект ближе
        assert frames[2].objects[0].pose_x < frames[0].objects[0].pose_x
        assert frames[0].objects[0].pose_x == pytest.approx(2.0, abs=0.3)

    @pytest.mark.asyncio
    async def test_previous_observation(self, simple_world, camera):
        """Предыдущее наблюдение -- кандидаты предыдущего кадра записи"""
        backend = SyntheticAnnotationBackend(simple_world, camera, self.cfg())
        frames = await annotate_dataset([self.recording(), self.recording()], simple_world, backend,
                                        camera, self.cfg())
        assert frames[0].observation.previous == []
        assert frames[1].observation.previous == frames[0].observation.current
        # Новая запись начинается без истории
        assert frames[3].recording == 1
        assert frames[3].observation.previous == []

    @pytest.mark.asyncio
    async def test_deterministic(self, simple_world, camera):
        """Одинаковые записи и seed -- одинаковый датасет"""
        runs = []
        for _ in range(2):
            backend = SyntheticAnnotationBackend(simple_world, camera, self.cfg())
            frames = await annotate_dataset([self.recording()], simple_world, backend, camera, self.cfg(), seed=3)
            runs.append([frame.model_dump() for frame in frames])
        assert runs[0] == runs[1]

    @pytest.mark.asyncio
    async def test_low_visibility_dropped(self, camera):
        """Объект на краю обзора ниже порога не размечается"""
        intr = camera.intrinsics
        bearing = math.atan2(intr.cx, intr.fx) + 0.05
        world = World(objects=[cylinder("edge", 3.0 * math.cos(bearing), 3.0 * math.sin(bearing))])
        backend = SyntheticAnnotationBackend(world, camera, self.cfg())
        frames = await annotate_dataset([Recording(source_fps=2.0, poses=[Pose2()])], world, backend,
                                        camera, self.cfg())
        assert frames[0].objects == []

    @pytest.mark.asyncio
    async def test_backend_failure(self, simple_world, camera):
        """Сбой бэкенда -> BackendError с номером кадра"""
        backend = FailingBackend(simple_world, camera)
        with pytest.raises(BackendError) as exc_info:
            await annotate_dataset([self.recording()], simple_world, backend, camera, self.cfg())
        assert exc_info.value.frame_index in (0, 1, 2)

    @pytest.mark.asyncio
    async def test_no_recordings(self, simple_world, camera):
        with pytest.raises(ValueError):
            await annotate_dataset([], simple_world, SyntheticAnnotationBackend(simple_world, camera))
