"""
Конвейер разметки: сегментация -> описание -> промпты -> поза -> траектория учителя
"""
import asyncio
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.annotation.backend import (
    AnnotationBackend,
    DescribeRequest,
    PromptRequest,
    SegmentRequest,
    encode_depth,
    masks_from_response,
)
from app.annotation.prompts import confidence_filter
from app.annotation.recordings import sample_indices
from app.annotation.renderer import render_frame
from app.geom.camera import back_project_grid, masked_median_array, planar_to_camera, project_to_pixel, to_planar
from app.geom.kinematics import to_local
from app.planning.lattice import StateLatticePlanner, obstacle_array
from app.schemas.config import AnnotationConfig, CameraConfig, PlanarConvention, PlannerConfig
from app.schemas.dataset import AnnotatedFrame, AnnotatedObject, Candidate, FrameObservation, ObjectSpec
from app.schemas.models import CameraIntrinsics, CropBox, PlanarPoint, Point3, Pose2
from app.schemas.world import Recording, World
from app.utils.errors import BackendError, GeometryError
from app.utils.helpers import child_rng
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


# ========== ПОЗА И КРОП ==========
def label_object_pose(depth_map: np.ndarray, mask: np.ndarray, intr: CameraIntrinsics,
                      convention: PlanarConvention = PlanarConvention.OPTICAL) -> PlanarPoint:
    """
    Поза объекта на плоскости в системе робота

    back-projection -> медиана точек под маской -> отбрасывание высоты.
    Пустая маска дает EmptyMaskError.
    """
    grid = back_project_grid(depth_map, intr)
    median = masked_median_array(grid.reshape(-1, 3), np.asarray(mask, dtype=bool).reshape(-1))
    return to_planar(Point3.from_array(median), convention)


def crop_goal_box(goal: PlanarPoint, intr: CameraIntrinsics, height_range: Tuple[float, float],
                  rng: np.random.Generator, box_range: Tuple[int, int] = (8, 32),
                  mount_height: float = 0.5) -> CropBox:
    """
    Кроп изображения вокруг цели: случайная высота точки и размер рамки

    Центр -- проекция точки (цель, высота h над полом); рамка обрезается
    по границам изображения, минимальный размер 1x1.
    """
    if goal.x <= 0:
        raise GeometryError("behind camera")
    height = float(rng.uniform(height_range[0], height_range[1]))
    size_w = int(rng.integers(box_range[0], box_range[1] + 1))
    size_h = int(rng.integers(box_range[0], box_range[1] + 1))
    point = planar_to_camera(goal.x, goal.y, mount_height - height, PlanarConvention.OPTICAL)
    center = project_to_pixel(point, intr)

    u0 = min(max(center.u - size_w / 2.0, 0.0), intr.width - 1.0)
    u1 = max(min(center.u + size_w / 2.0, float(intr.width)), u0 + 1.0)
    v0 = min(max(center.v - size_h / 2.0, 0.0), intr.height - 1.0)
    v1 = max(min(center.v + size_h / 2.0, float(intr.height)), v0 + 1.0)
    w = max(1, int(math.floor(u1 - u0)))
    h = max(1, int(math.floor(v1 - v0)))
    return CropBox(u=u0 + w / 2.0, v=v0 + h / 2.0, w=w, h=h)


# ========== ПРЕПЯТСТВИЯ ==========
def footprint_ring(x: float, y: float, radius: float, points: int = 16) -> np.ndarray:
    """Точки окружности основания объекта (points, 2)"""
    angles = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
    return np.stack([x + radius * np.cos(angles), y + radius * np.sin(angles)], axis=1)


def world_obstacle_points(world: World, exclude_id: Optional[str] = None, footprint_points: int = 16,
                          objects: Optional[Sequence[ObjectSpec]] = None) -> np.ndarray:
    """Точки препятствий мира и окружности нецелевых объектов (мировая система)"""
    chunks = [obstacle_array([p for obstacle in world.obstacles for p in obstacle])]
    for obj in (world.objects if objects is None else objects):
        if obj.id != exclude_id:
            chunks.append(footprint_ring(obj.pose.x, obj.pose.y, obj.footprint_radius, footprint_points))
    return np.concatenate(chunks, axis=0)


# ========== КОНВЕЙЕР ==========
@dataclass
class _FrameLabels:
    """Результат разметки одного кадра до связывания с предыдущим кадром"""
    recording: int
    pose_index: int
    timestamp: float
    robot_pose: Pose2
    candidates: List[Candidate]
    objects: List[AnnotatedObject]


class AnnotationPipeline:
    """Разметка записей проходов через бэкенд"""

    def __init__(self, world: World, backend: AnnotationBackend, camera: Optional[CameraConfig] = None,
                 cfg: Optional[AnnotationConfig] = None, planner_cfg: Optional[PlannerConfig] = None,
                 teacher_horizon: int = 8, seed: int = 0, footprint_points: int = 16):
        self.world = world
        self.backend = backend
        self.camera = camera or CameraConfig()
        self.cfg = cfg or AnnotationConfig()
        self.planner = StateLatticePlanner(planner_cfg)
        self.teacher_horizon = teacher_horizon
        self.seed = seed
        self.footprint_points = footprint_points

        logger.info(
            "AnnotationPipeline инициализирован",
            event="annotation_pipeline_init",
            objects=len(world.objects),
            sampling_fps=self.cfg.sampling_fps,
            visibility_threshold=self.cfg.visibility_threshold,
            teacher_horizon=teacher_horizon,
            concurrency=self.cfg.concurrency,
        )

    async def annotate_frame(self, frame_index: int, recording: int, pose_index: int,
                             timestamp: float, robot_pose: Pose2) -> _FrameLabels:
        """Разметка кадра; сбои бэкенда и данных превращаются в BackendError с индексом кадра"""
        intr = self.camera.intrinsics
        try:
            rendered = render_frame(self.world, robot_pose, self.camera)
            response = await self.backend.segment(SegmentRequest(
                frame_index=frame_index, robot_pose=robot_pose,
                width=intr.width, height=intr.height, depth=encode_depth(rendered.depth),
            ))
            kept = []
            for object_ref, mask, visibility in masks_from_response(response, intr.height, intr.width):
                if not confidence_filter(visibility, self.cfg.visibility_threshold):
                    continue
                if int(mask.sum()) < self.cfg.min_mask_pixels:
                    continue
                pose = label_object_pose(rendered.depth, mask, intr, self.camera.planar_convention)
                description = await self.backend.describe(DescribeRequest(frame_index=frame_index,
                                                                          object_ref=object_ref))
                kept.append((object_ref, pose, description))
        except BackendError:
            raise
        except Exception as e:
            logger.error("Ошибка разметки кадра", event="frame_annotation_error",
                         frame_index=frame_index, error=str(e), error_type=type(e).__name__)
            raise BackendError(str(e), frame_index) from e

        candidates = [Candidate(rel_x=pose.x, rel_y=pose.y, label=description.description)
                      for _, pose, description in kept]
        rng = child_rng(self.seed, "crop", frame_index)
        objects: List[AnnotatedObject] = []
        for object_ref, pose, description in kept:
            neighbors = sorted(
                (other for other in kept if other[0] != object_ref),
                key=lambda other: (other[1].x - pose.x) ** 2 + (other[1].y - pose.y) ** 2,
            )
            prompts = await self.backend.propose_prompts(PromptRequest(
                frame_index=frame_index,
                object_ref=object_ref,
                class_noun=description.class_noun,
                attributes=description.attributes,
                neighbor_nouns=[other[2].class_noun for other in neighbors],
                seed=self.seed,
            ))
            if not prompts.prompts:
                continue
            obstacles = to_local(robot_pose.as_array(),
                                 world_obstacle_points(self.world, object_ref, self.footprint_points))
            teacher = self.planner.teacher_trajectory(Pose2(), (pose.x, pose.y), obstacles, self.teacher_horizon)
            crop = None
            if pose.x > 0:
                crop = crop_goal_box(pose, self.camera.intrinsics, self.cfg.crop_height_range, rng,
                                     self.cfg.crop_box_range, self.camera.mount_height)
            objects.append(AnnotatedObject(
                object_id=object_ref,
                pose_x=pose.x,
                pose_y=pose.y,
                prompts=prompts.prompts,
                teacher=teacher,
                goal_crop=crop,
            ))

        logger.frame_annotated(frame_index, len(objects), sum(len(o.prompts) for o in objects))
        return _FrameLabels(recording, pose_index, timestamp, robot_pose, candidates, objects)

    async def annotate(self, recordings: Sequence[Recording]) -> List[AnnotatedFrame]:
        """
        Разметка всех записей

        Кадры размечаются конкурентно (семафор concurrency), результат
        собирается по порядку номеров кадров. Предыдущее наблюдение берется
        из предыдущего выбранного кадра той же записи.
        """
        jobs = []
        for recording_index, recording in enumerate(recordings):
            for pose_index in sample_indices(len(recording.poses), recording.source_fps,
                                             self.cfg.sampling_fps, self.cfg.duration_s):
                jobs.append((recording_index, pose_index, pose_index / recording.source_fps,
                             recording.poses[pose_index]))

        semaphore = asyncio.Semaphore(self.cfg.concurrency)

        async def bounded(frame_index: int, job) -> _FrameLabels:
            async with semaphore:
                return await self.annotate_frame(frame_index, *job)

        labels = await asyncio.gather(*(bounded(i, job) for i, job in enumerate(jobs)))

        frames: List[AnnotatedFrame] = []
        previous: List[Candidate] = []
        last_recording = None
        for frame_index, label in enumerate(labels):
            if label.recording != last_recording:
                previous = []
                last_recording = label.recording
            frames.append(AnnotatedFrame(
                frame_id=frame_index,
                recording=label.recording,
                timestamp=label.timestamp,
                robot_pose=label.robot_pose,
                observation=FrameObservation(current=label.candidates, previous=previous),
                objects=label.objects,
            ))
            previous = label.candidates

        logger.info(
            "Разметка завершена",
            event="annotation_completed",
            frames=len(frames),
            objects=sum(len(f.objects) for f in frames),
            prompts=sum(len(o.prompts) for f in frames for o in f.objects),
        )
        return frames


async def annotate_dataset(recordings: Sequence[Recording], world: World, backend: AnnotationBackend,
                           camera: Optional[CameraConfig] = None, cfg: Optional[AnnotationConfig] = None,
                           planner_cfg: Optional[PlannerConfig] = None, teacher_horizon: int = 8,
                           seed: int = 0) -> List[AnnotatedFrame]:
    """Размеченный датасет по записям проходов; чистая функция (записи, seed, конфиг)"""
    if not recordings:
        raise ValueError("нет записей для разметки")
    pipeline = AnnotationPipeline(world, backend, camera, cfg, planner_cfg, teacher_horizon, seed)
    return await pipeline.annotate(recordings)
