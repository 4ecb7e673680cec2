"""
Приемочные проверки полного цикла: разметка, обучение, оценка, абляция

Все тесты модуля долгие и запускаются только с RUN_SLOW=1.
"""
import asyncio

import numpy as np
import pytest

from app.annotation.backend import SyntheticAnnotationBackend
from app.annotation.pipeline import annotate_dataset
from app.annotation.recordings import synthesize_recording
from app.geom.kinematics import to_local
from app.schemas.config import (
    AblationConfig,
    AnnotationConfig,
    CameraConfig,
    ObjectiveConfig,
    PlannerConfig,
    PolicyConfig,
    TrainConfig,
    TrainingStage,
)
from app.schemas.models import TwistLimits
from app.services.ablation_service import AblationService
from app.services.storage_service import StorageService
from app.sim.evaluation import Evaluator
from app.sim.scenarios import build_demo_world, build_suite
from app.training.trainer import train
from app.utils.helpers import child_rng

pytestmark = pytest.mark.slow

RECORDINGS = 5
DURATION_S = 100.0


@pytest.fixture(scope="module")
def world():
    return build_demo_world(0)


@pytest.fixture(scope="module")
def frames(world):
    """1000 размеченных кадров демо-мира: пять проходов по 100 с при 2 кадрах/с"""
    camera = CameraConfig()
    cfg = AnnotationConfig(duration_s=DURATION_S)
    recordings = [synthesize_recording(world, DURATION_S, cfg.source_fps, child_rng(0, "recording", i))
                  for i in range(RECORDINGS)]
    backend = SyntheticAnnotationBackend(world, camera, cfg)
    loop = asyncio.new_event_loop()
    try:
        return loop.run_until_complete(annotate_dataset(recordings, world, backend, camera, cfg,
                                                        PlannerConfig(), 8, 0))
    finally:
        loop.close()


def train_cfg(seed, stage=TrainingStage.PRETRAIN):
    return TrainConfig(learning_rate=1e-3, batch_size=64, epochs=20, steps_per_epoch=50, seed=seed, stage=stage)


class TestAnnotationSoundness:
    """Разметка синтетических кадров"""

    def test_poses_within_footprint(self, world, frames):
        """Не менее 95% размеченных поз лежат в пределах основания объекта"""
        assert len(frames) == 1000
        labeled = [(frame, obj) for frame in frames for obj in frame.objects]
        assert labeled
        inside = 0
        for frame, obj in labeled:
            spec = world.get_object(obj.object_id)
            truth = to_local(frame.robot_pose.as_array(), np.array([spec.pose.x, spec.pose.y]))
            # запас на округление back-projection
            inside += float(np.hypot(obj.pose_x - truth[0], obj.pose_y - truth[1])) <= spec.footprint_radius + 1e-6
        assert inside / len(labeled) >= 0.95

    def test_dataset_file_validates(self, frames, tmp_path):
        """Записанный датасет читается без нарушений схемы"""
        path = tmp_path / "dataset.jsonl"
        StorageService.write_dataset(path, frames, 8)
        header, loaded = StorageService.read_dataset(path)
        assert header.teacher_horizon == 8
        assert loaded == frames


class TestTrainingEfficacy:
    """Предобучение и дообучение на размеченных кадрах"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_pretrained_policy_succeeds(self, world, frames, seed):
        """Предобученная политика достигает цели в 80% эпизодов без препятствий"""
        result = train(frames, train_cfg(seed), ObjectiveConfig())
        suite = build_suite(world, child_rng(seed, "suite"), per_category=25, obstacle_episodes=0)
        assert len(suite) == 100
        report = Evaluator().run(suite, result.params).report
        assert report.total >= 0.8

    def test_finetune_lowers_collisions(self, world, frames):
        """Дообучение с учителем снижает столкновения и не повышает успех без препятствий"""
        objective = ObjectiveConfig(lambda_col=1.0)
        pretrain = train(frames, train_cfg(0), objective).params
        finetune = train(frames, train_cfg(0, TrainingStage.FINETUNE), objective, params=pretrain).params

        suite = build_suite(world, child_rng(0, "suite"), per_category=5, obstacle_episodes=15)
        obstacle_suite = [ep for ep in suite if ep.with_obstacles]
        main_suite = [ep for ep in suite if not ep.with_obstacles]
        assert len(obstacle_suite) == 15

        evaluator = Evaluator()
        report = evaluator.run(obstacle_suite, obstacle_checkpoints={"pretrain": pretrain,
                                                                     "finetune": finetune}).report
        assert report.obstacle_collision["finetune"] < report.obstacle_collision["pretrain"]

        pretrain_total = evaluator.run(main_suite, pretrain).report.total
        finetune_total = evaluator.run(main_suite, finetune).report.total
        assert pretrain_total >= finetune_total


class TestDataAblation:
    """Абляция по доле датасета"""

    def test_median_mse_non_increasing(self, frames):
        """Медиана MSE по трем seed не растет с долей датасета"""
        service = AblationService(
            AblationConfig(fractions=(0.1, 0.25, 0.5, 1.0), seeds=(0, 1, 2)),
            train_cfg(0),
            ObjectiveConfig(),
            PolicyConfig(),
            TwistLimits(),
            seed=0,
        )
        table = service.run(frames).table
        medians = [row["median_mse"] for row in table]
        assert [row["fraction"] for row in table] == [0.1, 0.25, 0.5, 1.0]
        assert all(b <= a for a, b in zip(medians, medians[1:]))
