"""
Конфигурация для тестов
"""
import pytest
import sys
import os
import asyncio
from unittest.mock import Mock

import numpy as np

# Добавляем корень проекта в sys.path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.schemas.dataset import AnnotatedFrame, AnnotatedObject, Candidate, FrameObservation, ObjectSpec  # noqa: E402
from app.schemas.dataset import PromptCategory, PromptLabel  # noqa: E402
from app.schemas.models import Point3, Pose2  # noqa: E402
from app.schemas.world import World  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: долгие приемочные проверки (RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="долгий тест; запуск с RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def mock_settings():
    """Mock настроек для тестов"""
    import app.utils.config as config_module

    # Сохраняем оригинальный settings
    original_settings = config_module.settings

    # Создаем mock настроек
    mock_settings = Mock()

    # Логирование
    mock_settings.debug = False
    mock_settings.log_dir = "logs"
    mock_settings.log_to_file = False
    mock_settings.log_json_console = False

    # Выполнение
    mock_settings.workers = 1
    mock_settings.default_seed = 0
    mock_settings.annotation_concurrency = 4

    # Бэкенд разметки
    mock_settings.backend_url = None
    mock_settings.backend_timeout_s = 5.0

    # Заменяем settings на mock
    config_module.settings = mock_settings

    yield mock_settings

    # Восстанавливаем оригинальные settings
    config_module.settings = original_settings


@pytest.fixture(scope="session")
def event_loop():
    """Создание event loop для асинхронных тестов"""
    loop = asyncio.get_event_loop_policy().new_event_loop()
    yield loop
    loop.close()


@pytest.fixture
def rng():
    """Генератор с фиксированным seed"""
    return np.random.default_rng(1234)


@pytest.fixture
def simple_world():
    """Мир без препятствий: белый стул впереди, красный диван слева"""
    return World(objects=[
        ObjectSpec(id="chair", class_noun="chair", attributes=["white"], pose=Point3(x=2.0, y=0.0, z=0.4),
                   footprint_radius=0.25),
        ObjectSpec(id="sofa", class_noun="sofa", attributes=["red"], pose=Point3(x=0.0, y=3.0, z=0.4),
                   footprint_radius=0.4),
    ])


def make_frame(goal=(3.0, 0.0), frame_id=0, teacher_horizon=8, label="white chair",
               prompt="go to the white chair", teacher=None):
    """Кадр датасета с одним объектом в точке goal (система робота)"""
    teacher = teacher or [Pose2(x=goal[0] * (k + 1) / teacher_horizon, y=goal[1] * (k + 1) / teacher_horizon)
                          for k in range(teacher_horizon)]
    return AnnotatedFrame(
        frame_id=frame_id,
        timestamp=float(frame_id),
        robot_pose=Pose2(),
        observation=FrameObservation(current=[Candidate(rel_x=goal[0], rel_y=goal[1], label=label)]),
        objects=[AnnotatedObject(
            object_id="chair",
            pose_x=goal[0],
            pose_y=goal[1],
            prompts=[PromptLabel(text=prompt, category=PromptCategory.DESCRIPTIVE)],
            teacher=teacher,
        )],
    )


@pytest.fixture
def goal_frames():
    """Несколько кадров с разными положениями цели"""
    goals = [(3.0, 0.0), (2.0, 1.0), (2.5, -1.0), (1.5, 0.5)]
    return [make_frame(goal, frame_id=i) for i, goal in enumerate(goals)]
