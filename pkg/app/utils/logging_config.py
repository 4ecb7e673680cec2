# app/utils/logging_config.py
"""
Конфигурация логирования для лаборатории навигации
"""
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
import json
from datetime import datetime, timezone
UTC = timezone.utc
from typing import Dict, Any, Optional

from app.utils import config

# Стандартные атрибуты LogRecord, которые не нужно дублировать в JSON
_RESERVED_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", None, None)).keys()) | {"message", "asctime"}


class JSONFormatter(logging.Formatter):
    """Форматировщик логов в JSON"""

    def format(self, record: logging.LogRecord) -> str:
        log_record: Dict[str, Any] = {
            "timestamp": datetime.now(UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)

        # extra поля (event=..., step=... и т.д.)
        for key, value in record.__dict__.items():
            if key not in log_record and key not in _RESERVED_ATTRS and not key.startswith('_'):
                log_record[key] = value

        return json.dumps(log_record, ensure_ascii=False, default=str)


class ColorFormatter(logging.Formatter):
    """Цветной форматировщик для консоли"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[41m',
        'RESET': '\033[0m',
    }

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        reset = self.COLORS['RESET']
        log_time = datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S')
        message = super().format(record)

        event = getattr(record, "event", None)
        suffix = f" ({event})" if event else ""
        return f"{log_time} {color}{record.levelname:8s}{reset} [{record.name}] {message}{suffix}"


def setup_logging(level: Optional[int] = None) -> logging.Logger:
    """
    Настройка логирования для CLI процессов

    Консоль пишет в stderr, чтобы stdout оставался для сводок команд.
    Файловые обработчики включаются через settings.log_to_file.
    """
    settings = config.settings
    if level is None:
        level = logging.DEBUG if settings.debug else logging.INFO

    logger = logging.getLogger()
    logger.setLevel(level)
    logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    if settings.log_json_console:
        console_handler.setFormatter(JSONFormatter())
    else:
        console_handler.setFormatter(ColorFormatter('%(message)s'))
    logger.addHandler(console_handler)

    if settings.log_to_file:
        log_dir = Path(settings.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)

        # Основной лог (ротация по размеру)
        file_handler = RotatingFileHandler(
            filename=log_dir / "lastmile.log",
            maxBytes=10 * 1024 * 1024,  # 10 MB
            backupCount=5,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(JSONFormatter())
        logger.addHandler(file_handler)

        # Предупреждения и ошибки отдельно
        error_handler = RotatingFileHandler(
            filename=log_dir / "errors.log",
            maxBytes=5 * 1024 * 1024,  # 5 MB
            backupCount=3,
            encoding='utf-8'
        )
        error_handler.setLevel(logging.WARNING)
        error_handler.setFormatter(JSONFormatter())
        logger.addHandler(error_handler)

    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("aiohttp").setLevel(logging.WARNING)

    logger.debug("Логирование настроено")

    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Получение логгера с заданным именем

    Args:
        name: Имя логгера

    Returns:
        Настроенный логгер
    """
    return logging.getLogger(name)


class StructuredLogger:
    """
    Логгер для структурированного логирования
    """

    def __init__(self, name: str):
        self.logger = get_logger(name)

    def _log_with_context(self, level: int, msg: str, **kwargs):
        """Логирование с дополнительным контекстом"""
        # stacklevel=3: пропускаем _log_with_context и публичный метод
        self.logger.log(level, msg, extra=kwargs, stacklevel=3)

    def info(self, msg: str, **kwargs):
        """Логирование уровня INFO"""
        self._log_with_context(logging.INFO, msg, **kwargs)

    def debug(self, msg: str, **kwargs):
        """Логирование уровня DEBUG"""
        self._log_with_context(logging.DEBUG, msg, **kwargs)

    def warning(self, msg: str, **kwargs):
        """Логирование уровня WARNING"""
        self._log_with_context(logging.WARNING, msg, **kwargs)

    def error(self, msg: str, **kwargs):
        """Логирование уровня ERROR"""
        self._log_with_context(logging.ERROR, msg, **kwargs)

    def critical(self, msg: str, **kwargs):
        """Логирование уровня CRITICAL"""
        self._log_with_context(logging.CRITICAL, msg, **kwargs)

    def epoch_completed(self, stage: str, epoch: int, total: float, **kwargs):
        """Логирование завершения эпохи обучения"""
        self.info(f"Эпоха {epoch} ({stage}) завершена, J={total:.6f}",
                  event="epoch_completed",
                  stage=stage,
                  epoch=epoch,
                  total=total,
                  **kwargs)

    def episode_finished(self, episode_id: str, outcome: str, steps: int, **kwargs):
        """Логирование завершения эпизода"""
        if outcome == "success":
            self.info(f"Эпизод {episode_id}: успех за {steps} шагов",
                      event="episode_finished",
                      episode_id=episode_id,
                      outcome=outcome,
                      steps=steps,
                      **kwargs)
        else:
            self.warning(f"Эпизод {episode_id}: {outcome} после {steps} шагов",
                         event="episode_finished",
                         episode_id=episode_id,
                         outcome=outcome,
                         steps=steps,
                         **kwargs)

    def frame_annotated(self, frame_id: int, objects: int, prompts: int, **kwargs):
        """Логирование размеченного кадра"""
        self.debug(f"Кадр {frame_id} размечен: объектов {objects}, промптов {prompts}",
                   event="frame_annotated",
                   frame_id=frame_id,
                   objects=objects,
                   prompts=prompts,
                   **kwargs)

    def policy_switched(self, node_id: int, step: int, **kwargs):
        """Логирование переключения на политику последней мили"""
        self.info(f"Переключение на политику у узла {node_id}",
                  event="policy_switched",
                  node_id=node_id,
                  step=step,
                  **kwargs)

    def plan_selected(self, step: int, primitive_index: int, cost: float, **kwargs):
        """Логирование выбранного примитива"""
        self.debug(f"Шаг {step}: примитив {primitive_index}, J={cost:.4f}",
                   event="plan_selected",
                   step=step,
                   primitive_index=primitive_index,
                   cost=cost,
                   **kwargs)

    def checkpoint_saved(self, path: str, step: int, **kwargs):
        """Логирование сохранения чекпоинта"""
        self.info(f"Чекпоинт сохранен: {path}",
                  event="checkpoint_saved",
                  path=path,
                  step=step,
                  **kwargs)
