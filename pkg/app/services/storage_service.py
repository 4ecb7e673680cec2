"""
Сервис файловых артефактов: датасет, чекпоинты, миры, наборы эпизодов, отчеты, трассы
"""
import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from app.schemas.config import CheckpointFile, ObjectiveConfig, TrainingStage
from app.schemas.dataset import AnnotatedFrame, DatasetHeader
from app.schemas.world import (
    Episode,
    EvalReport,
    PlanTraceEntry,
    SuiteHeader,
    TrajectorySample,
    WorldFile,
)
from app.training.network import PolicyParams
from app.utils.config import (
    CHECKPOINT_SCHEMA_VERSION,
    DATASET_SCHEMA_VERSION,
    REPORT_SCHEMA_VERSION,
    SUITE_SCHEMA_VERSION,
    WORLD_SCHEMA_VERSION,
)
from app.utils.errors import SchemaViolationError
from app.utils.helpers import file_digest
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

PathLike = Union[str, Path]
ModelT = TypeVar("ModelT", bound=BaseModel)

TRAJECTORY_FIELDS = ("t", "x", "y", "theta", "v", "omega")


def _dumps(model: BaseModel) -> str:
    """Стабильная JSON-строка: ключи отсортированы, float в кратчайшем представлении"""
    return json.dumps(model.model_dump(mode="json", by_alias=True), sort_keys=True,
                      separators=(",", ":"), ensure_ascii=False)


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _check_version(kind: str, found: int, expected: int, path: PathLike) -> None:
    if found != expected:
        raise SchemaViolationError(f"{path}: {kind} версии {found}, поддерживается {expected}", line=1)


class StorageService:
    """Чтение и запись артефактов лаборатории"""

    # ========== ДАТАСЕТ ==========

    @staticmethod
    def write_dataset(path: PathLike, frames: Sequence[AnnotatedFrame], teacher_horizon: int,
                      config: Optional[Dict[str, Any]] = None) -> str:
        """JSON Lines: заголовок, затем кадр на строку; возвращает sha256 файла"""
        path = _prepare(path)
        header = DatasetHeader(teacher_horizon=teacher_horizon, config=config or {})
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(_dumps(header) + "\n")
            for frame in frames:
                f.write(_dumps(frame) + "\n")
        digest = file_digest(path)
        logger.info(
            "Датасет записан",
            event="dataset_written",
            path=str(path),
            frames=len(frames),
            digest=digest,
        )
        return digest

    @staticmethod
    def read_dataset(path: PathLike) -> Tuple[DatasetHeader, List[AnnotatedFrame]]:
        """Заголовок и кадры; нарушение схемы -> SchemaViolationError с номером строки"""
        frames: List[AnnotatedFrame] = []
        header: Optional[DatasetHeader] = None
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    if header is None:
                        header = DatasetHeader.model_validate_json(line)
                        _check_version("датасет", header.schema_version, DATASET_SCHEMA_VERSION, path)
                        continue
                    frame = AnnotatedFrame.model_validate_json(line)
                except ValidationError as e:
                    logger.error(
                        "Нарушение схемы датасета",
                        event="dataset_schema_error",
                        path=str(path),
                        line=line_no,
                        error=str(e),
                    )
                    raise SchemaViolationError(f"{path}: строка {line_no}: {e}", line=line_no) from e
                for obj in frame.objects:
                    if len(obj.teacher) != header.teacher_horizon:
                        raise SchemaViolationError(
                            f"{path}: строка {line_no}: траектория учителя длины {len(obj.teacher)},"
                            f" ожидалось {header.teacher_horizon}", line=line_no)
                frames.append(frame)
        if header is None:
            raise SchemaViolationError(f"{path}: пустой файл датасета", line=1)
        logger.debug("Датасет прочитан", event="dataset_read", path=str(path), frames=len(frames))
        return header, frames

    # ========== ЧЕКПОИНТЫ ==========

    @staticmethod
    def save_checkpoint(path: PathLike, params: PolicyParams, stage: TrainingStage, objective: ObjectiveConfig,
                        config: Optional[Dict[str, Any]] = None) -> str:
        path = _prepare(path)
        checkpoint = CheckpointFile(
            stage=stage,
            step=params.step,
            horizon=params.horizon,
            policy=params.config,
            limits=params.limits,
            objective=objective,
            params={name: w.tolist() for name, w in params.weights.items()},
            optimizer={
                "m": {name: w.tolist() for name, w in params.m.items()},
                "v": {name: w.tolist() for name, w in params.v.items()},
            },
            config=config or {},
        )
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(_dumps(checkpoint) + "\n")
        logger.checkpoint_saved(str(path), params.step, stage=stage.value)
        return file_digest(path)

    @staticmethod
    def load_checkpoint(path: PathLike) -> Tuple[PolicyParams, CheckpointFile]:
        """Параметры политики (с моментами Adam и счетчиком шагов) и метаданные"""
        checkpoint = StorageService._read_model(path, CheckpointFile)
        _check_version("чекпоинт", checkpoint.schema_version, CHECKPOINT_SCHEMA_VERSION, path)

        def arrays(values: Dict[str, List]) -> Dict[str, np.ndarray]:
            return {name: np.asarray(w, dtype=float) for name, w in values.items()}

        try:
            params = PolicyParams(
                config=checkpoint.policy,
                horizon=checkpoint.horizon,
                limits=checkpoint.limits,
                weights=arrays(checkpoint.params),
                m=arrays(checkpoint.optimizer.get("m", {})),
                v=arrays(checkpoint.optimizer.get("v", {})),
                step=checkpoint.step,
            )
        except ValueError as e:
            raise SchemaViolationError(f"{path}: {e}") from e
        logger.debug("Чекпоинт загружен", event="checkpoint_loaded", path=str(path), step=checkpoint.step)
        return params, checkpoint

    @staticmethod
    def write_csv(path: PathLike, rows: Iterable[Dict[str, Any]], fields: Sequence[str]) -> None:
        path = _prepare(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(fields), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: row[key] for key in fields})

    # ========== МИРЫ, НАБОРЫ, ОТЧЕТЫ ==========

    @staticmethod
    def _read_model(path: PathLike, model: Type[ModelT]) -> ModelT:
        try:
            with open(path, "r", encoding="utf-8") as f:
                return model.model_validate_json(f.read())
        except ValidationError as e:
            logger.error(
                "Нарушение схемы файла",
                event="file_schema_error",
                path=str(path),
                model=model.__name__,
                error=str(e),
            )
            raise SchemaViolationError(f"{path}: {e}") from e

    @staticmethod
    def write_world(path: PathLike, world_file: WorldFile) -> str:
        path = _prepare(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(_dumps(world_file) + "\n")
        return file_digest(path)

    @staticmethod
    def read_world(path: PathLike) -> WorldFile:
        world_file = StorageService._read_model(path, WorldFile)
        _check_version("мир", world_file.schema_version, WORLD_SCHEMA_VERSION, path)
        return world_file

    @staticmethod
    def write_suite(path: PathLike, episodes: Sequence[Episode], config: Optional[Dict[str, Any]] = None) -> str:
        path = _prepare(path)
        header = SuiteHeader(episodes=len(episodes), config=config or {})
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(_dumps(header) + "\n")
            for episode in episodes:
                f.write(_dumps(episode) + "\n")
        logger.info("Набор эпизодов записан", event="suite_written", path=str(path), episodes=len(episodes))
        return file_digest(path)

    @staticmethod
    def read_suite(path: PathLike) -> List[Episode]:
        episodes: List[Episode] = []
        header: Optional[SuiteHeader] = None
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    if header is None:
                        header = SuiteHeader.model_validate_json(line)
                        _check_version("набор эпизодов", header.schema_version, SUITE_SCHEMA_VERSION, path)
                    else:
                        episodes.append(Episode.model_validate_json(line))
                except ValidationError as e:
                    raise SchemaViolationError(f"{path}: строка {line_no}: {e}", line=line_no) from e
        if header is None:
            raise SchemaViolationError(f"{path}: пустой файл набора", line=1)
        if header.episodes != len(episodes):
            raise SchemaViolationError(f"{path}: заявлено {header.episodes} эпизодов, найдено {len(episodes)}")
        return episodes

    @staticmethod
    def write_report(path: PathLike, report: EvalReport) -> str:
        path = _prepare(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False) + "\n")
        return file_digest(path)

    @staticmethod
    def read_report(path: PathLike) -> EvalReport:
        report = StorageService._read_model(path, EvalReport)
        _check_version("отчет", report.schema_version, REPORT_SCHEMA_VERSION, path)
        return report

    # ========== ТРАССЫ И ТРАЕКТОРИИ ==========

    @staticmethod
    def write_trace(path: PathLike, entries: Sequence[PlanTraceEntry]) -> None:
        path = _prepare(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for entry in entries:
                f.write(_dumps(entry) + "\n")

    @staticmethod
    def read_trace(path: PathLike) -> List[PlanTraceEntry]:
        with open(path, "r", encoding="utf-8") as f:
            return [PlanTraceEntry.model_validate_json(line) for line in f if line.strip()]

    @staticmethod
    def write_trajectory_csv(path: PathLike, samples: Sequence[TrajectorySample]) -> None:
        StorageService.write_csv(path, (sample.model_dump() for sample in samples), TRAJECTORY_FIELDS)

    @staticmethod
    def read_trajectory_csv(path: PathLike) -> List[TrajectorySample]:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            missing = set(TRAJECTORY_FIELDS) - set(reader.fieldnames or [])
            if missing:
                raise SchemaViolationError(f"{path}: нет столбцов {sorted(missing)}", line=1)
            return [TrajectorySample(**{key: float(row[key]) for key in TRAJECTORY_FIELDS}) for row in reader]
