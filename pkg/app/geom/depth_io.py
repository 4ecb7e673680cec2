"""
Чтение и запись карт глубины

Бинарный формат (little-endian):
    b"DMAP" | uint16 версия | uint32 ширина | uint32 высота | float32[высота * ширина]
Данные по строкам, невалидный пиксель -- NaN. CSV: одна строка изображения на строку файла.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from app.utils.errors import SchemaViolationError
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

DEPTH_MAGIC = b"DMAP"
DEPTH_VERSION = 1
_HEADER = struct.Struct("<4sHII")

PathLike = Union[str, Path]


def depth_to_bytes(depth: np.ndarray) -> bytes:
    """Сериализация карты глубины в бинарный формат"""
    depth = np.asarray(depth, dtype=float)
    if depth.ndim != 2:
        raise SchemaViolationError(f"карта глубины должна быть 2D, получено {depth.shape}")
    height, width = depth.shape
    return _HEADER.pack(DEPTH_MAGIC, DEPTH_VERSION, width, height) + np.ascontiguousarray(depth, dtype="<f4").tobytes()


def write_depth_map(path: PathLike, depth: np.ndarray) -> None:
    """Запись карты глубины в бинарном формате"""
    Path(path).write_bytes(depth_to_bytes(depth))
    height, width = np.shape(depth)
    logger.debug("Карта глубины записана", event="depth_written", path=str(path), width=width, height=height)


def read_depth_map(path: PathLike) -> np.ndarray:
    """Чтение бинарной карты глубины в float64 (H, W)"""
    return depth_from_bytes(Path(path).read_bytes(), source=str(path))


def depth_from_bytes(data: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(data) < _HEADER.size:
        raise SchemaViolationError(f"{source}: файл короче заголовка")
    magic, version, width, height = _HEADER.unpack_from(data)
    if magic != DEPTH_MAGIC:
        raise SchemaViolationError(f"{source}: неизвестная сигнатура {magic!r}")
    if version != DEPTH_VERSION:
        raise SchemaViolationError(f"{source}: неподдерживаемая версия {version}")
    expected = _HEADER.size + 4 * width * height
    if len(data) != expected:
        raise SchemaViolationError(f"{source}: ожидалось {expected} байт, получено {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size, count=width * height)
    return values.astype(float).reshape(height, width)


def write_depth_csv(path: PathLike, depth: np.ndarray) -> None:
    np.savetxt(path, np.asarray(depth, dtype=float), delimiter=",", fmt="%.9g")


def read_depth_csv(path: PathLike) -> np.ndarray:
    """Чтение CSV карты глубины; пустые ячейки и 'nan' -- невалидные пиксели"""
    try:
        depth = np.genfromtxt(path, delimiter=",", dtype=float, filling_values=np.nan)
    except ValueError as e:
        raise SchemaViolationError(f"{path}: {e}") from e
    return np.atleast_2d(depth)
