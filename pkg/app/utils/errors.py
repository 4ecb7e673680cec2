"""
Иерархия доменных ошибок
"""
from typing import Dict, List, Optional


class LabError(Exception):
    """Базовая ошибка лаборатории"""


class GeometryError(LabError, ValueError):
    """Некорректные геометрические входные данные (NaN, точка за камерой)"""


class EmptyMaskError(GeometryError):
    """Маска не выбирает ни одной точки"""

    def __init__(self, message: str = "empty mask"):
        super().__init__(message)


class ShapeMismatchError(LabError, ValueError):
    """Несогласованные размеры массивов"""


class DivergenceError(LabError, ArithmeticError):
    """Обучение разошлось: нефинитные градиенты или потери"""

    def __init__(self, message: str = "diverged", last_losses: Optional[List[Dict[str, float]]] = None):
        super().__init__(message)
        self.last_losses = last_losses or []


class SchemaViolationError(LabError, ValueError):
    """Файл данных не соответствует схеме"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"{message} (строка {line})" if line is not None else message)
        self.line = line


class ConfigError(LabError, ValueError):
    """Ошибка конфигурации запуска"""


class BackendError(LabError, RuntimeError):
    """Сбой бэкенда разметки"""

    def __init__(self, message: str, frame_index: Optional[int] = None):
        prefix = f"кадр {frame_index}: " if frame_index is not None else ""
        super().__init__(prefix + message)
        self.frame_index = frame_index


class EmptyPromptError(LabError, ValueError):
    """Пустая инструкция"""

    def __init__(self, message: str = "empty prompt"):
        super().__init__(message)
