"""
Загрузка RunConfig: плоский key=value файл + переопределения --set

Вложенные ключи записываются через двойное подчеркивание:
    train__learning_rate=1e-3
    camera__intrinsics__fx=60
Списки -- через запятую или JSON-массивом: ablation__seeds=0,1,2.
Разбиение на список выполняется только для полей-кортежей RunConfig.
"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Union, get_args, get_origin

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from app.schemas.config import RunConfig
from app.utils import config
from app.utils.errors import ConfigError


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    """Пары KEY=VALUE из аргументов --set"""
    overrides = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"ожидалось KEY=VALUE, получено {item!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def _field_annotation(parts: Sequence[str]) -> Any:
    """Аннотация поля RunConfig по пути ключа; None для неизвестного пути"""
    annotation: Any = RunConfig
    for part in parts:
        if not (isinstance(annotation, type) and issubclass(annotation, BaseModel)):
            return None
        field = annotation.model_fields.get(part)
        if field is None:
            return None
        annotation = field.annotation
    return annotation


def _is_sequence(annotation: Any) -> bool:
    origin = get_origin(annotation)
    if origin in (tuple, list):
        return True
    if origin is Union:
        return any(_is_sequence(arg) for arg in get_args(annotation))
    return False


def _parse_value(value: Optional[str], sequence: bool) -> Any:
    if value is None or not sequence:
        return value
    if value.startswith("["):
        try:
            return json.loads(value)
        except json.JSONDecodeError as e:
            raise ConfigError(f"некорректный список {value!r}: {e}") from e
    return [part.strip() for part in value.split(",") if part.strip()]


def nest(flat: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    """{'a__b': v} -> {'a': {'b': v}}"""
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        parts = key.strip().split("__")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"ключ {key} конфликтует со значением {part}")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"ключ {key} задает секцию целиком")
        node[parts[-1]] = _parse_value(value, _is_sequence(_field_annotation(parts)))
    return nested


def env_defaults() -> Dict[str, str]:
    """Значения из окружения LASTMILE_*: нижний слой конфигурации"""
    settings = config.settings
    return {
        "seed": str(settings.default_seed),
        "sim__workers": str(settings.workers),
        "train__workers": str(settings.workers),
        "annotation__concurrency": str(settings.annotation_concurrency),
    }


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    RunConfig: окружение, затем файл, затем переопределения

    Неизвестные ключи и некорректные значения -> ConfigError.
    """
    flat: Dict[str, Optional[str]] = dict(env_defaults())
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"файл конфигурации не найден: {path}")
        flat.update(dotenv_values(path))
    flat.update(overrides or {})
    try:
        return RunConfig.model_validate(nest(flat))
    except ValidationError as e:
        raise ConfigError(f"некорректная конфигурация: {e}") from e
