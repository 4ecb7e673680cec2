import hashlib
import math
from pathlib import Path
from typing import Dict, Iterable, Union

import numpy as np


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 содержимого файла (hex)"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def stable_hash(text: str) -> int:
    """Детерминированный 64-битный хэш строки (не зависит от PYTHONHASHSEED)"""
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def child_rng(seed: int, *keys: Union[int, str]) -> np.random.Generator:
    """
    Дочерний генератор для (seed, ключи)

    Позволяет получать одинаковые случайные числа для кадра или эпизода
    независимо от порядка обработки.
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        entropy.append(stable_hash(key) & 0xFFFFFFFF if isinstance(key, str) else int(key) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def format_rate(value: float) -> str:
    """Форматирование доли в проценты"""
    if value is None or math.isnan(value):
        return "n/a"
    return f"{value * 100:.1f}%"


def mean_of_dicts(rows: Iterable[Dict[str, float]]) -> Dict[str, float]:
    """Покомпонентное среднее списка словарей с одинаковыми ключами"""
    rows = list(rows)
    if not rows:
        return {}
    return {key: float(np.mean([row[key] for row in rows])) for key in rows[0]}
