"""
Замороженный кодировщик инструкций: мешок токенов со случайной проекцией

У кодировщика нет обучаемых параметров: вектор токена порождается
генератором с зерном от стабильного хэша токена.
"""
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List

import numpy as np

from app.utils.errors import EmptyPromptError
from app.utils.helpers import stable_hash

DEFAULT_DIM = 64

# Служебные слова инструкции не несут информации об объекте
STOPWORDS = frozenset({"go", "to", "the", "a", "an", "one", "thing", "object"})

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> List[str]:
    """Токены в нижнем регистре без служебных слов (если остается хоть один)"""
    tokens = _TOKEN_RE.findall(text.lower())
    content = [token for token in tokens if token not in STOPWORDS]
    return content or tokens


@lru_cache(maxsize=4096)
def _token_vector(token: str, dim: int) -> np.ndarray:
    vec = np.random.default_rng(stable_hash(token)).standard_normal(dim)
    vec.setflags(write=False)
    return vec


@lru_cache(maxsize=8192)
def _encode(text: str, dim: int) -> np.ndarray:
    tokens = tokenize(text)
    if not tokens:
        raise EmptyPromptError()
    vec = np.sum([_token_vector(token, dim) for token in tokens], axis=0)
    vec = vec / np.linalg.norm(vec)
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True)
class InstructionEmbedding:
    """Единичный вектор инструкции"""
    text: str
    vec: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.vec.shape[0])

    def cosine(self, other: "InstructionEmbedding") -> float:
        return float(self.vec @ other.vec)


def encode_text(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Вектор (dim,) для произвольного описания; массив только для чтения"""
    if not text or not text.strip():
        raise EmptyPromptError()
    return _encode(text.strip().lower(), dim)


def encode_instruction(prompt: str, dim: int = DEFAULT_DIM) -> InstructionEmbedding:
    """Детерминированное кодирование инструкции"""
    return InstructionEmbedding(text=prompt, vec=encode_text(prompt, dim))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Косинус между векторами; 0 для нулевых"""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
