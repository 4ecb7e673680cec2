"""
Генерация инструкций для объекта: simple, descriptive, noisy, implicit
"""
import json
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.schemas.config import AnnotationConfig
from app.schemas.dataset import ObjectSpec, PromptCategory, PromptLabel

DECOYS_PATH = Path(__file__).parent / "data" / "decoys.json"

# Дополнительные простые формулировки, если промптов меньше min_prompts
_SIMPLE_TEMPLATES = ("go to the {noun}", "go to a {noun}", "go to that {noun}", "go to this {noun}")


@lru_cache(maxsize=None)
def load_decoys(path: Path = DECOYS_PATH) -> Tuple[str, ...]:
    with open(path, "r", encoding="utf-8") as f:
        return tuple(json.load(f)["adjectives"])


def confidence_filter(visibility: float, threshold: float = 0.5) -> bool:
    """Оставить объект, если видимость не ниже порога (граница включена)"""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"видимость {visibility} вне [0, 1]")
    return visibility >= threshold


def _phrase(attributes: Sequence[str], noun: str) -> str:
    return " ".join([*attributes, noun])


def _pick_decoy(rng: np.random.Generator, exclude: Sequence[str], decoys: Sequence[str]) -> Optional[str]:
    """Случайная обманка не из exclude; None, если выбирать не из чего"""
    choices = [d for d in decoys if d not in exclude]
    if not choices:
        return None
    return choices[int(rng.integers(len(choices)))]


def generate_prompts(obj: ObjectSpec, neighbors: Sequence[ObjectSpec], rng: np.random.Generator,
                     cfg: Optional[AnnotationConfig] = None,
                     decoys: Optional[Sequence[str]] = None) -> List[PromptLabel]:
    """
    Набор инструкций для объекта

    Args:
        obj: целевой объект
        neighbors: соседние объекты, ближайший первым
        rng: генератор (все вызовы выполняются в фиксированном порядке)
        cfg: вероятности noisy/implicit и границы числа промптов
        decoys: прилагательные-обманки

    Returns:
        Список PromptLabel без повторов текста, от min_prompts до max_prompts штук
    """
    cfg = cfg or AnnotationConfig()
    decoys = decoys if decoys is not None else load_decoys()
    noun = obj.class_noun
    attrs = list(obj.attributes)
    noise_draw, implicit_draw = rng.random(), rng.random()

    prompts = [PromptLabel(text=f"go to the {noun}", category=PromptCategory.SIMPLE)]

    if attrs:
        prompts.append(PromptLabel(text=f"go to the {_phrase(attrs, noun)}", category=PromptCategory.DESCRIPTIVE))
    if neighbors:
        prompts.append(PromptLabel(
            text=f"go to the {_phrase(attrs, noun)} next to the {neighbors[0].class_noun}",
            category=PromptCategory.DESCRIPTIVE,
        ))

    if noise_draw < cfg.noise_probability:
        position = int(rng.integers(len(attrs))) if attrs else 0
        decoy = _pick_decoy(rng, attrs, decoys)
        # без обманки остается простой промпт
        if decoy is not None:
            noisy = attrs.copy() if attrs else [decoy]
            noisy[position] = decoy
            prompts.append(PromptLabel(text=f"go to the {_phrase(noisy, noun)}", category=PromptCategory.NOISY))

    if implicit_draw < cfg.implicit_probability and attrs:
        prompts.append(PromptLabel(text=f"go to the {' '.join(attrs)} one", category=PromptCategory.IMPLICIT))

    for template in _SIMPLE_TEMPLATES[1:]:
        if len(prompts) >= cfg.min_prompts:
            break
        prompts.append(PromptLabel(text=template.format(noun=noun), category=PromptCategory.SIMPLE))

    unique: List[PromptLabel] = []
    seen = set()
    for prompt in prompts:
        if prompt.text not in seen:
            seen.add(prompt.text)
            unique.append(prompt)
    return unique[:cfg.max_prompts]
