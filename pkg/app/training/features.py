"""
Числовой вход политики: K слотов кандидатов для текущего и предыдущего кадра

Слот = (rel_x, rel_y, sim), где sim -- косинус между описанием кандидата и
инструкцией. Слоты сортируются по sim по убыванию, при равенстве -- по
дальности по возрастанию. Пустые слоты заполнены нулями.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from app.schemas.config import PolicyConfig
from app.schemas.dataset import Candidate, FrameObservation
from app.training.encoder import InstructionEmbedding, encode_text
from app.utils.errors import ShapeMismatchError

SLOT_WIDTH = 3


@dataclass(frozen=True)
class ObservationFeature:
    """Слоты текущего кадра и блок предыдущего кадра"""
    current: np.ndarray           # (K, 3)
    current_valid: np.ndarray     # (K,)
    previous: np.ndarray          # (K, 3)
    previous_valid: np.ndarray    # (K,)

    @property
    def slots(self) -> int:
        return int(self.current.shape[0])

    def as_vector(self, history: int = 1) -> np.ndarray:
        """Плоский вектор длины K*3*(history+1)"""
        blocks = [self.current.reshape(-1)]
        if history:
            blocks.append(self.previous.reshape(-1))
        return np.concatenate(blocks)


def build_slots(candidates: Sequence[Candidate], instr: InstructionEmbedding, slots: int):
    """Слоты (K, 3) и маска валидности (K,) для списка кандидатов"""
    rows = []
    for candidate in candidates:
        sim = float(encode_text(candidate.label, instr.dim) @ instr.vec)
        rows.append((candidate.rel_x, candidate.rel_y, sim))
    rows.sort(key=lambda row: (-row[2], row[0] ** 2 + row[1] ** 2))

    values = np.zeros((slots, SLOT_WIDTH))
    valid = np.zeros(slots, dtype=bool)
    for i, row in enumerate(rows[:slots]):
        values[i] = row
        valid[i] = True
    return values, valid


def featurize(observation: FrameObservation, instr: InstructionEmbedding,
              cfg: PolicyConfig) -> ObservationFeature:
    """Признаки наблюдения для конкретной инструкции"""
    if instr.dim != cfg.embedding_dim:
        raise ShapeMismatchError(f"эмбеддинг размера {instr.dim}, ожидалось {cfg.embedding_dim}")
    current, current_valid = build_slots(observation.current, instr, cfg.slots)
    previous, previous_valid = build_slots(observation.previous, instr, cfg.slots)
    return ObservationFeature(current, current_valid, previous, previous_valid)


def stack_features(features: List[ObservationFeature], cfg: PolicyConfig) -> np.ndarray:
    """Матрица (B, input_dim)"""
    return np.stack([feature.as_vector(cfg.history) for feature in features])
