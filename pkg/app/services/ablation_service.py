"""
Сервис абляции: ошибка позы на отложенных кадрах в зависимости от размера датасета
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.schemas.config import AblationConfig, ObjectiveConfig, PolicyConfig, TrainConfig, TrainingStage
from app.schemas.dataset import AnnotatedFrame
from app.schemas.models import TwistLimits
from app.training.trainer import PolicyTrainer, held_out_pose_mse
from app.utils.errors import ConfigError
from app.utils.helpers import child_rng
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

RUN_FIELDS = ("fraction", "frames", "seed", "mse")
TABLE_FIELDS = ("fraction", "frames", "median_mse")


@dataclass
class AblationResult:
    """Запуски по (доля, seed) и сводная таблица медиан по долям"""
    runs: List[Dict[str, float]] = field(default_factory=list)
    table: List[Dict[str, float]] = field(default_factory=list)


class AblationService:
    """Обучение на вложенных долях датасета с общим разбиением"""

    def __init__(self, cfg: AblationConfig, train_cfg: TrainConfig, objective_cfg: ObjectiveConfig,
                 policy_cfg: PolicyConfig, limits: TwistLimits, dt: float = 0.333, seed: int = 0):
        self.cfg = cfg
        self.train_cfg = train_cfg.model_copy(update={"stage": TrainingStage.PRETRAIN})
        self.objective_cfg = objective_cfg
        self.policy_cfg = policy_cfg
        self.limits = limits
        self.dt = dt
        self.seed = seed

        logger.info(
            "AblationService инициализирован",
            event="ablation_service_init",
            fractions=list(cfg.fractions),
            seeds=list(cfg.seeds),
            held_out_fraction=cfg.held_out_fraction,
        )

    def split(self, frames: Sequence[AnnotatedFrame]) -> Tuple[List[AnnotatedFrame], List[AnnotatedFrame]]:
        """Кадры с объектами -> (обучающие в перемешанном порядке, отложенные)"""
        labeled = [frame for frame in frames if frame.objects]
        if len(labeled) < 2:
            raise ConfigError("для абляции нужно хотя бы два кадра с объектами")
        order = child_rng(self.seed, "ablation-split").permutation(len(labeled))
        held = max(1, int(math.ceil(len(labeled) * self.cfg.held_out_fraction)))
        held = min(held, len(labeled) - 1)
        return [labeled[i] for i in order[held:]], [labeled[i] for i in order[:held]]

    def nested_subsets(self, train_frames: Sequence[AnnotatedFrame]) -> Dict[float, List[AnnotatedFrame]]:
        """Префиксы одного перемешивания: меньшая доля всегда вложена в большую"""
        subsets = {}
        for fraction in sorted(self.cfg.fractions):
            count = max(1, int(round(fraction * len(train_frames))))
            subsets[fraction] = list(train_frames[:count])
        return subsets

    def run(self, frames: Sequence[AnnotatedFrame]) -> AblationResult:
        train_frames, held_out = self.split(frames)
        result = AblationResult()
        for fraction, subset in self.nested_subsets(train_frames).items():
            errors = []
            for seed in self.cfg.seeds:
                trainer = PolicyTrainer(self.train_cfg.model_copy(update={"seed": seed}), self.objective_cfg,
                                        self.policy_cfg, self.limits, self.dt)
                params = trainer.train(subset).params
                mse = held_out_pose_mse(params, held_out, self.dt)
                errors.append(mse)
                result.runs.append({"fraction": fraction, "frames": len(subset), "seed": seed, "mse": mse})
            median = float(np.median(errors))
            result.table.append({"fraction": fraction, "frames": len(subset), "median_mse": median})
            logger.info(
                f"Доля {fraction}: медиана MSE {median:.4f}",
                event="ablation_fraction_done",
                fraction=fraction,
                frames=len(subset),
                median_mse=median,
            )
        return result


def run_ablation(frames: Sequence[AnnotatedFrame], cfg: AblationConfig, train_cfg: TrainConfig,
                 objective_cfg: ObjectiveConfig, policy_cfg: Optional[PolicyConfig] = None,
                 limits: Optional[TwistLimits] = None, dt: float = 0.333, seed: int = 0) -> AblationResult:
    return AblationService(cfg, train_cfg, objective_cfg, policy_cfg or PolicyConfig(),
                           limits or TwistLimits(), dt, seed).run(frames)
