"""
Обучение политики: выборка пакетов, предобучение без J_col и дообучение с учителем
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.geom.kinematics import rollout_array
from app.schemas.config import ObjectiveConfig, PolicyConfig, TrainConfig, TrainingStage
from app.schemas.dataset import AnnotatedFrame
from app.schemas.models import TwistLimits
from app.training.encoder import encode_instruction
from app.training.features import featurize
from app.training.network import PolicyParams, backward_batch, forward_batch
from app.training.objective import BatchObjective, batch_objective
from app.training.optimizer import adam_step
from app.utils.errors import ConfigError, DivergenceError, LabError, ShapeMismatchError
from app.utils.helpers import child_rng, mean_of_dicts
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

CURVE_FIELDS = ("stage", "epoch", "step", "j_pose", "j_col", "j_smooth", "total", "epsilon")


# ========== ДАННЫЕ ==========
@dataclass
class TrainingBatch:
    """Пакет примеров: (кадр, объект, промпт) и числовые массивы"""
    indices: List[Tuple[int, int, int]]
    features: np.ndarray      # (B, input_dim)
    embeddings: np.ndarray    # (B, D)
    goals: np.ndarray         # (B, 2)
    teachers: np.ndarray      # (B, M, 2)

    def __len__(self) -> int:
        return len(self.indices)

    def subset(self, rows: np.ndarray) -> "TrainingBatch":
        return TrainingBatch(
            indices=[self.indices[i] for i in rows],
            features=self.features[rows],
            embeddings=self.embeddings[rows],
            goals=self.goals[rows],
            teachers=self.teachers[rows],
        )


class TrainingSet:
    """Кадры с размеченными объектами и кэш признаков по (кадр, промпт)"""

    def __init__(self, frames: Sequence[AnnotatedFrame], policy_cfg: PolicyConfig, teacher_horizon: int):
        self.frames = [frame for frame in frames if frame.objects]
        if not self.frames:
            raise LabError("в датасете нет кадров с размеченными объектами")
        self.policy_cfg = policy_cfg
        self.teacher_horizon = teacher_horizon
        self._features: Dict[Tuple[int, str], Tuple[np.ndarray, np.ndarray]] = {}

        for frame in self.frames:
            for obj in frame.objects:
                if len(obj.teacher) < teacher_horizon:
                    raise ShapeMismatchError(
                        f"кадр {frame.frame_id}: учитель длиной {len(obj.teacher)}, нужно {teacher_horizon}")

    def __len__(self) -> int:
        return len(self.frames)

    def _encoded(self, frame_index: int, prompt: str) -> Tuple[np.ndarray, np.ndarray]:
        key = (frame_index, prompt)
        if key not in self._features:
            instr = encode_instruction(prompt, self.policy_cfg.embedding_dim)
            feature = featurize(self.frames[frame_index].observation, instr, self.policy_cfg)
            self._features[key] = (feature.as_vector(self.policy_cfg.history), instr.vec)
        return self._features[key]

    def sample_indices(self, rng: np.random.Generator, size: int) -> List[Tuple[int, int, int]]:
        """Равномерно кадр, затем объект кадра, затем промпт объекта"""
        indices = []
        for _ in range(size):
            i = int(rng.integers(len(self.frames)))
            frame = self.frames[i]
            j = int(rng.integers(len(frame.objects)))
            g = int(rng.integers(len(frame.objects[j].prompts)))
            indices.append((i, j, g))
        return indices

    def all_indices(self) -> List[Tuple[int, int, int]]:
        """Все тройки (кадр, объект, промпт) в порядке файла"""
        return [(i, j, g)
                for i, frame in enumerate(self.frames)
                for j, obj in enumerate(frame.objects)
                for g in range(len(obj.prompts))]

    def batch(self, indices: List[Tuple[int, int, int]]) -> TrainingBatch:
        features, embeddings, goals, teachers = [], [], [], []
        for i, j, g in indices:
            obj = self.frames[i].objects[j]
            x, e = self._encoded(i, obj.prompts[g].text)
            features.append(x)
            embeddings.append(e)
            goals.append((obj.pose_x, obj.pose_y))
            teachers.append([(p.x, p.y) for p in obj.teacher[:self.teacher_horizon]])
        return TrainingBatch(
            indices=list(indices),
            features=np.array(features),
            embeddings=np.array(embeddings),
            goals=np.array(goals, dtype=float),
            teachers=np.array(teachers, dtype=float).reshape(len(indices), self.teacher_horizon, 2),
        )


def sample_batch(dataset: TrainingSet, rng: np.random.Generator, size: int = 256) -> TrainingBatch:
    """Случайный пакет (наблюдение, инструкция, цель, учитель)"""
    return dataset.batch(dataset.sample_indices(rng, size))


# ========== ГРАДИЕНТ ==========
def loss_and_grad(params: PolicyParams, batch: TrainingBatch, objective_cfg: ObjectiveConfig,
                  dt: float) -> Tuple[BatchObjective, Dict[str, np.ndarray]]:
    """Целевая функция по примерам и градиент суммы по параметрам"""
    commands, cache = forward_batch(params, batch.features, batch.embeddings)
    objective = batch_objective(commands, batch.goals, batch.teachers, objective_cfg, dt)
    return objective, backward_batch(params, cache, objective.grad_commands)


def _concat_objectives(parts: List[BatchObjective]) -> BatchObjective:
    return BatchObjective(
        j_pose=np.concatenate([p.j_pose for p in parts]),
        j_col=np.concatenate([p.j_col for p in parts]),
        j_smooth=np.concatenate([p.j_smooth for p in parts]),
        epsilon=np.concatenate([p.epsilon for p in parts]),
        total=np.concatenate([p.total for p in parts]),
        grad_commands=np.concatenate([p.grad_commands for p in parts]),
    )


def mean_loss_and_grad(params: PolicyParams, batch: TrainingBatch, objective_cfg: ObjectiveConfig, dt: float,
                       chunks: int = 1, executor: Optional[ThreadPoolExecutor] = None):
    """
    Среднее по пакету; при chunks > 1 части считаются параллельно

    Части суммируются в фиксированном порядке, результат не зависит от
    порядка завершения потоков.
    """
    if chunks <= 1 or executor is None:
        objective, grads = loss_and_grad(params, batch, objective_cfg, dt)
    else:
        parts = [batch.subset(rows) for rows in np.array_split(np.arange(len(batch)), chunks) if len(rows)]
        results = list(executor.map(lambda part: loss_and_grad(params, part, objective_cfg, dt), parts))
        objective = _concat_objectives([r[0] for r in results])
        grads = {name: sum(r[1][name] for r in results) for name in results[0][1]}
    scale = 1.0 / len(batch)
    return objective, {name: g * scale for name, g in grads.items()}


# ========== ОБУЧЕНИЕ ==========
@dataclass
class TrainResult:
    """Обученные параметры и кривые потерь"""
    params: PolicyParams
    stage: TrainingStage
    curve: List[Dict[str, float]] = field(default_factory=list)
    step_losses: List[float] = field(default_factory=list)


class PolicyTrainer:
    """Сервис обучения политики"""

    def __init__(self, train_cfg: TrainConfig, objective_cfg: ObjectiveConfig,
                 policy_cfg: PolicyConfig, limits: TwistLimits, dt: float = 0.333):
        self.train_cfg = train_cfg
        self.policy_cfg = policy_cfg
        self.limits = limits
        self.dt = dt

        if train_cfg.stage == TrainingStage.PRETRAIN:
            self.objective_cfg = objective_cfg.model_copy(update={"lambda_col": 0.0})
        else:
            self.objective_cfg = objective_cfg
            if objective_cfg.lambda_col == 0:
                logger.warning("Дообучение с lambda_col=0 не отличается от предобучения",
                               event="finetune_without_teacher")

        logger.info(
            "PolicyTrainer инициализирован",
            event="trainer_initialized",
            stage=train_cfg.stage.value,
            learning_rate=train_cfg.learning_rate,
            batch_size=train_cfg.batch_size,
            epochs=train_cfg.epochs,
            lambda_col=self.objective_cfg.lambda_col,
            horizon=self.objective_cfg.N,
            teacher_horizon=self.objective_cfg.M,
        )

    def initial_params(self, params: Optional[PolicyParams]) -> PolicyParams:
        if params is not None:
            if params.horizon != self.objective_cfg.N:
                raise ShapeMismatchError(f"чекпоинт с горизонтом {params.horizon}, ожидалось {self.objective_cfg.N}")
            return params.copy()
        if self.train_cfg.stage == TrainingStage.FINETUNE:
            raise ConfigError("дообучение требует чекпоинт предобучения")
        rng = child_rng(self.train_cfg.seed, "init")
        return PolicyParams.initialize(self.policy_cfg, self.objective_cfg.N, self.limits, rng)

    def train(self, frames: Sequence[AnnotatedFrame], params: Optional[PolicyParams] = None) -> TrainResult:
        """Обучение на кадрах датасета; детерминировано при фиксированном seed"""
        cfg = self.train_cfg
        dataset = TrainingSet(frames, self.policy_cfg, self.objective_cfg.M)
        params = self.initial_params(params)
        rng = child_rng(cfg.seed, "sample", cfg.stage.value, params.step)
        result = TrainResult(params=params, stage=cfg.stage)
        recent: List[Dict[str, float]] = []

        executor = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.grad_chunks > 1 else None
        try:
            for epoch in range(1, cfg.epochs + 1):
                epoch_rows = []
                for _ in range(cfg.steps_per_epoch):
                    batch = sample_batch(dataset, rng, cfg.batch_size)
                    objective, grads = mean_loss_and_grad(params, batch, self.objective_cfg, self.dt,
                                                          cfg.grad_chunks, executor)
                    row = objective.mean_breakdown()
                    if not math.isfinite(row["total"]):
                        raise DivergenceError(last_losses=recent[-5:])
                    try:
                        adam_step(params, grads, cfg)
                    except DivergenceError as e:
                        raise DivergenceError(last_losses=recent[-5:]) from e
                    recent.append(row)
                    epoch_rows.append(row)
                    result.step_losses.append(row["total"])

                curve_row = {"stage": cfg.stage.value, "epoch": epoch, "step": params.step}
                curve_row.update(mean_of_dicts(epoch_rows))
                result.curve.append(curve_row)
                logger.epoch_completed(cfg.stage.value, epoch, curve_row["total"],
                                       j_pose=curve_row["j_pose"], j_col=curve_row["j_col"],
                                       j_smooth=curve_row["j_smooth"], step=params.step)
        except DivergenceError as e:
            logger.error("Обучение разошлось", event="training_diverged",
                         step=params.step, last_losses=e.last_losses)
            raise
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return result


def train(dataset: Sequence[AnnotatedFrame], cfg: TrainConfig, objective_cfg: ObjectiveConfig,
          policy_cfg: Optional[PolicyConfig] = None, limits: Optional[TwistLimits] = None,
          params: Optional[PolicyParams] = None, dt: float = 0.333) -> TrainResult:
    """Одна стадия обучения (pretrain или finetune)"""
    trainer = PolicyTrainer(cfg, objective_cfg, policy_cfg or PolicyConfig(), limits or TwistLimits(), dt)
    return trainer.train(dataset, params)


# ========== ОЦЕНКА НА ОТЛОЖЕННЫХ КАДРАХ ==========
def held_out_pose_mse(params: PolicyParams, frames: Sequence[AnnotatedFrame], dt: float = 0.333) -> float:
    """Средний квадрат ошибки последней позы rollout относительно размеченной позы объекта"""
    labeled = [frame for frame in frames if frame.objects]
    if not labeled:
        return float("nan")
    dataset = TrainingSet(labeled, params.config, teacher_horizon=1)
    batch = dataset.batch(dataset.all_indices())
    commands, _ = forward_batch(params, batch.features, batch.embeddings)
    final = rollout_array(np.zeros(3), commands, dt)[:, -1, :2]
    return float(np.mean(np.sum((final - batch.goals) ** 2, axis=1)))
