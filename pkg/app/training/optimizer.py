"""
Оптимизатор Adam для параметров политики
"""
from typing import Dict, Tuple

import numpy as np

from app.schemas.config import TrainConfig
from app.training.network import PolicyParams
from app.utils.errors import DivergenceError, ShapeMismatchError


def adam_update(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray, step: int,
                lr: float, beta1: float = 0.9, beta2: float = 0.999,
                eps: float = 1e-8) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Один шаг Adam для массива

    Args:
        step: номер шага после инкремента (начиная с 1)

    Returns:
        (новый параметр, новый m, новый v)
    """
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** step)
    v_hat = v / (1.0 - beta2 ** step)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


def adam_step(params: PolicyParams, grads: Dict[str, np.ndarray], cfg: TrainConfig) -> PolicyParams:
    """Обновление весов и моментов на месте; счетчик шагов увеличивается"""
    for name, weight in params.weights.items():
        if name not in grads:
            raise ShapeMismatchError(f"нет градиента для {name}")
        if grads[name].shape != weight.shape:
            raise ShapeMismatchError(f"{name}: градиент {grads[name].shape}, параметр {weight.shape}")
        if not np.all(np.isfinite(grads[name])):
            raise DivergenceError()

    params.step += 1
    for name in params.weights:
        params.weights[name], params.m[name], params.v[name] = adam_update(
            params.weights[name], grads[name], params.m[name], params.v[name], params.step,
            cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps,
        )
    return params
