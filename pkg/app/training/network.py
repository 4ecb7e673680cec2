"""
FiLM-политика: MLP с модуляцией скрытого слоя эмбеддингом инструкции

    h1  = silu(W1 x + b1)
    [g, b] = Wf e + bf
    h1' = (1 + g) * h1 + b
    h2  = silu(W2 h1' + b2)
    out = W3 h2 + b3          -> (N, 2) сырые команды
    v   = mid + half * tanh(out_v),  omega = omega_max * tanh(out_w)

Градиенты считаются вручную обратным проходом.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from app.schemas.config import PolicyConfig
from app.schemas.models import CommandSequence, TwistLimits
from app.training.encoder import InstructionEmbedding
from app.training.features import ObservationFeature
from app.utils.errors import ShapeMismatchError

PARAM_NAMES = ("W1", "b1", "Wf", "bf", "W2", "b2", "W3", "b3")
FILM_NAMES = ("Wf", "bf")


def _sigmoid(a: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _silu(a: np.ndarray) -> np.ndarray:
    return a * _sigmoid(a)


def _silu_grad(a: np.ndarray) -> np.ndarray:
    s = _sigmoid(a)
    return s * (1.0 + a * (1.0 - s))


# ========== ПАРАМЕТРЫ ==========
@dataclass
class PolicyParams:
    """Веса политики, моменты Adam и счетчик шагов"""
    config: PolicyConfig
    horizon: int
    limits: TwistLimits
    weights: Dict[str, np.ndarray]
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        expected = self.shapes(self.config, self.horizon)
        for name, shape in expected.items():
            if name not in self.weights:
                raise ShapeMismatchError(f"нет параметра {name}")
            if self.weights[name].shape != shape:
                raise ShapeMismatchError(f"{name}: форма {self.weights[name].shape}, ожидалось {shape}")
        for moments in (self.m, self.v):
            for name, shape in expected.items():
                moments.setdefault(name, np.zeros(shape))

    @staticmethod
    def shapes(cfg: PolicyConfig, horizon: int) -> Dict[str, Tuple[int, ...]]:
        h = cfg.hidden
        return {
            "W1": (h, cfg.input_dim),
            "b1": (h,),
            "Wf": (2 * h, cfg.embedding_dim),
            "bf": (2 * h,),
            "W2": (h, h),
            "b2": (h,),
            "W3": (2 * horizon, h),
            "b3": (2 * horizon,),
        }

    @classmethod
    def zeros(cls, cfg: PolicyConfig, horizon: int, limits: TwistLimits) -> "PolicyParams":
        weights = {name: np.zeros(shape) for name, shape in cls.shapes(cfg, horizon).items()}
        return cls(config=cfg, horizon=horizon, limits=limits, weights=weights)

    @classmethod
    def initialize(cls, cfg: PolicyConfig, horizon: int, limits: TwistLimits,
                   rng: np.random.Generator) -> "PolicyParams":
        """Нормальная инициализация с масштабом 1/sqrt(fan_in); выходной и FiLM слои уменьшены"""
        shapes = cls.shapes(cfg, horizon)
        gains = {"W1": 1.0, "W2": 1.0, "Wf": 0.1, "W3": 0.1}
        weights = {}
        for name, shape in shapes.items():
            if name.startswith("b"):
                weights[name] = np.zeros(shape)
            else:
                scale = cfg.init_scale * gains[name] / np.sqrt(shape[1])
                weights[name] = rng.standard_normal(shape) * scale
        return cls(config=cfg, horizon=horizon, limits=limits, weights=weights)

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            config=self.config,
            horizon=self.horizon,
            limits=self.limits,
            weights={k: w.copy() for k, w in self.weights.items()},
            m={k: w.copy() for k, w in self.m.items()},
            v={k: w.copy() for k, w in self.v.items()},
            step=self.step,
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights.values())


# ========== ПРЯМОЙ И ОБРАТНЫЙ ПРОХОД ==========
@dataclass
class ForwardCache:
    """Промежуточные активации для обратного прохода"""
    x: np.ndarray
    e: np.ndarray
    a1: np.ndarray
    h1: np.ndarray
    gamma: np.ndarray
    h1m: np.ndarray
    a2: np.ndarray
    h2: np.ndarray
    t: np.ndarray        # tanh сырых выходов, (B, N, 2)


def _scales(params: PolicyParams) -> Tuple[float, float, float]:
    lim = params.limits
    return 0.5 * (lim.v_min + lim.v_max), 0.5 * (lim.v_max - lim.v_min), lim.omega_max


def forward_batch(params: PolicyParams, x: np.ndarray, e: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """
    Пакетный прямой проход

    Args:
        x: (B, input_dim) признаки наблюдений
        e: (B, embedding_dim) эмбеддинги инструкций

    Returns:
        команды (B, N, 2) и кэш активаций
    """
    cfg = params.config
    x = np.atleast_2d(np.asarray(x, dtype=float))
    e = np.atleast_2d(np.asarray(e, dtype=float))
    if x.shape[1] != cfg.input_dim:
        raise ShapeMismatchError(f"вход размера {x.shape[1]}, ожидалось {cfg.input_dim}")
    if e.shape[1] != cfg.embedding_dim:
        raise ShapeMismatchError(f"эмбеддинг размера {e.shape[1]}, ожидалось {cfg.embedding_dim}")
    if x.shape[0] != e.shape[0]:
        raise ShapeMismatchError(f"размеры пакета различаются: {x.shape[0]} и {e.shape[0]}")

    w = params.weights
    h = cfg.hidden
    a1 = x @ w["W1"].T + w["b1"]
    h1 = _silu(a1)
    film = e @ w["Wf"].T + w["bf"]
    gamma, beta = film[:, :h], film[:, h:]
    h1m = (1.0 + gamma) * h1 + beta
    a2 = h1m @ w["W2"].T + w["b2"]
    h2 = _silu(a2)
    raw = (h2 @ w["W3"].T + w["b3"]).reshape(-1, params.horizon, 2)
    t = np.tanh(raw)

    mid, half, omega_max = _scales(params)
    commands = np.empty_like(t)
    commands[..., 0] = mid + half * t[..., 0]
    commands[..., 1] = omega_max * t[..., 1]
    return commands, ForwardCache(x=x, e=e, a1=a1, h1=h1, gamma=gamma, h1m=h1m, a2=a2, h2=h2, t=t)


def backward_batch(params: PolicyParams, cache: ForwardCache, upstream: np.ndarray) -> Dict[str, np.ndarray]:
    """Градиенты по всем параметрам, суммированные по пакету; upstream (B, N, 2)"""
    upstream = np.asarray(upstream, dtype=float).reshape(cache.t.shape)
    w = params.weights
    _, half, omega_max = _scales(params)

    d_raw = np.empty_like(upstream)
    d_raw[..., 0] = upstream[..., 0] * half * (1.0 - cache.t[..., 0] ** 2)
    d_raw[..., 1] = upstream[..., 1] * omega_max * (1.0 - cache.t[..., 1] ** 2)
    d_out = d_raw.reshape(d_raw.shape[0], -1)

    grads: Dict[str, np.ndarray] = {}
    grads["W3"] = d_out.T @ cache.h2
    grads["b3"] = d_out.sum(axis=0)
    d_a2 = (d_out @ w["W3"]) * _silu_grad(cache.a2)
    grads["W2"] = d_a2.T @ cache.h1m
    grads["b2"] = d_a2.sum(axis=0)
    d_h1m = d_a2 @ w["W2"]
    d_film = np.concatenate([d_h1m * cache.h1, d_h1m], axis=1)
    grads["Wf"] = d_film.T @ cache.e
    grads["bf"] = d_film.sum(axis=0)
    d_a1 = d_h1m * (1.0 + cache.gamma) * _silu_grad(cache.a1)
    grads["W1"] = d_a1.T @ cache.x
    grads["b1"] = d_a1.sum(axis=0)
    return grads


def policy_forward(params: PolicyParams, obs: ObservationFeature, instr: InstructionEmbedding,
                   dt: float = 0.333) -> CommandSequence:
    """Последовательность из N команд для одного наблюдения и инструкции"""
    x = obs.as_vector(params.config.history)[None, :]
    commands, _ = forward_batch(params, x, instr.vec[None, :])
    return CommandSequence.from_array(commands[0], dt=dt)


def policy_backward(params: PolicyParams, obs: ObservationFeature, instr: InstructionEmbedding,
                    upstream: np.ndarray) -> Dict[str, np.ndarray]:
    """Градиент по параметрам для одного примера; upstream -- dL/dкоманды (N, 2)"""
    x = obs.as_vector(params.config.history)[None, :]
    _, cache = forward_batch(params, x, instr.vec[None, :])
    return backward_batch(params, cache, np.asarray(upstream, dtype=float)[None, ...])

