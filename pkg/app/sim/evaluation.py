"""
Оценка на наборе эпизодов: доли успеха по категориям и подсчет препятствий
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from app.schemas.config import CameraConfig, PlannerConfig, SimConfig
from app.schemas.world import (
    ControllerKind,
    Episode,
    EpisodeCategory,
    EpisodeRecord,
    EpisodeResult,
    EvalReport,
    Outcome,
)
from app.sim.controllers import Controller, PlannerController, PolicyController
from app.sim.episode import EpisodeRunner
from app.training.network import PolicyParams
from app.utils.errors import ConfigError
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


@dataclass
class EvaluationRun:
    """Отчет и траектории эпизодов в порядке записей отчета"""
    report: EvalReport
    results: List[EpisodeResult] = field(default_factory=list)


def _rate(records: Sequence[EpisodeRecord], outcome: Outcome) -> Optional[float]:
    if not records:
        return None
    return sum(record.outcome == outcome for record in records) / len(records)


def aggregate(records: Sequence[EpisodeRecord], config: Optional[Dict[str, Any]] = None) -> EvalReport:
    """Сводка по записям: основной набор по категориям, набор с препятствиями по чекпоинтам"""
    main = [record for record in records if not record.with_obstacles]
    per_category = {
        category: _rate([record for record in main if record.category == category], Outcome.SUCCESS)
        for category in EpisodeCategory
    }

    obstacle_arrival: Dict[str, float] = {}
    obstacle_collision: Dict[str, float] = {}
    for record in records:
        if record.with_obstacles and record.controller not in obstacle_arrival:
            group = [r for r in records if r.with_obstacles and r.controller == record.controller]
            obstacle_arrival[record.controller] = _rate(group, Outcome.SUCCESS)
            obstacle_collision[record.controller] = _rate(group, Outcome.COLLISION)

    return EvalReport(
        per_category=per_category,
        total=_rate(main, Outcome.SUCCESS) or 0.0,
        collision_rate=_rate(main, Outcome.COLLISION) or 0.0,
        obstacle_arrival=obstacle_arrival,
        obstacle_collision=obstacle_collision,
        episodes=list(records),
        config=config or {},
    )


class Evaluator:
    """Прогон набора эпизодов пулом потоков; результаты собираются в порядке постановки"""

    def __init__(self, camera: Optional[CameraConfig] = None, sim_cfg: Optional[SimConfig] = None,
                 planner_cfg: Optional[PlannerConfig] = None, dt: Optional[float] = None):
        self.camera = camera or CameraConfig()
        self.sim_cfg = sim_cfg or SimConfig()
        self.planner_cfg = planner_cfg or PlannerConfig()
        self.dt = dt if dt is not None else self.planner_cfg.dt
        self.runner = EpisodeRunner(self.camera, self.sim_cfg, self.planner_cfg.robot_radius, self.dt)

        logger.info(
            "Evaluator инициализирован",
            event="evaluator_init",
            workers=self.sim_cfg.workers,
            sensor_range=self.sim_cfg.sensor_range,
            robot_radius=self.planner_cfg.robot_radius,
        )

    def _planner(self) -> Controller:
        return PlannerController(self.planner_cfg, self.sim_cfg.footprint_points)

    def jobs(self, suite: Sequence[Episode], params: Optional[PolicyParams] = None,
             obstacle_checkpoints: Optional[Dict[str, PolicyParams]] = None) -> List[Tuple[Episode, Controller]]:
        """
        Пары (эпизод, контроллер)

        Эпизод с препятствиями под политикой прогоняется отдельно для каждого
        именованного чекпоинта (по умолчанию -- один чекпоинт 'policy').
        """
        checkpoints = obstacle_checkpoints or ({"policy": params} if params is not None else {})

        jobs: List[Tuple[Episode, Controller]] = []
        for ep in suite:
            if ep.controller == ControllerKind.PLANNER:
                jobs.append((ep, self._planner()))
            elif not ep.with_obstacles:
                if params is None:
                    raise ConfigError("для эпизодов с политикой нужен чекпоинт")
                jobs.append((ep, PolicyController(params, self.dt)))
            else:
                if not checkpoints:
                    raise ConfigError("для эпизодов с политикой нужен чекпоинт")
                for name, checkpoint in checkpoints.items():
                    jobs.append((ep, PolicyController(checkpoint, self.dt, name=name)))
        return jobs

    def run(self, suite: Sequence[Episode], params: Optional[PolicyParams] = None,
            obstacle_checkpoints: Optional[Dict[str, PolicyParams]] = None,
            config: Optional[Dict[str, Any]] = None) -> EvaluationRun:
        if not suite:
            raise ConfigError("пустой набор эпизодов")
        jobs = self.jobs(suite, params, obstacle_checkpoints)

        def execute(job: Tuple[Episode, Controller]) -> EpisodeResult:
            ep, controller = job
            return self.runner.run(ep, controller)

        if self.sim_cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=self.sim_cfg.workers) as pool:
                results = list(pool.map(execute, jobs))
        else:
            results = [execute(job) for job in jobs]

        records = [
            EpisodeRecord(
                episode_id=ep.episode_id,
                category=ep.category,
                with_obstacles=ep.with_obstacles,
                controller=controller.name,
                outcome=result.outcome,
                steps=result.steps,
                final_distance=result.final_distance,
            )
            for (ep, controller), result in zip(jobs, results)
        ]
        report = aggregate(records, config)

        logger.info(
            "Оценка завершена",
            event="evaluation_completed",
            episodes=len(records),
            total=report.total,
            collision_rate=report.collision_rate,
            obstacle_arrival=report.obstacle_arrival,
        )
        return EvaluationRun(report=report, results=results)


def evaluate(suite: Sequence[Episode], params: Optional[PolicyParams] = None,
             obstacle_checkpoints: Optional[Dict[str, PolicyParams]] = None,
             camera: Optional[CameraConfig] = None, sim_cfg: Optional[SimConfig] = None,
             planner_cfg: Optional[PlannerConfig] = None, config: Optional[Dict[str, Any]] = None) -> EvalReport:
    """Отчет оценки набора эпизодов"""
    return Evaluator(camera, sim_cfg, planner_cfg).run(suite, params, obstacle_checkpoints, config).report
