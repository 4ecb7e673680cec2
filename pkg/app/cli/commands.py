"""
Обработчики подкоманд: demo, annotate, train, eval, plan, ablate, plot

Каждый обработчик получает разобранные аргументы и RunConfig, пишет
артефакты и печатает короткую сводку в stdout.
"""
import argparse
import asyncio
from pathlib import Path
from typing import Dict, List, Optional

from app.annotation.backend import SyntheticAnnotationBackend
from app.annotation.http_backend import HttpAnnotationBackend
from app.annotation.pipeline import annotate_dataset, world_obstacle_points
from app.annotation.recordings import synthesize_recording
from app.planning.lattice import StateLatticePlanner
from app.schemas.config import RunConfig, TrainingStage
from app.schemas.models import Pose2
from app.schemas.world import ControllerKind, TrajectorySample, WorldFile
from app.services.ablation_service import RUN_FIELDS, TABLE_FIELDS, AblationService
from app.services.render_service import RenderService
from app.services.storage_service import StorageService
from app.sim.evaluation import Evaluator
from app.sim.scenarios import build_demo_world, build_suite
from app.training.trainer import CURVE_FIELDS, PolicyTrainer
from app.utils.errors import ConfigError
from app.utils.helpers import child_rng, format_rate
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


def _provenance(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json")


def _input_path(value: Optional[str], fallback: Optional[str], name: str) -> Path:
    """Путь входного артефакта: аргумент, затем paths.* конфигурации; файл должен существовать"""
    path = value or fallback
    if not path:
        raise ConfigError(f"не задан путь: {name}")
    if not Path(path).is_file():
        raise ConfigError(f"файл не найден ({name}): {path}")
    return Path(path)


def _output_path(value: Optional[str], fallback: Optional[str], cfg: RunConfig, default_name: str) -> Path:
    return Path(value or fallback or Path(cfg.paths.output_dir) / default_name)


def _parse_pose(text: Optional[str]) -> Pose2:
    if not text:
        return Pose2()
    try:
        x, y, theta = (float(part) for part in text.split(","))
    except ValueError as e:
        raise ConfigError(f"поза задается как x,y,theta: {text!r}") from e
    return Pose2(x=x, y=y, theta=theta)


# ========== DEMO ==========
def cmd_demo(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Демонстрационный мир с записью прохода и набор эпизодов"""
    out_dir = Path(args.out_dir or cfg.paths.output_dir)
    world = build_demo_world(cfg.seed)
    recording = synthesize_recording(world, cfg.annotation.duration_s, cfg.annotation.source_fps,
                                     child_rng(cfg.seed, "recording", 0))
    world_digest = StorageService.write_world(out_dir / "world.json", WorldFile(world=world, recordings=[recording]))

    suite = build_suite(world, child_rng(cfg.seed, "suite"), args.per_category, args.obstacle_episodes,
                        cfg.sim.max_steps, ControllerKind(args.controller), cfg.planner.robot_radius)
    suite_digest = StorageService.write_suite(out_dir / "suite.jsonl", suite, _provenance(cfg))

    print(f"world: {out_dir / 'world.json'} ({len(world.objects)} objects) sha256={world_digest}")
    print(f"suite: {out_dir / 'suite.jsonl'} ({len(suite)} episodes) sha256={suite_digest}")
    return 0


# ========== ANNOTATE ==========
async def _annotate(world_file: WorldFile, cfg: RunConfig, backend_kind: str):
    recordings = list(world_file.recordings) or [
        synthesize_recording(world_file.world, cfg.annotation.duration_s, cfg.annotation.source_fps,
                             child_rng(cfg.seed, "recording", i))
        for i in range(cfg.annotation.recordings)
    ]
    if backend_kind == "http":
        async with HttpAnnotationBackend() as backend:
            return await annotate_dataset(recordings, world_file.world, backend, cfg.camera, cfg.annotation,
                                          cfg.planner, cfg.objective.M, cfg.seed)
    backend = SyntheticAnnotationBackend(world_file.world, cfg.camera, cfg.annotation)
    return await annotate_dataset(recordings, world_file.world, backend, cfg.camera, cfg.annotation,
                                  cfg.planner, cfg.objective.M, cfg.seed)


def cmd_annotate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Разметка записей мира в датасет JSON Lines"""
    world_path = _input_path(args.world, cfg.paths.world, "world")
    out = _output_path(args.out, cfg.paths.dataset, cfg, "dataset.jsonl")
    world_file = StorageService.read_world(world_path)

    frames = asyncio.run(_annotate(world_file, cfg, args.backend))
    digest = StorageService.write_dataset(out, frames, cfg.objective.M, _provenance(cfg))

    objects = sum(len(frame.objects) for frame in frames)
    prompts = sum(len(obj.prompts) for frame in frames for obj in frame.objects)
    print(f"frames={len(frames)} objects={objects} prompts={prompts}")
    print(f"dataset: {out} sha256={digest}")
    return 0


# ========== TRAIN ==========
def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Стадия обучения (и дообучение по --finetune); чекпоинт и кривые потерь"""
    dataset_path = _input_path(args.dataset, cfg.paths.dataset, "dataset")
    out = _output_path(args.out, cfg.paths.checkpoint, cfg, "checkpoint.json")
    loss_csv = Path(args.loss_csv) if args.loss_csv else out.with_suffix(".loss.csv")
    stage = TrainingStage(args.stage) if args.stage else cfg.train.stage

    params = None
    resume = args.resume or (cfg.paths.pretrain_checkpoint if stage == TrainingStage.FINETUNE else None)
    if resume:
        params, _ = StorageService.load_checkpoint(_input_path(resume, None, "checkpoint"))
    elif stage == TrainingStage.FINETUNE:
        raise ConfigError("stage=finetune требует чекпоинт предобучения (--resume или paths__pretrain_checkpoint)")

    _, frames = StorageService.read_dataset(dataset_path)
    stages = [stage] + ([TrainingStage.FINETUNE] if args.finetune and stage == TrainingStage.PRETRAIN else [])

    curve: List[Dict[str, float]] = []
    result = None
    for current in stages:
        trainer = PolicyTrainer(cfg.train.model_copy(update={"stage": current}), cfg.objective, cfg.policy,
                                cfg.robot, cfg.planner.dt)
        result = trainer.train(frames, params)
        params = result.params
        curve.extend(result.curve)
        target = out if current == stages[-1] else out.with_name(f"{out.stem}-{current.value}{out.suffix}")
        StorageService.save_checkpoint(target, params, current, trainer.objective_cfg, _provenance(cfg))

    StorageService.write_csv(loss_csv, curve, CURVE_FIELDS)
    final = curve[-1] if curve else {}
    print(f"stage={result.stage.value} step={params.step} total={final.get('total', float('nan')):.6f}")
    print(f"checkpoint: {out}")
    print(f"loss curve: {loss_csv}")
    return 0


# ========== EVAL ==========
def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Оценка набора эпизодов; отчет JSON и SVG по запросу"""
    suite = StorageService.read_suite(_input_path(args.suite, cfg.paths.suite, "suite"))
    out = _output_path(args.out, cfg.paths.report, cfg, "report.json")

    params = None
    needs_policy = any(ep.controller == ControllerKind.POLICY for ep in suite)
    if args.checkpoint or (needs_policy and cfg.paths.checkpoint):
        params, _ = StorageService.load_checkpoint(_input_path(args.checkpoint, cfg.paths.checkpoint, "checkpoint"))
    obstacle_checkpoints = {}
    for item in args.obstacle_checkpoint or []:
        name, sep, path = item.partition("=")
        if not sep:
            raise ConfigError(f"ожидалось NAME=PATH, получено {item!r}")
        obstacle_checkpoints[name], _ = StorageService.load_checkpoint(_input_path(path, None, name))

    evaluator = Evaluator(cfg.camera, cfg.sim, cfg.planner)
    run = evaluator.run(suite, params, obstacle_checkpoints or None, _provenance(cfg))
    StorageService.write_report(out, run.report)

    if args.svg_dir:
        episodes = {ep.episode_id: ep for ep in suite}
        for record, result in zip(run.report.episodes, run.results):
            ep = episodes[record.episode_id]
            RenderService.render_trajectory(Path(args.svg_dir) / f"{record.episode_id}-{record.controller}.svg",
                                            ep.world, result.trajectory, ep.target_id, ep.success_radius,
                                            f"{ep.instruction} ({record.outcome.value})")

    report = run.report
    for category, rate in report.per_category.items():
        print(f"{category.value:>13}: {format_rate(rate) if rate is not None else 'n/a'}")
    print(f"{'total':>13}: {format_rate(report.total)}")
    print(f"{'collisions':>13}: {format_rate(report.collision_rate)}")
    for name, rate in report.obstacle_arrival.items():
        print(f"{'obstacles':>13}: {name} arrival {format_rate(rate)}, "
              f"collision {format_rate(report.obstacle_collision[name])}")
    print(f"report: {out}")
    return 0


# ========== PLAN ==========
def cmd_plan(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Планировщик с перепланированием к объекту мира; трасса и траектория"""
    world = StorageService.read_world(_input_path(args.world, cfg.paths.world, "world")).world
    try:
        target = world.get_object(args.target)
    except KeyError as e:
        raise ConfigError(f"объект {args.target} отсутствует в мире") from e
    out_dir = Path(args.out_dir or cfg.paths.output_dir)

    planner = StateLatticePlanner(cfg.planner)
    result = planner.receding_horizon_control(_parse_pose(args.start), (target.pose.x, target.pose.y),
                                              world_obstacle_points(world, target.id, cfg.sim.footprint_points),
                                              args.max_steps or cfg.sim.max_steps)
    samples = [TrajectorySample(t=0.0, x=result.trajectory[0].x, y=result.trajectory[0].y,
                                theta=result.trajectory[0].theta, v=0.0, omega=0.0)]
    for k, (pose, twist) in enumerate(zip(result.trajectory[1:], result.commands), start=1):
        samples.append(TrajectorySample(t=k * cfg.planner.dt, x=pose.x, y=pose.y, theta=pose.theta,
                                        v=twist.v, omega=twist.omega))

    StorageService.write_trace(out_dir / "plan_trace.jsonl", result.trace)
    StorageService.write_trajectory_csv(out_dir / "plan_trajectory.csv", samples)
    print(f"outcome={result.outcome.value} steps={result.steps} final_distance={result.final_distance:.3f}")
    print(f"trace: {out_dir / 'plan_trace.jsonl'}")
    print(f"trajectory: {out_dir / 'plan_trajectory.csv'}")
    return 0


# ========== ABLATE ==========
def cmd_ablate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Медианная ошибка позы на отложенных кадрах по вложенным долям датасета"""
    _, frames = StorageService.read_dataset(_input_path(args.dataset, cfg.paths.dataset, "dataset"))
    out = _output_path(args.out, None, cfg, "ablation.csv")

    service = AblationService(cfg.ablation, cfg.train, cfg.objective, cfg.policy, cfg.robot, cfg.planner.dt,
                              cfg.seed)
    result = service.run(frames)
    StorageService.write_csv(out, result.table, TABLE_FIELDS)
    StorageService.write_csv(out.with_name(f"{out.stem}-runs{out.suffix}"), result.runs, RUN_FIELDS)

    for row in result.table:
        print(f"fraction={row['fraction']:.2f} frames={row['frames']} median_mse={row['median_mse']:.4f}")
    print(f"table: {out}")
    return 0


# ========== PLOT ==========
def cmd_plot(args: argparse.Namespace, cfg: RunConfig) -> int:
    """SVG траектории из CSV поверх мира"""
    world = StorageService.read_world(_input_path(args.world, cfg.paths.world, "world")).world
    samples = StorageService.read_trajectory_csv(_input_path(args.trajectory, None, "trajectory"))
    out = Path(args.out) if args.out else Path(args.trajectory).with_suffix(".svg")
    RenderService.render_trajectory(out, world, samples, args.target, cfg.sim.success_radius)
    print(f"svg: {out}")
    return 0
