"""
Точка входа командной строки

Коды выхода: 0 -- успех, 1 -- ошибка использования (аргументы, конфигурация,
отсутствующие входные файлы), 2 -- ошибка выполнения.
"""
import argparse
import logging
import sys
from typing import List, Optional

from app.cli import commands
from app.cli.run_config import load_run_config, parse_overrides
from app.schemas.world import ControllerKind
from app.utils.errors import ConfigError, DivergenceError, LabError
from app.utils.logging_config import StructuredLogger, setup_logging

logger = StructuredLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser с кодом выхода 1 для ошибок использования"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="lastmile", description="Лаборатория навигации последней мили по инструкции")
    parser.add_argument("--config", help="плоский key=value файл RunConfig")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="переопределение ключа конфигурации (секция__поле)")
    parser.add_argument("--seed", type=int, help="seed запуска (перекрывает конфигурацию)")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG логирование")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)

    demo = sub.add_parser("demo", help="демонстрационный мир и набор эпизодов")
    demo.add_argument("--out-dir")
    demo.add_argument("--per-category", type=int, default=5)
    demo.add_argument("--obstacle-episodes", type=int, default=5)
    demo.add_argument("--controller", choices=[kind.value for kind in ControllerKind], default="policy")
    demo.set_defaults(handler=commands.cmd_demo)

    annotate = sub.add_parser("annotate", help="разметка записей мира в датасет")
    annotate.add_argument("--world")
    annotate.add_argument("--out")
    annotate.add_argument("--backend", choices=["synthetic", "http"], default="synthetic")
    annotate.set_defaults(handler=commands.cmd_annotate)

    train = sub.add_parser("train", help="обучение политики")
    train.add_argument("--dataset")
    train.add_argument("--out")
    train.add_argument("--loss-csv")
    train.add_argument("--stage", choices=["pretrain", "finetune"])
    train.add_argument("--resume", help="чекпоинт для продолжения или дообучения")
    train.add_argument("--finetune", action="store_true", help="после предобучения выполнить дообучение")
    train.set_defaults(handler=commands.cmd_train)

    evaluate = sub.add_parser("eval", help="оценка на наборе эпизодов")
    evaluate.add_argument("--suite")
    evaluate.add_argument("--checkpoint")
    evaluate.add_argument("--obstacle-checkpoint", action="append", metavar="NAME=PATH",
                          help="именованный чекпоинт для эпизодов с препятствиями")
    evaluate.add_argument("--out")
    evaluate.add_argument("--svg-dir")
    evaluate.set_defaults(handler=commands.cmd_eval)

    plan = sub.add_parser("plan", help="планировщик к объекту мира")
    plan.add_argument("--world")
    plan.add_argument("--target", required=True)
    plan.add_argument("--start", help="x,y,theta")
    plan.add_argument("--max-steps", type=int)
    plan.add_argument("--out-dir")
    plan.set_defaults(handler=commands.cmd_plan)

    ablate = sub.add_parser("ablate", help="ошибка позы в зависимости от размера датасета")
    ablate.add_argument("--dataset")
    ablate.add_argument("--out")
    ablate.set_defaults(handler=commands.cmd_ablate)

    plot = sub.add_parser("plot", help="SVG траектории")
    plot.add_argument("--world")
    plot.add_argument("--trajectory", required=True)
    plot.add_argument("--target")
    plot.add_argument("--out")
    plot.set_defaults(handler=commands.cmd_plot)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else None)

    try:
        overrides = parse_overrides(args.overrides)
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        cfg = load_run_config(args.config, overrides)
        return args.handler(args, cfg)
    except ConfigError as e:
        logger.error("Ошибка использования", event="cli_usage_error", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as e:
        logger.error("Обучение разошлось", event="cli_divergence", command=args.command)
        print(f"error: {e}; последние потери: {e.last_losses}", file=sys.stderr)
        return EXIT_RUNTIME
    except (LabError, OSError, ValueError) as e:
        logger.error("Ошибка выполнения", event="cli_runtime_error", command=args.command,
                     error=str(e), error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
