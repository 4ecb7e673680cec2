from pydantic_settings import BaseSettings
from pydantic import ConfigDict
from typing import Optional


# Версии схем артефактов
DATASET_SCHEMA_VERSION = 1
CHECKPOINT_SCHEMA_VERSION = 1
WORLD_SCHEMA_VERSION = 1
SUITE_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1


class Settings(BaseSettings):
    # Логирование
    debug: bool = False
    log_dir: str = "logs"
    log_to_file: bool = False
    log_json_console: bool = False

    # Выполнение
    workers: int = 1
    default_seed: int = 0
    annotation_concurrency: int = 8

    # Удаленный бэкенд разметки (если используется)
    backend_url: Optional[str] = None
    backend_timeout_s: float = 30.0

    model_config = ConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="LASTMILE_",
        extra="ignore"
    )


settings = Settings()
