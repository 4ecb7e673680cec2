import aiohttp
import asyncio

from typing import Optional, Type, TypeVar
from datetime import datetime, timezone
UTC = timezone.utc

from pydantic import BaseModel, ValidationError

from app.annotation.backend import (
    DescribeRequest,
    DescribeResponse,
    PromptRequest,
    PromptResponse,
    SegmentRequest,
    SegmentResponse,
)
from app.utils import config
from app.utils.errors import BackendError
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)

ResponseT = TypeVar("ResponseT", bound=BaseModel)


class HttpAnnotationBackend:
    """Клиент удаленного сервиса разметки (сегментация, описание, промпты)"""

    def __init__(self, base_url: Optional[str] = None, timeout_s: Optional[float] = None):
        settings = config.settings
        self.base_url = (base_url or settings.backend_url or "").rstrip("/")
        if not self.base_url:
            raise BackendError("не задан адрес сервиса разметки (LASTMILE_BACKEND_URL)")
        self.timeout_s = timeout_s if timeout_s is not None else settings.backend_timeout_s
        self.session: Optional[aiohttp.ClientSession] = None
        self.start_time = datetime.now(UTC)
        self.total_requests = 0
        self.failed_requests = 0

        logger.info(
            "Инициализация клиента сервиса разметки",
            event="http_backend_init",
            base_url=self.base_url,
            timeout_s=self.timeout_s,
        )

    async def __aenter__(self) -> "HttpAnnotationBackend":
        await self.connect()
        return self

    async def __aexit__(self, *exc) -> None:
        await self.close()

    async def connect(self) -> None:
        if self.session is None or self.session.closed:
            self.session = aiohttp.ClientSession(
                headers={"Content-Type": "application/json", "User-Agent": "LastMile/1.0"},
                timeout=aiohttp.ClientTimeout(total=self.timeout_s),
            )

    async def close(self) -> None:
        if self.session is not None and not self.session.closed:
            await self.session.close()
        logger.info(
            "Клиент сервиса разметки закрыт",
            event="http_backend_closed",
            total_requests=self.total_requests,
            failed_requests=self.failed_requests,
        )

    async def _post(self, route: str, request: BaseModel, response_type: Type[ResponseT],
                    frame_index: int) -> ResponseT:
        """POST запроса контракта и разбор ответа; любой сбой -> BackendError"""
        await self.connect()
        self.total_requests += 1
        url = f"{self.base_url}/{route}"
        request_start = datetime.now(UTC)

        try:
            async with self.session.post(url, data=request.model_dump_json()) as response:
                response_time = (datetime.now(UTC) - request_start).total_seconds() * 1000

                if response.status == 200:
                    payload = await response.text()
                    logger.debug(
                        "Ответ сервиса разметки",
                        event="http_backend_response",
                        route=route,
                        frame_index=frame_index,
                        response_time_ms=response_time,
                    )
                    return response_type.model_validate_json(payload)

                self.failed_requests += 1
                error_text = await response.text()
                logger.error(
                    "HTTP ошибка сервиса разметки",
                    event="http_backend_http_error",
                    route=route,
                    status_code=response.status,
                    error=error_text[:200],
                    response_time_ms=response_time,
                    frame_index=frame_index,
                )
                raise BackendError(f"{route}: HTTP {response.status}", frame_index)

        except ValidationError as e:
            self.failed_requests += 1
            logger.error(
                "Ответ сервиса разметки не соответствует контракту",
                event="http_backend_bad_response",
                route=route,
                error=str(e),
                frame_index=frame_index,
            )
            raise BackendError(f"{route}: некорректный ответ", frame_index) from e
        except aiohttp.ClientConnectionError as e:
            self.failed_requests += 1
            logger.error(
                "Ошибка подключения к сервису разметки",
                event="http_backend_connection_error",
                route=route,
                error=str(e),
                url=url,
                frame_index=frame_index,
            )
            raise BackendError(f"{route}: нет соединения", frame_index) from e
        except asyncio.TimeoutError as e:
            self.failed_requests += 1
            logger.error(
                "Таймаут сервиса разметки",
                event="http_backend_timeout",
                route=route,
                url=url,
                timeout_seconds=self.timeout_s,
                frame_index=frame_index,
            )
            raise BackendError(f"{route}: таймаут", frame_index) from e

    async def segment(self, request: SegmentRequest) -> SegmentResponse:
        return await self._post("segment", request, SegmentResponse, request.frame_index)

    async def describe(self, request: DescribeRequest) -> DescribeResponse:
        return await self._post("describe", request, DescribeResponse, request.frame_index)

    async def propose_prompts(self, request: PromptRequest) -> PromptResponse:
        return await self._post("prompts", request, PromptResponse, request.frame_index)
