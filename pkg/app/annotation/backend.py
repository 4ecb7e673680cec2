"""
Интерфейс бэкенда разметки и детерминированный синтетический бэкенд

Контракт запрос/ответ: кадр (байты карты глубины) на вход, маски и тексты на
выход. Настоящий клиент (сегментация, описание, генерация промптов) реализует
тот же протокол.
"""
import base64
from typing import Dict, List, Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.annotation.prompts import generate_prompts
from app.annotation.renderer import render_frame
from app.geom.depth_io import depth_from_bytes, depth_to_bytes
from app.schemas.config import AnnotationConfig, CameraConfig
from app.schemas.dataset import ObjectSpec, PromptLabel
from app.schemas.models import Pose2
from app.schemas.world import World
from app.utils.errors import BackendError
from app.utils.helpers import child_rng
from app.utils.logging_config import StructuredLogger

logger = StructuredLogger(__name__)


# ========== КОДИРОВАНИЕ ==========
def encode_depth(depth: np.ndarray) -> str:
    """Карта глубины -> base64 бинарного формата DMAP"""
    return base64.b64encode(depth_to_bytes(depth)).decode("ascii")


def decode_depth(payload: str) -> np.ndarray:
    return depth_from_bytes(base64.b64decode(payload))


def encode_mask(mask: np.ndarray) -> str:
    return base64.b64encode(np.packbits(np.asarray(mask, dtype=bool).reshape(-1)).tobytes()).decode("ascii")


def decode_mask(payload: str, height: int, width: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(base64.b64decode(payload), dtype=np.uint8), count=height * width)
    return bits.astype(bool).reshape(height, width)


# ========== КОНТРАКТ ==========
class SegmentRequest(BaseModel):
    frame_index: int
    robot_pose: Pose2
    width: int
    height: int
    depth: str = Field(description="base64 карты глубины в формате DMAP")


class MaskPayload(BaseModel):
    object_ref: str
    mask: str = Field(description="base64 упакованных бит маски (H*W, по строкам)")
    visibility: float = Field(ge=0, le=1)


class SegmentResponse(BaseModel):
    masks: List[MaskPayload] = Field(default_factory=list)


class DescribeRequest(BaseModel):
    frame_index: int
    object_ref: str


class DescribeResponse(BaseModel):
    class_noun: str
    attributes: List[str] = Field(default_factory=list)
    confidence: float = Field(default=1.0, ge=0, le=1)

    @property
    def description(self) -> str:
        return " ".join([*self.attributes, self.class_noun])


class PromptRequest(BaseModel):
    frame_index: int
    object_ref: str
    class_noun: str
    attributes: List[str] = Field(default_factory=list)
    neighbor_nouns: List[str] = Field(default_factory=list)
    seed: int = 0


class PromptResponse(BaseModel):
    prompts: List[PromptLabel] = Field(default_factory=list)
    confidence: float = Field(default=1.0, ge=0, le=1)


class AnnotationBackend(Protocol):
    """Сегментация кадра, описание объекта, генерация промптов"""

    async def segment(self, request: SegmentRequest) -> SegmentResponse: ...

    async def describe(self, request: DescribeRequest) -> DescribeResponse: ...

    async def propose_prompts(self, request: PromptRequest) -> PromptResponse: ...


# ========== СИНТЕТИЧЕСКИЙ БЭКЕНД ==========
class SyntheticAnnotationBackend:
    """Детерминированная заглушка: маски по рендеру мира, описания по ObjectSpec"""

    def __init__(self, world: World, camera: CameraConfig, cfg: Optional[AnnotationConfig] = None):
        self.world = world
        self.camera = camera
        self.cfg = cfg or AnnotationConfig()
        self._objects: Dict[str, ObjectSpec] = {obj.id: obj for obj in world.objects}
        self.total_requests = 0

        logger.info(
            "Синтетический бэкенд разметки инициализирован",
            event="synthetic_backend_init",
            objects=len(self._objects),
            width=camera.intrinsics.width,
            height=camera.intrinsics.height,
        )

    def _object(self, object_ref: str, frame_index: int) -> ObjectSpec:
        if object_ref not in self._objects:
            raise BackendError(f"неизвестный объект {object_ref}", frame_index)
        return self._objects[object_ref]

    async def segment(self, request: SegmentRequest) -> SegmentResponse:
        self.total_requests += 1
        rendered = render_frame(self.world, request.robot_pose, self.camera)
        return SegmentResponse(masks=[
            MaskPayload(object_ref=object_id, mask=encode_mask(mask),
                        visibility=min(1.0, rendered.visibility[object_id]))
            for object_id, mask in rendered.masks.items()
        ])

    async def describe(self, request: DescribeRequest) -> DescribeResponse:
        self.total_requests += 1
        obj = self._object(request.object_ref, request.frame_index)
        return DescribeResponse(class_noun=obj.class_noun, attributes=list(obj.attributes))

    async def propose_prompts(self, request: PromptRequest) -> PromptResponse:
        self.total_requests += 1
        obj = ObjectSpec(
            id=request.object_ref,
            class_noun=request.class_noun,
            attributes=request.attributes,
            pose=self._object(request.object_ref, request.frame_index).pose,
            footprint_radius=self._objects[request.object_ref].footprint_radius,
        )
        neighbors = [
            ObjectSpec(id=f"neighbor-{i}", class_noun=noun, pose=obj.pose, footprint_radius=obj.footprint_radius)
            for i, noun in enumerate(request.neighbor_nouns)
        ]
        rng = child_rng(request.seed, request.frame_index, request.object_ref)
        return PromptResponse(prompts=generate_prompts(obj, neighbors, rng, self.cfg))


def masks_from_response(response: SegmentResponse, height: int, width: int) -> List[Tuple[str, np.ndarray, float]]:
    """Декодированные маски ответа сегментации: (объект, маска, видимость)"""
    return [(item.object_ref, decode_mask(item.mask, height, width), item.visibility) for item in response.masks]
