"""
Pinhole-камера: обратная проекция глубины, медиана по маске, проекция в пиксели
"""
from typing import List, Sequence, Union

import numpy as np

from app.schemas.config import PlanarConvention
from app.schemas.models import CameraIntrinsics, PixelProjection, PlanarPoint, Point3
from app.utils.errors import EmptyMaskError, GeometryError, ShapeMismatchError

Cloud = Union[np.ndarray, Sequence[Point3]]


def _as_depth(depth_map) -> np.ndarray:
    depth = np.asarray(depth_map, dtype=float)
    if depth.ndim != 2:
        raise ShapeMismatchError(f"карта глубины должна быть 2D, получено {depth.shape}")
    return depth


def valid_depth(depth_map) -> np.ndarray:
    """Маска валидных пикселей: конечная глубина > 0"""
    depth = np.asarray(depth_map, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.isfinite(depth) & (depth > 0)


def back_project_grid(depth_map, intr: CameraIntrinsics) -> np.ndarray:
    """
    Обратная проекция для каждого пикселя

    Returns:
        Массив (H, W, 3) в системе камеры (z вперед, x вправо, y вниз);
        невалидные пиксели заполнены NaN
    """
    depth = _as_depth(depth_map)
    h, w = depth.shape
    u, v = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    ok = valid_depth(depth)
    z = np.where(ok, depth, np.nan)
    grid = np.empty((h, w, 3))
    grid[..., 0] = (u - intr.cx) * z / intr.fx
    grid[..., 1] = (v - intr.cy) * z / intr.fy
    grid[..., 2] = z
    return grid


def back_project_array(depth_map, intr: CameraIntrinsics) -> np.ndarray:
    """Облако (P, 3) по валидным пикселям в порядке строк"""
    depth = _as_depth(depth_map)
    return back_project_grid(depth, intr)[valid_depth(depth)]


def back_project(depth_map, intr: CameraIntrinsics) -> List[Point3]:
    """Облако точек по валидным пикселям; полностью невалидная карта дает пустой список"""
    return [Point3.from_array(row) for row in back_project_array(depth_map, intr)]


def _cloud_array(cloud: Cloud) -> np.ndarray:
    if isinstance(cloud, np.ndarray):
        return cloud.reshape(-1, 3).astype(float)
    if len(cloud) == 0:
        return np.empty((0, 3))
    return np.array([p.as_array() for p in cloud], dtype=float)


def masked_median_array(cloud: Cloud, mask) -> np.ndarray:
    """Покомпонентная медиана выбранных точек; четное число -- среднее двух средних"""
    points = _cloud_array(cloud)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.shape[0] != points.shape[0]:
        raise ShapeMismatchError(f"маска на {mask.shape[0]} точек, облако из {points.shape[0]}")
    selected = points[mask]
    selected = selected[np.all(np.isfinite(selected), axis=1)]
    if selected.shape[0] == 0:
        raise EmptyMaskError()
    return np.median(selected, axis=0)


def masked_median_pose(cloud: Cloud, mask) -> Point3:
    """Оценка 3D позиции объекта медианой точек под маской"""
    return Point3.from_array(masked_median_array(cloud, mask))


def project_to_pixel(pt: Point3, intr: CameraIntrinsics) -> PixelProjection:
    """Проекция точки камеры в пиксели; inside=False если за пределами изображения"""
    if pt.z <= 0:
        raise GeometryError("behind camera")
    u = intr.fx * pt.x / pt.z + intr.cx
    v = intr.fy * pt.y / pt.z + intr.cy
    inside = 0.0 <= u < intr.width and 0.0 <= v < intr.height
    return PixelProjection(u=u, v=v, inside=inside)


def to_planar(pt: Point3, convention: PlanarConvention = PlanarConvention.OPTICAL) -> PlanarPoint:
    """
    Отбрасывание высоты: позиция на плоскости пола (вперед, влево)

    OPTICAL: высота -- ось y камеры, (x, y, z) -> (z, -x)
    ROBOT:   высота -- ось z, (x, y, z) -> (x, y)
    """
    if convention == PlanarConvention.OPTICAL:
        return PlanarPoint(x=pt.z, y=-pt.x)
    return PlanarPoint(x=pt.x, y=pt.y)


def planar_to_camera(forward: float, left: float, vertical: float,
                     convention: PlanarConvention = PlanarConvention.OPTICAL) -> Point3:
    """Обратное к to_planar: vertical -- координата по оси высоты камеры"""
    if convention == PlanarConvention.OPTICAL:
        return Point3(x=-left, y=vertical, z=forward)
    return Point3(x=forward, y=left, z=vertical)
