from app.geom.camera import (
    back_project,
    back_project_grid,
    masked_median_pose,
    project_to_pixel,
    to_planar,
)
from app.geom.kinematics import integrate_step, rollout, rollout_jacobian

__all__ = [
    "back_project",
    "back_project_grid",
    "integrate_step",
    "masked_median_pose",
    "project_to_pixel",
    "rollout",
    "rollout_jacobian",
    "to_planar",
]
