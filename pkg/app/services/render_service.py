"""
SVG рендер траекторий: путь робота, объекты, препятствия, круг успеха
"""
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "lastmile"
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

from app.schemas.world import TrajectorySample, World  # noqa: E402
from app.utils.logging_config import StructuredLogger  # noqa: E402

logger = StructuredLogger(__name__)


class RenderService:
    """Сохранение траекторий в SVG"""

    @staticmethod
    def render_trajectory(path: Union[str, Path], world: World, samples: Sequence[TrajectorySample],
                          target_id: Optional[str] = None, success_radius: float = 0.2,
                          title: Optional[str] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        fig, ax = plt.subplots(figsize=(6, 6))
        try:
            for obstacle in world.obstacles:
                if obstacle:
                    xs, ys = zip(*obstacle)
                    ax.scatter(xs, ys, s=4, c="dimgray")
            for obj in world.objects:
                is_target = obj.id == target_id
                ax.add_patch(Circle((obj.pose.x, obj.pose.y), obj.footprint_radius,
                                    color="tab:orange" if is_target else "tab:blue", alpha=0.6))
                ax.annotate(obj.description, (obj.pose.x, obj.pose.y), fontsize=7,
                            xytext=(4, 4), textcoords="offset points")
                if is_target:
                    ax.add_patch(Circle((obj.pose.x, obj.pose.y), success_radius,
                                        fill=False, linestyle="--", color="tab:green"))
            if samples:
                ax.plot([s.x for s in samples], [s.y for s in samples], "-", color="tab:red", linewidth=1.5)
                ax.plot(samples[0].x, samples[0].y, "o", color="tab:red")

            arena = world.arena
            ax.set_xlim(arena.x_min, arena.x_max)
            ax.set_ylim(arena.y_min, arena.y_max)
            ax.set_aspect("equal")
            ax.grid(True, linewidth=0.3)
            if title:
                ax.set_title(title)
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)

        logger.debug("Траектория отрисована", event="trajectory_rendered", path=str(path), samples=len(samples))
        return path
