"""Exhaustive polar-grid search for the TSRS-optimal relay cluster position."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

from .analytic import op_tsrs_exact
from .model import NODES, ConfigError, node_distance

__all__ = [
    "PlacementGrid",
    "GridPoint",
    "PlacementResult",
    "evaluate_position",
    "optimize",
]


@dataclass(frozen=True)
class PlacementGrid:
    """r = n * r_step, theta = p * theta_step for n < n_radial, p < n_angular.

    The angular step defaults to 6.28 / 64 rather than 2 pi / 64 so that grid
    coordinates land exactly on the published ones.
    """

    n_radial: int = 64
    n_angular: int = 64
    r_step: float = 6.0 / 64
    theta_step: float = 6.28 / 64

    def __post_init__(self):
        if self.n_radial < 1 or self.n_angular < 1:
            raise ValueError("grid needs at least one radial and one angular step")
        if self.theta_step * (self.n_angular - 1) >= 2 * math.pi:
            raise ValueError("angular grid wraps past 2*pi")

    def points(self):
        """(n, p, r, theta) in (n, p) order; the r = 0 ring is kept once."""
        out = []
        for n in range(self.n_radial):
            for p in range(self.n_angular if n else 1):
                out.append((n, p, n * self.r_step, p * self.theta_step))
        return out

    def __len__(self):
        return 1 + (self.n_radial - 1) * self.n_angular


@dataclass(frozen=True)
class GridPoint:
    n: int
    p: int
    r: float
    theta: float
    x: float
    y: float
    op: float
    distances: tuple  # (d_S1, d_S2, d_D1, d_D2)


@dataclass(frozen=True)
class PlacementResult:
    best: GridPoint
    grid: tuple

    @property
    def position(self):
        return self.best.x, self.best.y

    @property
    def op_min(self):
        return self.best.op


def _require_layout(cfg):
    if cfg.layout is None:
        raise ConfigError("placement needs geometric link scales (geometry.* keys)", "geometry")


def evaluate_position(cfg, r, theta):
    """TSRS outage with the relay cluster moved to polar (r, theta)."""
    _require_layout(cfg)
    return op_tsrs_exact(cfg.replace(layout=cfg.layout.at(r, theta))).value


def _point(cfg, n, p, r, theta):
    layout = cfg.layout.at(r, theta)
    x, y = layout.relay_xy
    op = op_tsrs_exact(cfg.replace(layout=layout)).value
    return GridPoint(n, p, r, theta, x, y, op, tuple(node_distance(layout, k) for k in NODES))


def _chunk_task(args):
    cfg, pts = args
    return [_point(cfg, *pt) for pt in pts]


def optimize(cfg, grid=None, workers=1):
    """Evaluate every grid point; ties go to the smaller (n, p)."""
    _require_layout(cfg)
    grid = PlacementGrid() if grid is None else grid
    pts = grid.points()
    if workers > 1:
        size = math.ceil(len(pts) / workers)
        chunks = [(cfg, pts[k:k + size]) for k in range(0, len(pts), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            evaluated = [g for part in pool.map(_chunk_task, chunks) for g in part]
    else:
        evaluated = _chunk_task((cfg, pts))
    # strict < keeps the first (smallest n, p) minimum
    best = evaluated[0]
    for g in evaluated[1:]:
        if g.op < best.op:
            best = g
    return PlacementResult(best=best, grid=tuple(evaluated))
