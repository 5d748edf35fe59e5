"""
Starting-step lookup table

For every grid std the table stores the first timestep at which the
forward-diffused clean corpus and its blurred copy are indistinguishable under
a second-moment statistic:

    X_t = ab_t m_x + (1 - ab_t),   Y_t = ab_t m_y(std) + (1 - ab_t)
    t_std = min { t : log X_t - log Y_t <= tol }

m_x and m_y are per-pixel second moments about the corpus mean, measured in
the model domain.
"""

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from ..diffusion.schedule import DiffusionSchedule
from ..exceptions import ConfigurationError, ParameterError, TableBuildError
from ..logging.logger import get_logger
from ..ops.gaussian import blur
from ..ops.image import to_model
from ..ops.std_search import StdGrid, grid_values
from ..utils.helpers import atomic_write

logger = get_logger(__name__)

STAT_SECOND_MOMENT = "second_moment"
HEADER_PATTERN = re.compile(r"^#\s*dsst\s+tol=(?P<tol>\S+)\s+stat=(?P<stat>\S+)\s+T=(?P<T>\d+)\s*$")


@dataclass(frozen=True)
class DsstLookup:
    t_start: int
    std: float
    clamped: bool


@dataclass(frozen=True, eq=False)
class DSSTable:
    """Ascending std grid with the starting step of each entry"""
    stds: np.ndarray
    t_starts: np.ndarray
    tol: float
    stat_kind: str = STAT_SECOND_MOMENT
    T: int = 1000

    def __post_init__(self):
        stds = np.asarray(self.stds, dtype=np.float64)
        t_starts = np.asarray(self.t_starts, dtype=np.int64)
        if stds.size == 0 or stds.size != t_starts.size:
            raise ParameterError("table", f"needs matching non-empty entries, got {stds.size} stds and {t_starts.size} steps")
        if np.any(np.diff(stds) <= 0):
            raise ParameterError("table", "stds must be strictly ascending")
        if np.any(t_starts < 0) or np.any(t_starts > self.T - 1):
            raise ParameterError("table", f"starting steps must lie in [0, {self.T - 1}]")
        object.__setattr__(self, "stds", stds)
        object.__setattr__(self, "t_starts", t_starts)

    def __len__(self) -> int:
        return int(self.stds.size)

    def is_monotone(self) -> bool:
        """Starting step non-decreasing in std"""
        return bool(np.all(np.diff(self.t_starts) >= 0))

    def lookup(self, std_hat: float) -> DsstLookup:
        """
        Starting step for an estimated std

        std_hat snaps to the nearest entry with ties going to the larger std;
        values outside the grid clamp to the boundary and set the flag.
        """
        clamped = bool(std_hat < self.stds[0] - 1e-9 or std_hat > self.stds[-1] + 1e-9)
        distance = np.abs(self.stds - std_hat)
        index = int(np.flatnonzero(distance <= distance.min() + 1e-9)[-1])
        if clamped:
            logger.warning(f"DSST lookup clamped std {std_hat:.3f} to {self.stds[index]:.3f}")
        return DsstLookup(t_start=int(self.t_starts[index]), std=float(self.stds[index]), clamped=clamped)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"std": self.stds, "t_start": self.t_starts})

    def save(self, path: Union[str, Path]) -> Path:
        """Header line, then `std<TAB>t_start` per entry"""
        path = Path(path)
        with atomic_write(path, "w") as handle:
            handle.write(f"# dsst tol={self.tol!r} stat={self.stat_kind} T={self.T}\n")
            self.to_frame().to_csv(handle, sep="\t", header=False, index=False, float_format="%.10g")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DSSTable":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"DSST table not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            header = handle.readline().strip()
            match = HEADER_PATTERN.match(header)
            if not match:
                raise ConfigurationError(f"{path}: bad DSST header {header!r}")
            body = pd.read_csv(handle, sep="\t", header=None, names=["std", "t_start"])
        return cls(
            stds=body["std"].to_numpy(np.float64),
            t_starts=body["t_start"].to_numpy(np.int64),
            tol=float(match.group("tol")),
            stat_kind=match.group("stat"),
            T=int(match.group("T")),
        )


def corpus_second_moment(corpus: np.ndarray, std: float = 0.0) -> float:
    """Mean squared deviation from the corpus mean, after blurring by std, in the model domain"""
    images = corpus if std <= 0 else np.stack([blur(img, std) for img in corpus])
    data = to_model(images)
    return float(np.mean((data - data.mean()) ** 2))


def statistic_gap(m_x: float, m_y: float, sched: DiffusionSchedule) -> np.ndarray:
    """log X_t - log Y_t for every t"""
    ab = sched.alpha_bar
    return np.log(ab * m_x + (1.0 - ab)) - np.log(ab * m_y + (1.0 - ab))


def starting_step(m_x: float, m_y: float, tol: float, sched: DiffusionSchedule) -> int:
    """Smallest t whose gap is within tol; T-1 when none is"""
    if m_x <= 0 or m_y <= 0:
        raise TableBuildError(f"second-moment statistic is non-positive (m_x={m_x}, m_y={m_y})")
    within = np.flatnonzero(statistic_gap(m_x, m_y, sched) <= tol)
    if within.size == 0:
        logger.warning(f"gap never falls within tol={tol}; using t={sched.T - 1}")
        return sched.T - 1
    return int(within[0])


def table_from_moments(stds: Sequence[float], m_x: float, m_ys: Sequence[float], tol: float,
                       sched: DiffusionSchedule) -> DSSTable:
    steps = [starting_step(m_x, m_y, tol, sched) for m_y in m_ys]
    return DSSTable(stds=np.asarray(stds, dtype=np.float64), t_starts=np.asarray(steps), tol=tol,
                    stat_kind=STAT_SECOND_MOMENT, T=sched.T)


def build_table(corpus: np.ndarray, grid: Union[StdGrid, Sequence[float]], tol: float,
                sched: DiffusionSchedule, workers: int = 1) -> DSSTable:
    """
    Build the table from a clean unit-range corpus of shape (N, H, W, C)

    Args:
        corpus: Clean images
        grid: Ascending std grid
        tol: Gap tolerance, > 0
        sched: Diffusion schedule
        workers: Threads used for the per-std corpus statistics

    Raises:
        TableBuildError: If the corpus is empty or its statistic is non-positive
    """
    corpus = np.asarray(corpus, dtype=np.float64)
    if corpus.ndim != 4 or corpus.shape[0] == 0:
        raise TableBuildError(f"corpus must have shape (N, H, W, C) with N >= 1, got {corpus.shape}")
    if not tol > 0:
        raise ParameterError("tol", f"must be positive, got {tol}")
    stds = grid_values(grid)
    m_x = corpus_second_moment(corpus)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        m_ys = list(pool.map(lambda s: corpus_second_moment(corpus, s), stds))
    table = table_from_moments(stds, m_x, m_ys, tol, sched)
    if not table.is_monotone():
        logger.warning("DSST starting steps are not monotone in std for this corpus")
    logger.info(
        f"Built DSST table: {len(table)} entries, t_start range "
        f"[{int(table.t_starts.min())}, {int(table.t_starts.max())}]"
    )
    return table


def lookup(table: DSSTable, std_hat: float) -> DsstLookup:
    return table.lookup(std_hat)
