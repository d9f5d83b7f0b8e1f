"""Checkerboard dataset generation, CSV persistence, partitioning, splits.

The synthetic task is a 4x4 checkerboard over the unit square: each of the 16
cells (side 0.25) holds an isotropic Gaussian cluster at its center, labeled
by cell parity, +1 on the (0,0) cell. Points are truncated to [0,1]^2 by
resampling so the boundary carries no atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID = 4
CELL = 0.25


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix (n, d) with labels in {-1, +1}."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if x.ndim != 2 or len(x) != len(y) or y.ndim != 1:
            raise DataError("features must be (n, d) with matching (n,) labels")
        if len(y) and not np.all(np.isin(y, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.y)

    @property
    def dim(self):
        return self.x.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        return LabeledDataset(self.x[idx], self.y[idx])

    def union(self, other: "LabeledDataset") -> "LabeledDataset":
        return LabeledDataset(np.vstack([self.x, other.x]),
                              np.concatenate([self.y, other.y]))


@dataclass(frozen=True)
class CheckerboardSpec:
    points_per_cell: int = 10
    sigma: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if self.points_per_cell < 1:
            raise DataError("points_per_cell must be positive")
        if not self.sigma > 0:
            raise DataError("sigma must be positive")

    @property
    def total_points(self):
        return GRID * GRID * self.points_per_cell


def cell_center(col: int, row: int):
    return np.array([(col + 0.5) * CELL, (row + 0.5) * CELL])


def cell_label(col: int, row: int) -> int:
    return 1 if (row + col) % 2 == 0 else -1


def cell_of(point) -> tuple[int, int]:
    # boundary points (coordinate exactly 1.0) belong to the last cell
    col = min(int(point[0] / CELL), GRID - 1)
    row = min(int(point[1] / CELL), GRID - 1)
    return col, row


def gen_checkerboard(spec: CheckerboardSpec) -> LabeledDataset:
    rng = np.random.default_rng(spec.seed)
    xs, ys = [], []
    for col in range(GRID):
        for row in range(GRID):
            center = cell_center(col, row)
            pts = np.empty((spec.points_per_cell, 2))
            got = 0
            while got < spec.points_per_cell:
                cand = rng.normal(center, spec.sigma, size=(spec.points_per_cell, 2))
                ok = cand[np.all((cand >= 0.0) & (cand <= 1.0), axis=1)]
                take = min(len(ok), spec.points_per_cell - got)
                pts[got:got + take] = ok[:take]
                got += take
            xs.append(pts)
            ys.append(np.full(spec.points_per_cell, cell_label(col, row)))
    return LabeledDataset(np.concatenate(xs), np.concatenate(ys))


def save_csv(dataset: LabeledDataset, path, header: bool = True) -> None:
    if dataset.dim != 2:
        raise DataError("CSV format is two features wide")
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write("x1,x2,label\n")
        for xi, yi in zip(dataset.x, dataset.y):
            # repr of a Python float round-trips exactly
            fh.write(f"{float(xi[0])!r},{float(xi[1])!r},{yi:d}\n")


def load_csv(path) -> LabeledDataset:
    xs, ys = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.lower().replace(" ", "") == "x1,x2,label":
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataError(f"line {lineno}: expected 3 comma-separated fields")
            try:
                x1, x2 = float(parts[0]), float(parts[1])
            except ValueError:
                raise DataError(f"line {lineno}: malformed feature value") from None
            if parts[2].strip() not in ("1", "-1", "+1"):
                raise DataError(f"line {lineno}: label must be 1 or -1")
            xs.append((x1, x2))
            ys.append(int(parts[2]))
    if not xs:
        raise DataError("empty dataset file")
    return LabeledDataset(np.array(xs), np.array(ys))


@dataclass(frozen=True)
class PartitionPlan:
    strategy: str = "region"  # "region" | "random"
    n_nodes: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("region", "random"):
            raise DataError(f"unknown partition strategy {self.strategy!r}")
        if self.n_nodes < 1:
            raise DataError("n_nodes must be positive")


def _rebalance(indices: list[np.ndarray], y: np.ndarray) -> list[np.ndarray]:
    """Swap points between nodes until every node holds both labels."""
    parts = [list(ix) for ix in indices]
    for k, part in enumerate(parts):
        for lab in (1, -1):
            if any(y[i] == lab for i in part):
                continue
            for j, donor in enumerate(parts):
                if j == k or sum(y[i] == lab for i in donor) < 2:
                    continue
                give = next(i for i in donor if y[i] == lab)
                take = next(i for i in part if y[i] == -lab)
                donor.remove(give)
                donor.append(take)
                part.remove(take)
                part.append(give)
                break
            else:
                raise DataError(f"cannot give node {k} both labels")
    return [np.array(sorted(p), dtype=int) for p in parts]


def partition(dataset: LabeledDataset, plan: PartitionPlan) -> list[np.ndarray]:
    """Index lists per node: disjoint, covering, both labels present on each."""
    n = len(dataset)
    if plan.n_nodes > n:
        raise DataError("more nodes than data points")
    if plan.strategy == "region":
        if (GRID * GRID) % plan.n_nodes != 0:
            raise DataError("region partition needs n_nodes dividing 16")
        per = (GRID * GRID) // plan.n_nodes
        cells = np.array([cell_of(p) for p in dataset.x])
        flat = cells[:, 0] * GRID + cells[:, 1]  # column-major cell index
        out = [np.where((flat >= k * per) & (flat < (k + 1) * per))[0]
               for k in range(plan.n_nodes)]
    else:
        rng = np.random.default_rng(plan.seed)
        order = rng.permutation(n)
        out = [np.sort(order[k::plan.n_nodes]) for k in range(plan.n_nodes)]
    if any(len(ix) == 0 for ix in out):
        raise DataError("a node received no data")
    return _rebalance(out, dataset.y)


def train_test_split(dataset: LabeledDataset, test_fraction: float = 0.25,
                     seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stratified index split; returns (train_idx, test_idx)."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for lab in (1, -1):
        ix = np.where(dataset.y == lab)[0]
        if len(ix) == 0:
            continue
        ix = ix[rng.permutation(len(ix))]
        k = int(round(test_fraction * len(ix)))
        test.append(ix[:k])
        train.append(ix[k:])
    train = np.sort(np.concatenate(train))
    test = np.sort(np.concatenate(test)) if test else np.array([], dtype=int)
    if len(train) == 0 or len(test) == 0:
        raise DataError("split leaves an empty side")
    return train, test
