"""Dimensional-stacking layout: nested grids over subspace dimensions.

Dimension pairs are assigned to grid levels in order: dimension 0 on the
outer columns, dimension 1 on the outer rows, dimensions 2 and 3 on the
grid nested inside each outer cell, and so on. An odd trailing dimension
becomes a one-row strip. Leaf entries reference cells by their full
coordinate tuple, and the mapping between coordinates and leaf positions
is a bijection.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Union

from .subspace import Subspace

# Readability degrades past this many stacked dimensions; extraction is the
# intended escape hatch, so this only warns.
SOFT_DIMENSION_CAP = 5


@dataclass(frozen=True)
class CellRef:
    coords: tuple[int, ...]


@dataclass
class GridLevel:
    level: int
    x_dim: int  # dimension index mapped to columns
    y_dim: int | None  # dimension index mapped to rows, None for a strip
    cols: int
    rows: int
    entries: list[list["NestedGrid"]] = field(default_factory=list)  # [row][col]


NestedGrid = Union[GridLevel, CellRef]


def grid_layout(subspace: Subspace) -> NestedGrid:
    """Pure layout of the instantiated subspace as nested grids."""
    sizes = subspace.radices()
    if len(sizes) > SOFT_DIMENSION_CAP:
        warnings.warn(
            f"{len(sizes)} dimensions stacked; grids stay readable up to about "
            f"{SOFT_DIMENSION_CAP} - consider extracting a cell",
            UserWarning,
            stacklevel=2,
        )
    return _build(sizes, 0, ())


def _build(sizes: list[int], level: int, prefix: tuple[int, ...]) -> NestedGrid:
    i = 2 * level
    if i >= len(sizes):
        return CellRef(prefix)
    cols = sizes[i]
    has_y = i + 1 < len(sizes)
    rows = sizes[i + 1] if has_y else 1
    grid = GridLevel(level=level, x_dim=i, y_dim=i + 1 if has_y else None,
                     cols=cols, rows=rows)
    for r in range(rows):
        row_entries: list[NestedGrid] = []
        for c in range(cols):
            child_prefix = prefix + ((c, r) if has_y else (c,))
            row_entries.append(_build(sizes, level + 1, child_prefix))
        grid.entries.append(row_entries)
    return grid


def grid_depth(grid: NestedGrid) -> int:
    if isinstance(grid, CellRef):
        return 0
    return 1 + max(grid_depth(e) for row in grid.entries for e in row)


def leaf_positions(grid: NestedGrid) -> dict[tuple[tuple[int, int], ...], tuple[int, ...]]:
    """Map each leaf's (row, col) path down the levels to its cell coords."""
    out: dict[tuple[tuple[int, int], ...], tuple[int, ...]] = {}

    def walk(g: NestedGrid, path: tuple[tuple[int, int], ...]) -> None:
        if isinstance(g, CellRef):
            out[path] = g.coords
            return
        for r, row in enumerate(g.entries):
            for c, entry in enumerate(row):
                walk(entry, path + ((r, c),))

    walk(grid, ())
    return out


def grid_to_dict(grid: NestedGrid) -> dict:
    if isinstance(grid, CellRef):
        return {"cell": list(grid.coords)}
    return {
        "level": grid.level,
        "x_dim": grid.x_dim,
        "y_dim": grid.y_dim,
        "cols": grid.cols,
        "rows": grid.rows,
        "entries": [[grid_to_dict(e) for e in row] for row in grid.entries],
    }
