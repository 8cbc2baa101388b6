"""Heightfield ground models: flat plane and seeded rough terrain.

Rough terrain is value noise: a coarse lattice of seeded uniform heights
(one lattice node every ``LATTICE_STEP`` grid cells) bilinearly upsampled
to the fine grid, so elevation varies smoothly on a ~4-cell length scale.
Height queries interpolate bilinearly between fine-grid nodes and clamp
to the edge values outside the grid, so the ground function is continuous
everywhere. The grid is centered on the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("flat", "rough")
LATTICE_STEP = 4


@dataclass(frozen=True, eq=False)
class Terrain:
    kind: str
    seed: int
    amplitude: float
    cell_size: float
    height_grid: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown terrain kind {self.kind!r}")
        if self.cell_size <= 0.0:
            raise ValueError("cell_size must be positive")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be non-negative")
        grid = np.array(self.height_grid, dtype=np.float64)
        if grid.ndim != 2:
            raise ValueError("height_grid must be 2-D")
        grid.setflags(write=False)
        object.__setattr__(self, "height_grid", grid)


def make_terrain(kind: str, seed: int, amplitude: float = 0.03,
                 cell_size: float = 0.05, extent: float = 8.0) -> Terrain:
    """Build a terrain covering [-extent, extent] in x and y.

    Flat terrain ignores seed and amplitude and is height 0 everywhere.
    Rough terrain is deterministic for a given (seed, amplitude,
    cell_size, extent) and its heights stay within [-amplitude, amplitude].
    """
    if kind not in KINDS:
        raise ValueError(f"unknown terrain kind {kind!r}")
    if cell_size <= 0.0:
        raise ValueError("cell_size must be positive")
    if amplitude < 0.0:
        raise ValueError("amplitude must be non-negative")
    if extent <= 0.0:
        raise ValueError("extent must be positive")
    if kind == "flat":
        # A 1x1 zero grid plus edge clamping gives height 0 everywhere.
        return Terrain("flat", seed, 0.0, cell_size, np.zeros((1, 1)))

    n = 2 * int(round(extent / cell_size)) + 1
    n_coarse = (n - 1 + LATTICE_STEP - 1) // LATTICE_STEP + 1
    rng = np.random.default_rng(seed)
    coarse = rng.uniform(-amplitude, amplitude, size=(n_coarse, n_coarse))

    # Bilinear upsample of the coarse lattice onto the fine grid.
    pos = np.arange(n) / LATTICE_STEP
    i0 = np.minimum(pos.astype(np.int64), n_coarse - 2)
    f = pos - i0
    fy, fx = f[:, None], f[None, :]
    r0, r1 = i0[:, None], i0[:, None] + 1
    c0, c1 = i0[None, :], i0[None, :] + 1
    grid = ((1 - fy) * (1 - fx) * coarse[r0, c0] + (1 - fy) * fx * coarse[r0, c1]
            + fy * (1 - fx) * coarse[r1, c0] + fy * fx * coarse[r1, c1])
    np.clip(grid, -amplitude, amplitude, out=grid)
    return Terrain("rough", seed, amplitude, cell_size, grid)


def height_at(terrain: Terrain, x, y):
    """Ground height at world (x, y); accepts scalars or same-shape arrays."""
    grid = terrain.height_grid
    rows, cols = grid.shape
    if rows == 1 and cols == 1:
        # Degenerate grid (flat terrain): constant height everywhere.
        value = float(grid[0, 0])
        if np.isscalar(x) or np.ndim(x) == 0:
            return value
        return np.full(np.shape(x), value)
    gx = np.asarray(x, dtype=np.float64) / terrain.cell_size + (cols - 1) / 2.0
    gy = np.asarray(y, dtype=np.float64) / terrain.cell_size + (rows - 1) / 2.0
    j0 = np.clip(np.floor(gx).astype(np.int64), 0, max(cols - 2, 0))
    i0 = np.clip(np.floor(gy).astype(np.int64), 0, max(rows - 2, 0))
    fx = np.clip(gx - j0, 0.0, 1.0)
    fy = np.clip(gy - i0, 0.0, 1.0)
    j1 = np.minimum(j0 + 1, cols - 1)
    i1 = np.minimum(i0 + 1, rows - 1)
    h = ((1 - fy) * (1 - fx) * grid[i0, j0] + (1 - fy) * fx * grid[i0, j1]
         + fy * (1 - fx) * grid[i1, j0] + fy * fx * grid[i1, j1])
    return float(h) if np.isscalar(x) or np.ndim(x) == 0 else h


def save_terrain(terrain: Terrain, path: str) -> None:
    """Write a terrain as plain text: 6 header lines, then row-major heights."""
    rows, cols = terrain.height_grid.shape
    lines = [
        f"kind {terrain.kind}",
        f"seed {terrain.seed}",
        f"amplitude {terrain.amplitude!r}",
        f"cell_size {terrain.cell_size!r}",
        f"rows {rows}",
        f"cols {cols}",
    ]
    for row in terrain.height_grid:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_terrain(path: str) -> Terrain:
    with open(path, encoding="ascii") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if len(lines) < 6:
        raise ValueError(f"terrain file {path!r} is truncated")
    header = {}
    for line in lines[:6]:
        key, _, value = line.partition(" ")
        header[key] = value
    expected = ("kind", "seed", "amplitude", "cell_size", "rows", "cols")
    if sorted(header) != sorted(expected):
        raise ValueError(f"terrain file {path!r} has a malformed header")
    rows, cols = int(header["rows"]), int(header["cols"])
    body = lines[6:]
    if len(body) != rows:
        raise ValueError(
            f"terrain file {path!r}: expected {rows} height rows, found {len(body)}"
        )
    grid = np.array([[float(v) for v in line.split()] for line in body])
    if grid.shape != (rows, cols):
        raise ValueError(f"terrain file {path!r}: ragged or mis-sized height rows")
    return Terrain(header["kind"], int(header["seed"]), float(header["amplitude"]),
                   float(header["cell_size"]), grid)
