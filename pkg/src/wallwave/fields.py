"""Uniform-grid complex fields and their on-disk formats.

The binary snapshot format is flat and self-describing:

    magic  b"WWF1"          4 bytes
    version                 u32 (currently 1)
    ncomp                   u32 (1 scalar, 2 spinor or (u, eps du/dt) pair)
    nx, ny                  u64 each
    x0, y0, hx, hy          f64 each (grid origin and spacings)
    time, epsilon           f64 each
    model                   u32 (0 unspecified, 1 Dirac, 2 Klein-Gordon)
    reserved                u32 (zero)
    data                    complex128, C-order, shape (ncomp, nx, ny)

Readers reject unknown magic/version.  Round trips are bit-exact.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch

__all__ = ["GridSpec2D", "Field", "write_field", "read_field", "write_slice_csv"]

_MAGIC = b"WWF1"
_HEADER = struct.Struct("<4sIIQQddddddII")
_MODEL_CODES = {None: 0, "dirac": 1, "klein_gordon": 2}
_MODEL_NAMES = {v: k for k, v in _MODEL_CODES.items()}


@dataclass(frozen=True)
class GridSpec2D:
    """Uniform rectangular grid, periodic for the spectral solvers.

    ``x0, y0`` are the coordinates of sample (0, 0); the axes run
    x0 + hx*arange(nx) (right endpoint excluded, as a periodic grid).
    """

    x0: float
    y0: float
    nx: int
    ny: int
    hx: float
    hy: float

    @classmethod
    def from_box(cls, xlim, ylim, nx, ny):
        hx = (xlim[1] - xlim[0]) / nx
        hy = (ylim[1] - ylim[0]) / ny
        return cls(float(xlim[0]), float(ylim[0]), int(nx), int(ny), hx, hy)

    @property
    def x(self):
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.hy * np.arange(self.ny)

    def meshgrid(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def cell_area(self):
        return self.hx * self.hy

    def wavenumbers(self):
        kx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.hx)
        ky = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.hy)
        return kx, ky


@dataclass
class Field:
    """Complex field sampled on a GridSpec2D; values shape (ncomp, nx, ny)."""

    grid: GridSpec2D
    values: np.ndarray
    time: float = 0.0
    epsilon: float = 0.0
    model: str = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if self.values.ndim == 2:
            self.values = self.values[None, :, :]
        if self.values.shape[1:] != (self.grid.nx, self.grid.ny):
            raise GridMismatch(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )

    @property
    def ncomp(self):
        return self.values.shape[0]

    def copy(self):
        return Field(self.grid, self.values.copy(), self.time, self.epsilon, self.model)

    def l2_norm(self, comps=None):
        v = self.values if comps is None else self.values[list(comps)]
        return float(np.sqrt(np.sum(np.abs(v) ** 2) * self.grid.cell_area))

    def pointwise_abs(self, comps=None):
        v = self.values if comps is None else self.values[list(comps)]
        return np.sqrt(np.sum(np.abs(v) ** 2, axis=0))

    def same_grid(self, other):
        return self.grid == other.grid and self.values.shape == other.values.shape


def write_field(path, fld):
    g = fld.grid
    header = _HEADER.pack(
        _MAGIC, 1, fld.ncomp, g.nx, g.ny,
        g.x0, g.y0, g.hx, g.hy,
        float(fld.time), float(fld.epsilon),
        _MODEL_CODES.get(fld.model, 0), 0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(fld.values, dtype=np.complex128).tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, ncomp, nx, ny, x0, y0, hx, hy, t, eps, model, _ = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError(f"not a wallwave field file: bad magic {magic!r}")
        if version != 1:
            raise ValueError(f"unsupported field file version {version}")
        data = np.frombuffer(fh.read(), dtype=np.complex128).reshape(ncomp, nx, ny)
    grid = GridSpec2D(x0, y0, nx, ny, hx, hy)
    return Field(grid, data.copy(), time=t, epsilon=eps, model=_MODEL_NAMES.get(model))


def write_slice_csv(path, fld, axis="x", index=None):
    """1-D slice through the field: coordinate plus Re/Im of each component."""
    import csv

    g = fld.grid
    if axis == "x":
        index = g.ny // 2 if index is None else int(index)
        coord, vals = g.x, fld.values[:, :, index]
    elif axis == "y":
        index = g.nx // 2 if index is None else int(index)
        coord, vals = g.y, fld.values[:, index, :]
    else:
        raise ValueError("axis must be 'x' or 'y'")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = [axis]
        for c in range(fld.ncomp):
            head += [f"re{c}", f"im{c}"]
        w.writerow(head)
        for i, c0 in enumerate(coord):
            row = [f"{c0:.12g}"]
            for c in range(fld.ncomp):
                row += [f"{vals[c, i].real:.12g}", f"{vals[c, i].imag:.12g}"]
            w.writerow(row)
