"""Uniform structured grids with two-point-flux connectivity.

Cells are numbered with the first axis fastest (C order on reversed dims), so in
2D cell ``(ix, iy)`` has index ``ix + nx * iy``. 2D grids carry unit thickness.
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Facet:
    cell_a: int
    cell_b: int
    area: float
    distance: float
    normal_axis: int
    normal_sign: int = 1


@dataclass(frozen=True)
class BoundaryFacet:
    cell: int
    area: float
    distance: float  # cell centre to boundary
    normal_axis: int
    normal_sign: int  # +1 on the high side of the axis, -1 on the low side


@dataclass(frozen=True, eq=False)
class Grid:
    dims: tuple
    lengths: tuple
    cell_size: np.ndarray
    cell_centers: np.ndarray
    cell_volumes: np.ndarray
    # facet arrays (struct-of-arrays); ``facets`` gives record views
    face_a: np.ndarray
    face_b: np.ndarray
    face_area: np.ndarray
    face_dist: np.ndarray
    face_axis: np.ndarray
    bface_cell: np.ndarray
    bface_area: np.ndarray
    bface_dist: np.ndarray
    bface_axis: np.ndarray
    bface_sign: np.ndarray
    _nbr_ptr: np.ndarray = field(repr=False)
    _nbr_face: np.ndarray = field(repr=False)
    _nbr_cell: np.ndarray = field(repr=False)

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def n_cells(self):
        return int(np.prod(self.dims))

    @property
    def n_facets(self):
        return len(self.face_a)

    @property
    def facets(self):
        return [
            Facet(int(a), int(b), float(ar), float(d), int(ax))
            for a, b, ar, d, ax in zip(self.face_a, self.face_b, self.face_area, self.face_dist, self.face_axis)
        ]

    @property
    def boundary_facets(self):
        return [
            BoundaryFacet(int(c), float(ar), float(d), int(ax), int(s))
            for c, ar, d, ax, s in zip(self.bface_cell, self.bface_area, self.bface_dist, self.bface_axis, self.bface_sign)
        ]

    def cell_index(self, ijk):
        idx = 0
        stride = 1
        for i, n in zip(ijk, self.dims):
            if not 0 <= i < n:
                raise IndexError(f"cell coordinate {ijk} outside grid {self.dims}")
            idx += i * stride
            stride *= n
        return idx

    def locate(self, point):
        """Index of the cell containing ``point`` (points on a face go to the higher cell)."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.ndim,):
            raise ValueError(f"expected a {self.ndim}-d point, got {point}")
        ijk = np.floor(point / self.cell_size).astype(int)
        ijk = np.minimum(ijk, np.asarray(self.dims) - 1)
        if np.any(point < 0) or np.any(point > np.asarray(self.lengths)):
            raise ValueError(f"point {point.tolist()} outside the domain {self.lengths}")
        return self.cell_index(ijk)

    def transmissibility_geometry(self):
        """Per-facet area / centre distance."""
        return self.face_area / self.face_dist


def build_grid(dims, lengths):
    """Uniform axis-aligned grid with ``dims`` cells spanning ``lengths`` metres."""
    dims = tuple(int(n) for n in dims)
    lengths = tuple(float(x) for x in lengths)
    if len(dims) not in (2, 3) or len(lengths) != len(dims):
        raise ValueError(f"need 2 or 3 matching extents, got dims={dims} lengths={lengths}")
    if any(n < 1 for n in dims):
        raise ValueError(f"all extents must be >= 1, got {dims}")
    if any(not np.isfinite(x) or x <= 0 for x in lengths):
        raise ValueError(f"all lengths must be > 0, got {lengths}")

    nd = len(dims)
    h = np.array(lengths) / np.array(dims)
    n = int(np.prod(dims))
    # ijk[:, ax] for every cell, first axis fastest
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    ijk = np.stack([g.ravel(order="F") for g in grids], axis=1)
    centers = (ijk + 0.5) * h
    cell_vol = float(np.prod(h))  # unit thickness in 2D
    volumes = np.full(n, cell_vol)

    strides = np.cumprod((1,) + dims[:-1])
    fa, fb, far, fd, fax = [], [], [], [], []
    ba, bar, bd, bax, bs = [], [], [], [], []
    for ax in range(nd):
        area = cell_vol / h[ax]
        low = np.nonzero(ijk[:, ax] < dims[ax] - 1)[0]
        fa.append(low)
        fb.append(low + strides[ax])
        far.append(np.full(len(low), area))
        fd.append(np.full(len(low), h[ax]))
        fax.append(np.full(len(low), ax))
        for sign, sel in ((-1, ijk[:, ax] == 0), (1, ijk[:, ax] == dims[ax] - 1)):
            cells = np.nonzero(sel)[0]
            ba.append(cells)
            bar.append(np.full(len(cells), area))
            bd.append(np.full(len(cells), 0.5 * h[ax]))
            bax.append(np.full(len(cells), ax))
            bs.append(np.full(len(cells), sign))

    face_a = np.concatenate(fa).astype(np.int64)
    face_b = np.concatenate(fb).astype(np.int64)
    order = np.lexsort((face_b, face_a))
    face_a, face_b = face_a[order], face_b[order]
    face_area = np.concatenate(far)[order]
    face_dist = np.concatenate(fd)[order]
    face_axis = np.concatenate(fax)[order].astype(np.int64)

    # incidence lists: cell -> (facet, neighbour)
    inc_cell = np.concatenate([face_a, face_b])
    inc_face = np.concatenate([np.arange(len(face_a))] * 2)
    inc_nbr = np.concatenate([face_b, face_a])
    o = np.lexsort((inc_nbr, inc_cell))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, inc_cell + 1, 1)
    ptr = np.cumsum(ptr)

    return Grid(
        dims=dims,
        lengths=lengths,
        cell_size=h,
        cell_centers=centers,
        cell_volumes=volumes,
        face_a=face_a,
        face_b=face_b,
        face_area=face_area,
        face_dist=face_dist,
        face_axis=face_axis,
        bface_cell=np.concatenate(ba).astype(np.int64),
        bface_area=np.concatenate(bar),
        bface_dist=np.concatenate(bd),
        bface_axis=np.concatenate(bax).astype(np.int64),
        bface_sign=np.concatenate(bs).astype(np.int64),
        _nbr_ptr=ptr,
        _nbr_face=inc_face[o],
        _nbr_cell=inc_nbr[o],
    )


def facet_neighbors(grid, cell):
    """List of ``(facet index, neighbour cell)`` pairs around ``cell``."""
    if not 0 <= cell < grid.n_cells:
        raise IndexError(f"cell {cell} out of range [0, {grid.n_cells})")
    lo, hi = grid._nbr_ptr[cell], grid._nbr_ptr[cell + 1]
    return [(int(f), int(c)) for f, c in zip(grid._nbr_face[lo:hi], grid._nbr_cell[lo:hi])]
