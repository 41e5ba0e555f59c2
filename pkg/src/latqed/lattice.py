"""Rectangular staggered lattice and exact discrete exterior-calculus operators.

Scalar (0-form) fields live on vertices, gauge/electric 1-forms on edges,
magnetic 2-forms on face centers.  Half-integer placements are stored at the
integer base site of their edge/face, with linear site index
J = i + nx*(j + ny*k).

The operators form an exact chain complex on periodic lattices:
curl_d(grad_d(f)) = 0 and div_b(curl_t(F)) = 0 hold to roundoff.  Natural
units (hbar = c = 1) are used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

X, Y, Z = 0, 1, 2

PERIODIC = "periodic"
MUR2 = "mur2"


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice dimensions, spacings, time step and boundary kinds.

    Owner of all index arithmetic.  Boundary kind is one of ``"periodic"``
    or ``"mur2"``; the absorbing (Mur) boundary is only supported along z.
    """

    nx: int
    ny: int
    nz: int
    dx: float = 1.0
    dy: float = 1.0
    dz: float = 1.0
    dt: float = 0.1
    boundary_x: str = PERIODIC
    boundary_y: str = PERIODIC
    boundary_z: str = PERIODIC

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("lattice counts must be >= 1")
        if min(self.dx, self.dy, self.dz) <= 0 or self.dt <= 0:
            raise ValueError("lattice spacings and dt must be > 0")
        for name in ("boundary_x", "boundary_y"):
            if getattr(self, name) != PERIODIC:
                raise ValueError(f"{name} must be periodic (mur2 is z-only)")
        if self.boundary_z not in (PERIODIC, MUR2):
            raise ValueError("boundary_z must be 'periodic' or 'mur2'")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def spacings(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def dv(self) -> float:
        """Volume form dx*dy*dz of one cell."""
        return self.dx * self.dy * self.dz

    @property
    def volume(self) -> float:
        return self.n_sites * self.dv

    @property
    def open_z(self) -> bool:
        return self.boundary_z == MUR2

    def site_index(self, i: int, j: int, k: int) -> int:
        """Linear site index J = i + nx*(j + ny*k)."""
        return i + self.nx * (j + self.ny * k)


def _check(data: np.ndarray, shape: tuple, kind: str) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.shape != shape:
        raise ValueError(f"{kind} field expects shape {shape}, got {data.shape}")
    return data


@dataclass(frozen=True)
class VertexField:
    """Real 0-form sampled at lattice vertices, shape (nx, ny, nz)."""

    data: np.ndarray
    spec: LatticeSpec = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.spec is not None:
            object.__setattr__(self, "data", _check(self.data, self.spec.shape, "vertex"))

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "VertexField":
        return cls(np.zeros(spec.shape), spec)


@dataclass(frozen=True)
class EdgeField:
    """Real 1-form with x/y/z components on the matching edges, shape (3, nx, ny, nz).

    Component d is stored at the integer base site of its d-edge
    (e.g. the x component at (i+1/2, j, k) is stored at index (i, j, k)).
    """

    data: np.ndarray
    spec: LatticeSpec = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.spec is not None:
            object.__setattr__(self, "data", _check(self.data, (3,) + self.spec.shape, "edge"))

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "EdgeField":
        return cls(np.zeros((3,) + spec.shape), spec)


@dataclass(frozen=True)
class FaceField:
    """Real 2-form with components on face centers, shape (3, nx, ny, nz).

    Component d sits on the face normal to d; e.g. the x component at
    (i, j+1/2, k+1/2) is stored at index (i, j, k).
    """

    data: np.ndarray
    spec: LatticeSpec = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.spec is not None:
            object.__setattr__(self, "data", _check(self.data, (3,) + self.spec.shape, "face"))

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "FaceField":
        return cls(np.zeros((3,) + spec.shape), spec)


# --- shift helpers -----------------------------------------------------------
#
# shift_plus(f, d)[J]  = f[J + d_hat]   (forward neighbor)
# shift_minus(f, d)[J] = f[J - d_hat]   (backward neighbor)
#
# With open_z the z wrap is dropped: out-of-domain neighbors contribute 0,
# so differences at the z faces become one-sided.  The Mur boundary planes
# themselves are owned by the experiments layer.


def _axis(f: np.ndarray, d: int) -> int:
    return f.ndim - 3 + d


def shift_plus(f: np.ndarray, d: int, open_z: bool = False) -> np.ndarray:
    if open_z and d == Z:
        out = np.zeros_like(f)
        out[..., :-1] = f[..., 1:]
        return out
    return np.roll(f, -1, axis=_axis(f, d))


def shift_minus(f: np.ndarray, d: int, open_z: bool = False) -> np.ndarray:
    if open_z and d == Z:
        out = np.zeros_like(f)
        out[..., 1:] = f[..., :-1]
        return out
    return np.roll(f, 1, axis=_axis(f, d))


# --- DEC operators -----------------------------------------------------------


def grad_d(f: VertexField, open_z: bool = False) -> EdgeField:
    """Discrete gradient: forward differences, component d on the d-edge.

    (grad f)_d[J] = (f[J + d_hat] - f[J]) / delta_d
    """
    spec = f.spec
    g = f.data
    out = np.empty((3,) + spec.shape)
    for d, delta in enumerate(spec.spacings):
        out[d] = (shift_plus(g, d, open_z) - g) / delta
    return EdgeField(out, spec)


def curl_d(a: EdgeField, open_z: bool = False) -> FaceField:
    """Discrete curl: face-centered circulation of an edge field.

    (curl a)_x[J] = (a_z[J+y] - a_z[J])/dy - (a_y[J+z] - a_y[J])/dz, cyclic.
    """
    spec = a.spec
    ax, ay, az = a.data
    dx, dy, dz = spec.spacings
    out = np.empty((3,) + spec.shape)
    out[X] = (shift_plus(az, Y, open_z) - az) / dy - (shift_plus(ay, Z, open_z) - ay) / dz
    out[Y] = (shift_plus(ax, Z, open_z) - ax) / dz - (shift_plus(az, X, open_z) - az) / dx
    out[Z] = (shift_plus(ay, X, open_z) - ay) / dx - (shift_plus(ax, Y, open_z) - ax) / dy
    return FaceField(out, spec)


def div_d(y: EdgeField, open_z: bool = False) -> VertexField:
    """Discrete divergence: backward differences onto vertices.

    (div y)[J] = sum_d (y_d[J] - y_d[J - d_hat]) / delta_d
    """
    spec = y.spec
    yx, yy, yz = y.data
    dx, dy, dz = spec.spacings
    out = (yx - shift_minus(yx, X, open_z)) / dx
    out = out + (yy - shift_minus(yy, Y, open_z)) / dy
    out = out + (yz - shift_minus(yz, Z, open_z)) / dz
    return VertexField(out, spec)


def curl_t(f: FaceField, open_z: bool = False) -> EdgeField:
    """Adjoint of curl_d under the flat inner product: backward-difference curl."""
    spec = f.spec
    fx, fy, fz = f.data
    dx, dy, dz = spec.spacings
    out = np.empty((3,) + spec.shape)
    out[X] = (fz - shift_minus(fz, Y, open_z)) / dy - (fy - shift_minus(fy, Z, open_z)) / dz
    out[Y] = (fx - shift_minus(fx, Z, open_z)) / dz - (fz - shift_minus(fz, X, open_z)) / dx
    out[Z] = (fy - shift_minus(fy, X, open_z)) / dx - (fx - shift_minus(fx, Y, open_z)) / dy
    return EdgeField(out, spec)


def curlT_curl(a: EdgeField, open_z: bool = False) -> EdgeField:
    """Composite operator: gradient of (1/2) sum_K (curl a)^2_K with respect to a.

    Equals curl_t(curl_d(a)); symmetric positive semidefinite, with the
    gradients of vertex fields in its kernel.
    """
    return curl_t(curl_d(a, open_z), open_z)


def edge_inner(a: EdgeField, b: EdgeField) -> float:
    """Volume-weighted inner product sum_J a_J . b_J * dV."""
    return float(np.sum(a.data * b.data)) * a.spec.dv
