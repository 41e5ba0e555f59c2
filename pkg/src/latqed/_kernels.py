"""Optional numba-compiled hot kernels.

The kinetic generator dominates the runtime (it sits inside every Krylov
matvec), so it gets a compiled stencil kernel with explicit periodic wrap.
Arithmetic matches the numpy path term by term; no reductions happen inside
parallel loops, so results do not depend on the thread count.  Everything
falls back to numpy when numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(f):
            return f

        return wrap

    prange = range  # type: ignore


@njit(parallel=True, cache=True)
def _xi_kernel(psi, cos, sin, dx, dy, dz, alpha, beta, out):
    nb, _, nx, ny, nz = psi.shape
    for bi in prange(nb * nx):
        b = bi // nx
        i = bi % nx
        ip = i + 1 if i + 1 < nx else 0
        im = i - 1 if i > 0 else nx - 1
        for j in range(ny):
            jp = j + 1 if j + 1 < ny else 0
            jm = j - 1 if j > 0 else ny - 1
            for k in range(nz):
                kp = k + 1 if k + 1 < nz else 0
                km = k - 1 if k > 0 else nz - 1

                p1r = psi[b, 0, i, j, k]
                p2r = psi[b, 1, i, j, k]
                p3r = psi[b, 2, i, j, k]
                p4r = psi[b, 3, i, j, k]
                p1i = psi[b, 4, i, j, k]
                p2i = psi[b, 5, i, j, k]
                p3i = psi[b, 6, i, j, k]
                p4i = psi[b, 7, i, j, k]

                cx = cos[0, i, j, k]
                sx = sin[0, i, j, k]
                cxm = cos[0, im, j, k]
                sxm = sin[0, im, j, k]
                cy = cos[1, i, j, k]
                sy = sin[1, i, j, k]
                cym = cos[1, i, jm, k]
                sym = sin[1, i, jm, k]
                cz = cos[2, i, j, k]
                sz = sin[2, i, j, k]
                czm = cos[2, i, j, km]
                szm = sin[2, i, j, km]

                # x couplings
                m4r = psi[b, 3, im, j, k] * cxm - psi[b, 7, im, j, k] * sxm
                m4i = psi[b, 7, im, j, k] * cxm + psi[b, 3, im, j, k] * sxm
                m2r = psi[b, 1, im, j, k] * cxm - psi[b, 5, im, j, k] * sxm
                m2i = psi[b, 5, im, j, k] * cxm + psi[b, 1, im, j, k] * sxm
                pull3r = psi[b, 2, ip, j, k] * cx + psi[b, 6, ip, j, k] * sx
                pull3i = psi[b, 6, ip, j, k] * cx - psi[b, 2, ip, j, k] * sx
                pull1r = psi[b, 0, ip, j, k] * cx + psi[b, 4, ip, j, k] * sx
                pull1i = psi[b, 4, ip, j, k] * cx - psi[b, 0, ip, j, k] * sx

                o1r = (m4r - p4r) / dx
                o1i = (m4i - p4i) / dx
                o3r = (m2r - p2r) / dx
                o3i = (m2i - p2i) / dx
                o2r = (p3r - pull3r) / dx
                o2i = (p3i - pull3i) / dx
                o4r = (p1r - pull1r) / dx
                o4i = (p1i - pull1i) / dx

                # y couplings
                m4r = psi[b, 3, i, jm, k] * cym - psi[b, 7, i, jm, k] * sym
                m4i = psi[b, 7, i, jm, k] * cym + psi[b, 3, i, jm, k] * sym
                m2r = psi[b, 1, i, jm, k] * cym - psi[b, 5, i, jm, k] * sym
                m2i = psi[b, 5, i, jm, k] * cym + psi[b, 1, i, jm, k] * sym
                pull3r = psi[b, 2, i, jp, k] * cy + psi[b, 6, i, jp, k] * sy
                pull3i = psi[b, 6, i, jp, k] * cy - psi[b, 2, i, jp, k] * sy
                pull1r = psi[b, 0, i, jp, k] * cy + psi[b, 4, i, jp, k] * sy
                pull1i = psi[b, 4, i, jp, k] * cy - psi[b, 0, i, jp, k] * sy

                o1r += (m4i - p4i) / dy
                o1i += (p4r - m4r) / dy
                o3r += (m2i - p2i) / dy
                o3i += (p2r - m2r) / dy
                o2r += (pull3i - p3i) / dy
                o2i += (p3r - pull3r) / dy
                o4r += (pull1i - p1i) / dy
                o4i += (p1r - pull1r) / dy

                # z couplings
                m3r = psi[b, 2, i, j, km] * czm - psi[b, 6, i, j, km] * szm
                m3i = psi[b, 6, i, j, km] * czm + psi[b, 2, i, j, km] * szm
                m2r = psi[b, 1, i, j, km] * czm - psi[b, 5, i, j, km] * szm
                m2i = psi[b, 5, i, j, km] * czm + psi[b, 1, i, j, km] * szm
                pull1r = psi[b, 0, i, j, kp] * cz + psi[b, 4, i, j, kp] * sz
                pull1i = psi[b, 4, i, j, kp] * cz - psi[b, 0, i, j, kp] * sz
                pull4r = psi[b, 3, i, j, kp] * cz + psi[b, 7, i, j, kp] * sz
                pull4i = psi[b, 7, i, j, kp] * cz - psi[b, 3, i, j, kp] * sz

                o1r += (m3r - p3r) / dz
                o1i += (m3i - p3i) / dz
                o3r += (p1r - pull1r) / dz
                o3i += (p1i - pull1i) / dz
                o2r += (pull4r - p4r) / dz
                o2i += (pull4i - p4i) / dz
                o4r += (p2r - m2r) / dz
                o4i += (p2i - m2i) / dz

                out[b, 0, i, j, k] = beta * p1r + alpha * o1r
                out[b, 1, i, j, k] = beta * p2r + alpha * o2r
                out[b, 2, i, j, k] = beta * p3r + alpha * o3r
                out[b, 3, i, j, k] = beta * p4r + alpha * o4r
                out[b, 4, i, j, k] = beta * p1i + alpha * o1i
                out[b, 5, i, j, k] = beta * p2i + alpha * o2i
                out[b, 6, i, j, k] = beta * p3i + alpha * o3i
                out[b, 7, i, j, k] = beta * p4i + alpha * o4i


def _run_xi(psi: np.ndarray, cos, sin, spacings, alpha: float, beta: float) -> np.ndarray:
    shape = psi.shape
    flat = np.ascontiguousarray(psi).reshape((-1,) + shape[-4:])
    out = np.empty_like(flat)
    _xi_kernel(flat, cos, sin, spacings[0], spacings[1], spacings[2], alpha, beta, out)
    return out.reshape(shape)


def apply_xi_numba(psi: np.ndarray, cos, sin, spacings) -> np.ndarray:
    return _run_xi(psi, cos, sin, spacings, 1.0, 0.0)


def xi_axpby_numba(psi: np.ndarray, cos, sin, spacings, alpha: float, beta: float) -> np.ndarray:
    """beta * psi + alpha * Xi(psi) in one pass (the Cayley matvec)."""
    return _run_xi(psi, cos, sin, spacings, alpha, beta)
