"""Split discrete Hamiltonians and the generators of the three subsystems.

The total energy splits as H = H1 (bispinor momentum) + H2 (bispinor
mass-energy) + H3 (gauge field).  The H1 generator is implemented twice on
purpose: ``apply_xi`` transcribes the eight real evolution equations
directly, while ``dirac_kinetic``/``eval_H1`` go through the complex
covariant-derivative matrix.  The two routes are independent transcriptions
of the same operator and are cross-checked in the test suite.

Natural units hbar = c = 1; the 4*pi factors of Gaussian units are kept.
"""

from __future__ import annotations

import numpy as np

from .lattice import EdgeField, LatticeSpec, VertexField, X, Y, Z, curl_d, div_d, grad_d, shift_minus, shift_plus
from .spinor import SpinorField, WilsonLineCache, covariant_pullback, covariant_pushforward

from . import _kernels


def apply_xi(psi: np.ndarray, lines: WilsonLineCache, spec: LatticeSpec) -> np.ndarray:
    """Apply the skew generator of the bispinor-momentum subsystem.

    ``psi`` has shape (..., 8, nx, ny, nz); the result is the time
    derivative of every component under the kinetic Hamiltonian at frozen
    gauge field, with Wilson-rotated neighbor couplings.  Linear in psi.
    """
    if _kernels.HAVE_NUMBA:
        return _kernels.apply_xi_numba(psi, lines.cos, lines.sin, spec.spacings)
    return apply_xi_numpy(psi, lines, spec)


def apply_xi_numpy(psi: np.ndarray, lines: WilsonLineCache, spec: LatticeSpec) -> np.ndarray:
    dx, dy, dz = spec.spacings
    p1r, p2r, p3r, p4r = psi[..., 0, :, :, :], psi[..., 1, :, :, :], psi[..., 2, :, :, :], psi[..., 3, :, :, :]
    p1i, p2i, p3i, p4i = psi[..., 4, :, :, :], psi[..., 5, :, :, :], psi[..., 6, :, :, :], psi[..., 7, :, :, :]
    out = np.zeros_like(psi)
    o1r, o2r, o3r, o4r = out[..., 0, :, :, :], out[..., 1, :, :, :], out[..., 2, :, :, :], out[..., 3, :, :, :]
    o1i, o2i, o3i, o4i = out[..., 4, :, :, :], out[..., 5, :, :, :], out[..., 6, :, :, :], out[..., 7, :, :, :]

    for d, delta in ((X, dx), (Y, dy), (Z, dz)):
        cos_d, sin_d = lines.cos[d], lines.sin[d]

        if d in (X, Y):
            # backward neighbors of psi_4 / psi_2 rotated by +phase(J-d)
            m4r = shift_minus(p4r * cos_d - p4i * sin_d, d)
            m4i = shift_minus(p4i * cos_d + p4r * sin_d, d)
            m2r = shift_minus(p2r * cos_d - p2i * sin_d, d)
            m2i = shift_minus(p2i * cos_d + p2r * sin_d, d)
            # forward neighbors of psi_3 / psi_1 rotated by -phase(J)
            p3rp, p3ip = shift_plus(p3r, d), shift_plus(p3i, d)
            pull3r = p3rp * cos_d + p3ip * sin_d
            pull3i = p3ip * cos_d - p3rp * sin_d
            p1rp, p1ip = shift_plus(p1r, d), shift_plus(p1i, d)
            pull1r = p1rp * cos_d + p1ip * sin_d
            pull1i = p1ip * cos_d - p1rp * sin_d
            if d == X:
                o1r += (m4r - p4r) / delta
                o1i += (m4i - p4i) / delta
                o3r += (m2r - p2r) / delta
                o3i += (m2i - p2i) / delta
                o2r += (p3r - pull3r) / delta
                o2i += (p3i - pull3i) / delta
                o4r += (p1r - pull1r) / delta
                o4i += (p1i - pull1i) / delta
            else:
                o1r += (m4i - p4i) / delta
                o1i += (p4r - m4r) / delta
                o3r += (m2i - p2i) / delta
                o3i += (p2r - m2r) / delta
                o2r += (pull3i - p3i) / delta
                o2i += (p3r - pull3r) / delta
                o4r += (pull1i - p1i) / delta
                o4i += (p1r - pull1r) / delta
        else:
            m3r = shift_minus(p3r * cos_d - p3i * sin_d, d)
            m3i = shift_minus(p3i * cos_d + p3r * sin_d, d)
            m2r = shift_minus(p2r * cos_d - p2i * sin_d, d)
            m2i = shift_minus(p2i * cos_d + p2r * sin_d, d)
            p1rp, p1ip = shift_plus(p1r, d), shift_plus(p1i, d)
            pull1r = p1rp * cos_d + p1ip * sin_d
            pull1i = p1ip * cos_d - p1rp * sin_d
            p4rp, p4ip = shift_plus(p4r, d), shift_plus(p4i, d)
            pull4r = p4rp * cos_d + p4ip * sin_d
            pull4i = p4ip * cos_d - p4rp * sin_d
            o1r += (m3r - p3r) / delta
            o1i += (m3i - p3i) / delta
            o3r += (p1r - pull1r) / delta
            o3i += (p1i - pull1i) / delta
            o2r += (pull4r - p4r) / delta
            o2i += (pull4i - p4i) / delta
            o4r += (p2r - m2r) / delta
            o4i += (p2i - m2i) / delta
    return out


def apply_mass_generator(
    psi: np.ndarray, phi: np.ndarray, m: float, e: float
) -> np.ndarray:
    """Time derivative generated by the mass-energy Hamiltonian.

    Components 1,2 rotate with e*phi + m, components 3,4 with e*phi - m.
    """
    w_plus = e * phi + m
    w_minus = e * phi - m
    out = np.empty_like(psi)
    out[..., 0, :, :, :] = w_plus * psi[..., 4, :, :, :]
    out[..., 1, :, :, :] = w_plus * psi[..., 5, :, :, :]
    out[..., 2, :, :, :] = w_minus * psi[..., 6, :, :, :]
    out[..., 3, :, :, :] = w_minus * psi[..., 7, :, :, :]
    out[..., 4, :, :, :] = -w_plus * psi[..., 0, :, :, :]
    out[..., 5, :, :, :] = -w_plus * psi[..., 1, :, :, :]
    out[..., 6, :, :, :] = -w_minus * psi[..., 2, :, :, :]
    out[..., 7, :, :, :] = -w_minus * psi[..., 3, :, :, :]
    return out


def dirac_kinetic(psi: SpinorField, lines: WilsonLineCache):
    """The four complex components of the kinetic operator matrix applied to psi.

    Row structure (pull-back D< forward, push-forward D> backward):

        (M psi)_1 = D>_z psi_3 + (D>_x - i D>_y) psi_4
        (M psi)_2 = (D<_x + i D<_y) psi_3 - D<_z psi_4
        (M psi)_3 = D<_z psi_1 + (D>_x - i D>_y) psi_2
        (M psi)_4 = (D<_x + i D<_y) psi_1 - D>_z psi_2
    """

    def pull(comp, d):
        r, i = covariant_pullback(psi, comp, d, lines)
        return r + 1j * i

    def push(comp, d):
        r, i = covariant_pushforward(psi, comp, d, lines)
        return r + 1j * i

    m1 = push(3, Z) + push(4, X) - 1j * push(4, Y)
    m2 = pull(3, X) + 1j * pull(3, Y) - pull(4, Z)
    m3 = pull(1, Z) + push(2, X) - 1j * push(2, Y)
    m4 = pull(1, X) + 1j * pull(1, Y) - push(2, Z)
    return m1, m2, m3, m4


def eval_H1_bilinear(
    psi_a: SpinorField, psi_b: SpinorField, lines: WilsonLineCache
) -> complex:
    """Quadratic form a+ . (kinetic matrix) . b, complex valued.

    Batched inputs are summed over the field axes and averaged over none;
    leading axes are reduced by plain summation, so callers slice first.
    """
    spec = psi_a.spec
    mb = dirac_kinetic(psi_b, lines)
    acc = 0.0 + 0.0j
    for c, m_c in enumerate(mb, start=1):
        acc += np.sum(np.conj(psi_a.component(c)) * m_c)
    return complex(-0.5j * spec.dv * acc)


def eval_H1(psi: SpinorField, lines: WilsonLineCache) -> float:
    """Bispinor momentum energy; real part of the kinetic quadratic form."""
    return eval_H1_bilinear(psi, psi, lines).real


def eval_H2_bilinear(
    psi_a: SpinorField, psi_b: SpinorField, phi: VertexField, m: float, e: float
) -> complex:
    spec = psi_a.spec
    w_plus = e * phi.data + m
    w_minus = e * phi.data - m
    acc = np.sum(
        w_plus
        * (
            np.conj(psi_a.component(1)) * psi_b.component(1)
            + np.conj(psi_a.component(2)) * psi_b.component(2)
        )
    )
    acc += np.sum(
        w_minus
        * (
            np.conj(psi_a.component(3)) * psi_b.component(3)
            + np.conj(psi_a.component(4)) * psi_b.component(4)
        )
    )
    return complex(acc * spec.dv / 2.0)


def eval_H2(psi: SpinorField, phi: VertexField, m: float, e: float) -> float:
    """Mass-energy: (dV/2) sum of (e phi +- m)-weighted component norms."""
    return eval_H2_bilinear(psi, psi, phi, m, e).real


def eval_H3(
    a: EdgeField, y: EdgeField, phi: VertexField, spec: LatticeSpec, open_z: bool = False
) -> float:
    """Gauge-field energy (dV/8pi) sum [16 pi^2 Y^2 + (curl A)^2 - 8 pi Y.grad(phi)]."""
    curl_a = curl_d(a, open_z).data
    total = 16.0 * np.pi**2 * np.sum(y.data * y.data)
    total += np.sum(curl_a * curl_a)
    if np.any(phi.data):
        total -= 8.0 * np.pi * np.sum(y.data * grad_d(phi, open_z).data)
    return float(total) * spec.dv / (8.0 * np.pi)


def apply_dirac_hamiltonian(
    psi: SpinorField,
    lines: WilsonLineCache,
    phi: VertexField,
    m: float,
    e: float,
) -> np.ndarray:
    """Complex field (H psi)_c = -i (M psi)_c + (e phi +- m) psi_c, shape (...,4,nx,ny,nz).

    Summing conj(psi) . (H psi) * dV / 2 reproduces eval_H1 + eval_H2.
    """
    mb = dirac_kinetic(psi, lines)
    w = (
        e * phi.data + m,
        e * phi.data + m,
        e * phi.data - m,
        e * phi.data - m,
    )
    out = np.empty(psi.data.shape[:-4] + (4,) + psi.data.shape[-3:], dtype=np.complex128)
    for c in range(4):
        out[..., c, :, :, :] = -1j * mb[c] + w[c] * psi.component(c + 1)
    return out


def current_bracket(
    psi_a: np.ndarray,
    psi_b: np.ndarray,
    lines: WilsonLineCache,
    spec: LatticeSpec,
) -> np.ndarray:
    """Wilson-weighted cross bilinears of the edge current, shape (..., 3, nx, ny, nz).

    Field a contributes components 1, 2 and field b components 3, 4; the
    neighbor factors sit at J+1 along each current direction.  The
    single-field current is (e/hbar) times this with a = b; the ensemble
    current applies its own prefactor and gender symmetrization.
    """
    a1r, a2r = psi_a[..., 0, :, :, :], psi_a[..., 1, :, :, :]
    a1i, a2i = psi_a[..., 4, :, :, :], psi_a[..., 5, :, :, :]
    b3r, b4r = psi_b[..., 2, :, :, :], psi_b[..., 3, :, :, :]
    b3i, b4i = psi_b[..., 6, :, :, :], psi_b[..., 7, :, :, :]

    batch = np.broadcast_shapes(psi_a.shape[:-4], psi_b.shape[:-4])
    out = np.empty(batch + (3,) + spec.shape)

    a1rp, a1ip = shift_plus(a1r, X), shift_plus(a1i, X)
    b3rp, b3ip = shift_plus(b3r, X), shift_plus(b3i, X)
    out[..., 0, :, :, :] = (
        a1rp * b4r + a1ip * b4i + a2r * b3rp + a2i * b3ip
    ) * lines.cos[X] + (
        a1ip * b4r - a1rp * b4i - a2i * b3rp + a2r * b3ip
    ) * lines.sin[X]

    a1rp, a1ip = shift_plus(a1r, Y), shift_plus(a1i, Y)
    b3rp, b3ip = shift_plus(b3r, Y), shift_plus(b3i, Y)
    out[..., 1, :, :, :] = (
        a1rp * b4i - a1ip * b4r - a2r * b3ip + a2i * b3rp
    ) * lines.cos[Y] + (
        a1rp * b4r + a1ip * b4i + a2r * b3rp + a2i * b3ip
    ) * lines.sin[Y]

    a1rp, a1ip = shift_plus(a1r, Z), shift_plus(a1i, Z)
    b4rp, b4ip = shift_plus(b4r, Z), shift_plus(b4i, Z)
    out[..., 2, :, :, :] = (
        a1rp * b3r + a1ip * b3i - a2r * b4rp - a2i * b4ip
    ) * lines.cos[Z] + (
        a1ip * b3r - a1rp * b3i - a2r * b4ip + a2i * b4rp
    ) * lines.sin[Z]
    return out


def current_increment(
    psi_mid: SpinorField, lines: WilsonLineCache, e: float
) -> EdgeField:
    """Single-field edge current driving the gauge momentum, Ydot = J.

    Evaluated at the midpoint-averaged spinor of the implicit kinetic step.
    """
    spec = psi_mid.spec
    return EdgeField(e * current_bracket(psi_mid.data, psi_mid.data, lines, spec), spec)


def probability_density(psi: np.ndarray) -> np.ndarray:
    """Site density sum_c (psi_R^2 + psi_I^2) / 2 (hbar = 1), shape (..., nx, ny, nz)."""
    return 0.5 * np.sum(psi * psi, axis=-4)


def net_charge(psi: SpinorField, e: float) -> float:
    """Total charge e * sum psi+ psi * dV of a single bispinor field."""
    spec = psi.spec
    return float(e * np.sum(probability_density(psi.data)) * spec.dv)


def gauss_residual(
    y: EdgeField, rho: np.ndarray, e: float, spec: LatticeSpec, open_z: bool = False
) -> VertexField:
    """Discrete Gauss-law residual div(Y) + e * rho (monitored, not enforced)."""
    return VertexField(div_d(y, open_z).data + e * rho, spec)
