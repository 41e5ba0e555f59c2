"""Split Hamiltonians, the kinetic generator and the edge current.

The kinetic generator is validated through three independent routes: the
complex covariant-derivative matrix, the real stencil transcription, and
finite differences of the energy (the canonical-bracket oracle).
"""

import numpy as np
import pytest

from latqed import _kernels
from latqed.hamiltonians import (
    apply_dirac_hamiltonian,
    apply_mass_generator,
    apply_xi,
    apply_xi_numpy,
    current_bracket,
    current_increment,
    dirac_kinetic,
    eval_H1,
    eval_H1_bilinear,
    eval_H2,
    eval_H2_bilinear,
    eval_H3,
    gauss_residual,
    net_charge,
    probability_density,
)
from latqed.lattice import EdgeField, LatticeSpec, VertexField, div_d, grad_d
from latqed.spinor import SpinorField, build_wilson_lines, gauge_transform, trivial_lines

RNG = np.random.default_rng(2024)


def small_spec(**kw):
    kw.setdefault("nx", 3)
    kw.setdefault("ny", 4)
    kw.setdefault("nz", 3)
    kw.setdefault("dx", 0.8)
    kw.setdefault("dy", 1.1)
    kw.setdefault("dz", 0.9)
    kw.setdefault("dt", 0.1)
    return LatticeSpec(**kw)


def random_state(spec, e=0.35):
    psi = SpinorField(RNG.normal(size=(8,) + spec.shape), spec)
    a = EdgeField(RNG.normal(size=(3,) + spec.shape), spec)
    return psi, a, build_wilson_lines(a, e, spec)


def kinetic_complex_route(psi, lines):
    """Time derivative -(M psi) assembled from the covariant derivatives."""
    m1, m2, m3, m4 = dirac_kinetic(psi, lines)
    out = np.empty_like(psi.data)
    for c, z in enumerate((m1, m2, m3, m4)):
        out[..., c, :, :, :] = -z.real
        out[..., c + 4, :, :, :] = -z.imag
    return out


def test_apply_xi_matches_complex_route():
    spec = small_spec()
    psi, _, lines = random_state(spec, e=0.9)
    got = apply_xi_numpy(psi.data, lines, spec)
    want = kinetic_complex_route(psi, lines)
    assert np.allclose(got, want, atol=1e-13)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_apply_xi_numba_matches_numpy():
    spec = small_spec()
    psi, _, lines = random_state(spec, e=1.3)
    batched = np.stack([psi.data, 2.0 * psi.data, RNG.normal(size=psi.data.shape)])
    got = _kernels.apply_xi_numba(batched, lines.cos, lines.sin, spec.spacings)
    want = apply_xi_numpy(batched, lines, spec)
    assert np.allclose(got, want, atol=1e-14)
    fused = _kernels.xi_axpby_numba(batched, lines.cos, lines.sin, spec.spacings, -0.3, 1.0)
    assert np.allclose(fused, batched - 0.3 * want, atol=1e-14)


def test_xi_is_skew_symmetric():
    spec = small_spec()
    psi, _, lines = random_state(spec, e=0.6)
    chi = SpinorField(RNG.normal(size=(8,) + spec.shape), spec)
    lhs = np.sum(chi.data * apply_xi(psi.data, lines, spec))
    rhs = -np.sum(apply_xi(chi.data, lines, spec) * psi.data)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_xi_of_zero_is_zero():
    spec = small_spec()
    _, _, lines = random_state(spec)
    assert np.all(apply_xi(np.zeros((8,) + spec.shape), lines, spec) == 0.0)


def test_xi_plane_wave_eigenfrequency():
    # free field, k = (0, 0, pi/2), unit spacings: Xi^2 = -omega^2 with
    # omega = 2 sin(pi/4) = sqrt(2) on any field supported on that mode
    spec = LatticeSpec(nx=1, ny=1, nz=8)
    lines = trivial_lines(spec)
    kz = np.pi / 2
    z = np.arange(spec.nz)
    psi = np.zeros((8,) + spec.shape)
    for c in range(8):
        al, be = RNG.normal(size=2)
        psi[c, 0, 0, :] = al * np.cos(kz * z) + be * np.sin(kz * z)
    twice = apply_xi(apply_xi(psi, lines, spec), lines, spec)
    assert np.allclose(twice, -2.0 * psi, atol=1e-12)


def test_eval_H1_trivial_cases():
    spec = small_spec()
    lines = trivial_lines(spec)
    zero = SpinorField.zeros(spec)
    assert eval_H1(zero, lines) == 0.0
    const = SpinorField(np.ones((8,) + spec.shape), spec)
    assert eval_H1(const, lines) == pytest.approx(0.0, abs=1e-13)


def test_eval_H1_is_real_quadratic_form():
    spec = small_spec()
    psi, _, lines = random_state(spec, e=0.8)
    val = eval_H1_bilinear(psi, psi, lines)
    assert abs(val.imag) <= 1e-12 * max(1.0, abs(val.real))


def test_H1_canonical_bracket_oracle():
    # (Xi psi)_{iR} = +(1/dV) dH1/dpsi_{iI}, (Xi psi)_{iI} = -(1/dV) dH1/dpsi_{iR};
    # H1 is quadratic so central differences are exact to roundoff.
    spec = small_spec(nx=2, ny=2, nz=2)
    psi, _, lines = random_state(spec, e=0.7)
    xi = apply_xi(psi.data, lines, spec)
    h = 1e-4
    for _ in range(12):
        c = RNG.integers(0, 8)
        i, j, k = (RNG.integers(0, n) for n in spec.shape)
        pert = psi.copy()
        pert.data[c, i, j, k] += h
        hp = eval_H1(pert, lines)
        pert.data[c, i, j, k] -= 2 * h
        hm = eval_H1(pert, lines)
        grad = (hp - hm) / (2 * h) / spec.dv
        if c < 4:  # derivative w.r.t. an R component gives -psidot_I
            assert -xi[c + 4, i, j, k] == pytest.approx(grad, rel=1e-7, abs=1e-9)
        else:
            assert xi[c - 4, i, j, k] == pytest.approx(grad, rel=1e-7, abs=1e-9)


def test_current_canonical_bracket_oracle():
    # Ydot = J means J_d(J) = -(1/dV) dH1/dA_d(J)
    spec = small_spec(nx=2, ny=2, nz=2)
    e = 0.45
    psi, a, lines = random_state(spec, e)
    j_edge = current_increment(psi, lines, e).data
    h = 1e-6
    for _ in range(12):
        d = RNG.integers(0, 3)
        i, j, k = (RNG.integers(0, n) for n in spec.shape)
        ap = EdgeField(a.data.copy(), spec)
        ap.data[d, i, j, k] += h
        hp = eval_H1(psi, build_wilson_lines(ap, e, spec))
        ap.data[d, i, j, k] -= 2 * h
        hm = eval_H1(psi, build_wilson_lines(ap, e, spec))
        grad = (hp - hm) / (2 * h) / spec.dv
        assert j_edge[d, i, j, k] == pytest.approx(-grad, rel=1e-6, abs=1e-8)


def test_eval_H2_examples():
    # phi = 0, psi_1R = 1 at one vertex, m = 0.25, dV = 1: H2 = m dV / 2
    spec = LatticeSpec(nx=2, ny=2, nz=2)
    psi = SpinorField.zeros(spec)
    psi.data[0, 0, 0, 0] = 1.0
    phi = VertexField.zeros(spec)
    assert eval_H2(psi, phi, 0.25, 0.0854) == pytest.approx(0.125)

    # negative-energy sector: only psi_3R nonzero gives -m |psi_3R|^2 dV / 2
    psi = SpinorField.zeros(spec)
    psi.data[2, 1, 0, 1] = 2.0
    assert eval_H2(psi, phi, 0.25, 0.0854) == pytest.approx(-0.5)

    assert eval_H2(SpinorField.zeros(spec), phi, 0.25, 0.1) == 0.0


def test_eval_H2_with_potential():
    spec = small_spec()
    psi, _, _ = random_state(spec)
    phi = VertexField(RNG.normal(size=spec.shape), spec)
    m, e = 0.25, 0.3
    dens_plus = 0.5 * np.sum(psi.data[[0, 1, 4, 5]] ** 2, axis=0)
    dens_minus = 0.5 * np.sum(psi.data[[2, 3, 6, 7]] ** 2, axis=0)
    want = spec.dv * np.sum((e * phi.data + m) * dens_plus + (e * phi.data - m) * dens_minus)
    assert eval_H2(psi, phi, m, e) == pytest.approx(want, rel=1e-13)


def test_eval_H3_examples():
    spec = small_spec()
    phi = VertexField.zeros(spec)
    assert eval_H3(EdgeField.zeros(spec), EdgeField.zeros(spec), phi, spec) == 0.0

    # uniform Y_z = -E_S / 4 pi with A = 0: vacuum field energy dV N E_S^2 / 8 pi
    e_s = 1.25
    y = EdgeField.zeros(spec)
    y.data[2] = -e_s / (4.0 * np.pi)
    got = eval_H3(EdgeField.zeros(spec), y, phi, spec)
    want = spec.volume * e_s**2 / (8.0 * np.pi)
    assert got == pytest.approx(want, rel=1e-13)

    # pure-gradient connection carries no curl energy
    theta = VertexField(RNG.normal(size=spec.shape), spec)
    a = EdgeField(grad_d(theta).data, spec)
    assert eval_H3(a, EdgeField.zeros(spec), phi, spec) == pytest.approx(0.0, abs=1e-13)


def test_H1_plus_H2_matches_quadratic_form_and_xi_route():
    spec = small_spec()
    m, e = 0.25, 0.6
    psi, _, lines = random_state(spec, e)
    phi = VertexField(0.5 * RNG.normal(size=spec.shape), spec)

    h12 = eval_H1(psi, lines) + eval_H2(psi, phi, m, e)

    # complex quadratic form with the assembled Dirac operator
    hpsi = apply_dirac_hamiltonian(psi, lines, phi, m, e)
    quad = 0.0
    for c in range(4):
        quad += np.sum(np.conj(psi.component(c + 1)) * hpsi[c])
    quad *= spec.dv / 2.0
    assert abs(quad.imag) <= 1e-12 * max(1.0, abs(quad.real))
    assert h12 == pytest.approx(quad.real, rel=1e-12)

    # canonical route: H = -(dV/2) [psi_R . (Gen psi)_I - psi_I . (Gen psi)_R]
    gen = apply_xi(psi.data, lines, spec) + apply_mass_generator(psi.data, phi.data, m, e)
    r, i = psi.data[:4], psi.data[4:]
    gr, gi = gen[:4], gen[4:]
    canonical = -0.5 * spec.dv * (np.sum(r * gi) - np.sum(i * gr))
    assert h12 == pytest.approx(canonical, rel=1e-12)


def test_dense_generator_is_skew():
    spec = LatticeSpec(nx=2, ny=2, nz=2)
    _, _, lines = random_state(spec, e=1.1)
    phi = VertexField(RNG.normal(size=spec.shape), spec)
    n = 8 * spec.n_sites
    mat = np.empty((n, n))
    basis = np.zeros((8,) + spec.shape)
    flat = basis.reshape(-1)
    for col in range(n):
        flat[:] = 0.0
        flat[col] = 1.0
        out = apply_xi(basis, lines, spec) + apply_mass_generator(basis, phi.data, 0.25, 0.8)
        mat[:, col] = out.reshape(-1)
    assert np.max(np.abs(mat + mat.T)) <= 1e-12


def test_current_trivial_and_real_field_cases():
    spec = small_spec()
    lines = trivial_lines(spec)
    zero = SpinorField.zeros(spec)
    assert np.all(current_increment(zero, lines, 0.3).data == 0.0)

    # real spinor (all I parts zero) with A = 0: the y current needs R*I
    # cross terms, so it vanishes identically
    psi = SpinorField.zeros(spec)
    psi.data[:4] = RNG.normal(size=(4,) + spec.shape)
    j = current_increment(psi, lines, 0.3).data
    assert np.allclose(j[1], 0.0, atol=1e-15)
    assert not np.allclose(j[0], 0.0)


def test_current_is_gauge_invariant():
    spec = small_spec()
    e = 0.52
    psi, a, lines = random_state(spec, e)
    j0 = current_increment(psi, lines, e).data
    theta = VertexField(RNG.normal(size=spec.shape), spec)
    psi_t, a_t = gauge_transform(psi, a, theta, e)
    j1 = current_increment(psi_t, build_wilson_lines(a_t, e, spec), e).data
    assert np.allclose(j1, j0, atol=1e-12 * max(1.0, np.max(np.abs(j0))))


def test_current_bracket_batched_matches_loop():
    spec = small_spec()
    e = 0.4
    _, _, lines = random_state(spec, e)
    batch = RNG.normal(size=(3, 8) + spec.shape)
    other = RNG.normal(size=(3, 8) + spec.shape)
    got = current_bracket(batch, other, lines, spec)
    for b in range(3):
        single = current_bracket(batch[b], other[b], lines, spec)
        assert np.allclose(got[b], single, atol=1e-14)


def test_hamiltonians_gauge_invariant():
    spec = small_spec()
    m, e = 0.25, 0.47
    psi, a, lines = random_state(spec, e)
    y = EdgeField(RNG.normal(size=(3,) + spec.shape), spec)
    phi = VertexField.zeros(spec)
    vals0 = (
        eval_H1(psi, lines),
        eval_H2(psi, phi, m, e),
        eval_H3(a, y, phi, spec),
        net_charge(psi, e),
    )
    theta = VertexField(3.0 * RNG.normal(size=spec.shape), spec)
    psi_t, a_t = gauge_transform(psi, a, theta, e)
    lines_t = build_wilson_lines(a_t, e, spec)
    vals1 = (
        eval_H1(psi_t, lines_t),
        eval_H2(psi_t, phi, m, e),
        eval_H3(a_t, y, phi, spec),
        net_charge(psi_t, e),
    )
    for v0, v1 in zip(vals0, vals1):
        assert v1 == pytest.approx(v0, rel=1e-10, abs=1e-12)


def test_net_charge_examples():
    spec = small_spec()
    e = 0.2
    assert net_charge(SpinorField.zeros(spec), e) == 0.0
    psi = SpinorField.zeros(spec)
    psi.data[1, 1, 2, 1] = 1.7
    want = e * spec.dv * 1.7**2 / 2.0
    assert net_charge(psi, e) == pytest.approx(want)


def test_gauss_residual_definition():
    spec = small_spec()
    e = 0.3
    psi, _, _ = random_state(spec)
    y = EdgeField(RNG.normal(size=(3,) + spec.shape), spec)
    rho = probability_density(psi.data)
    g = gauss_residual(y, rho, e, spec)
    want = div_d(y).data + e * rho
    assert np.allclose(g.data, want, atol=1e-14)
