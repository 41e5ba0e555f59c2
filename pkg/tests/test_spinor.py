"""Wilson lines, covariant derivatives and discrete gauge transformations."""

import math

import numpy as np
import pytest

from latqed.lattice import EdgeField, LatticeSpec, VertexField, grad_d
from latqed.spinor import (
    SpinorField,
    build_wilson_lines,
    covariant_pullback,
    covariant_pushforward,
    gauge_transform,
    total_probability,
    trivial_lines,
)

RNG = np.random.default_rng(77)


def small_spec():
    return LatticeSpec(nx=4, ny=3, nz=5, dx=0.9, dy=1.2, dz=0.8, dt=0.1)


def random_state(spec, e=0.3):
    psi = SpinorField(RNG.normal(size=(8,) + spec.shape), spec)
    a = EdgeField(RNG.normal(size=(3,) + spec.shape), spec)
    return psi, a, build_wilson_lines(a, e, spec)


def test_wilson_lines_zero_field():
    spec = small_spec()
    lines = build_wilson_lines(EdgeField.zeros(spec), 0.3, spec)
    assert np.all(lines.cos == 1.0)
    assert np.all(lines.sin == 0.0)
    assert lines.is_trivial


def test_wilson_lines_quarter_turn():
    spec = LatticeSpec(nx=2, ny=2, nz=2)
    a = EdgeField.zeros(spec)
    e = 0.5
    a.data[0][1, 0, 0] = (np.pi / 2) / (e * spec.dx)
    lines = build_wilson_lines(a, e, spec)
    assert lines.cos[0][1, 0, 0] == pytest.approx(0.0, abs=1e-15)
    assert lines.sin[0][1, 0, 0] == pytest.approx(1.0)


def test_wilson_lines_physical_coupling():
    # e = 0.0854, A_x = 1, dx = 1: phase is the fine-structure coupling itself
    spec = LatticeSpec(nx=2, ny=2, nz=2)
    a = EdgeField(np.ones((3,) + spec.shape), spec)
    lines = build_wilson_lines(a, 0.0854, spec)
    assert lines.cos[0][0, 0, 0] == pytest.approx(math.cos(0.0854), abs=1e-15)
    assert lines.sin[0][0, 0, 0] == pytest.approx(math.sin(0.0854), abs=1e-15)
    assert lines.cos[0][0, 0, 0] == pytest.approx(0.99636, abs=5e-6)
    assert lines.sin[0][0, 0, 0] == pytest.approx(0.08530, abs=5e-6)


def test_wilson_line_unitarity():
    spec = small_spec()
    _, _, lines = random_state(spec, e=1.7)
    assert np.max(np.abs(lines.cos**2 + lines.sin**2 - 1.0)) <= 1e-14


def test_pullback_reduces_to_forward_difference():
    spec = small_spec()
    psi = SpinorField(RNG.normal(size=(8,) + spec.shape), spec)
    lines = trivial_lines(spec)
    r, i = covariant_pullback(psi, 1, 0, lines)
    want_r = (np.roll(psi.data[0], -1, axis=0) - psi.data[0]) / spec.dx
    want_i = (np.roll(psi.data[4], -1, axis=0) - psi.data[4]) / spec.dx
    assert np.allclose(r, want_r, atol=1e-14)
    assert np.allclose(i, want_i, atol=1e-14)


def test_pushforward_reduces_to_backward_difference():
    spec = small_spec()
    psi = SpinorField(RNG.normal(size=(8,) + spec.shape), spec)
    lines = trivial_lines(spec)
    r, i = covariant_pushforward(psi, 3, 2, lines)
    want_r = (psi.data[2] - np.roll(psi.data[2], 1, axis=2)) / spec.dz
    want_i = (psi.data[6] - np.roll(psi.data[6], 1, axis=2)) / spec.dz
    assert np.allclose(r, want_r, atol=1e-14)
    assert np.allclose(i, want_i, atol=1e-14)


def test_constant_field_has_zero_covariant_derivative():
    spec = small_spec()
    psi = SpinorField(np.ones((8,) + spec.shape), spec)
    lines = trivial_lines(spec)
    for comp, d in [(1, 0), (1, 1), (1, 2), (3, 0), (3, 1), (4, 2)]:
        r, i = covariant_pullback(psi, comp, d, lines)
        assert np.allclose(r, 0.0, atol=1e-15) and np.allclose(i, 0.0, atol=1e-15)
    for comp, d in [(2, 0), (2, 1), (2, 2), (4, 0), (4, 1), (3, 2)]:
        r, i = covariant_pushforward(psi, comp, d, lines)
        assert np.allclose(r, 0.0, atol=1e-15) and np.allclose(i, 0.0, atol=1e-15)


def test_derivative_set_membership_enforced():
    spec = small_spec()
    psi = SpinorField.zeros(spec)
    lines = trivial_lines(spec)
    with pytest.raises(ValueError):
        covariant_pullback(psi, 2, 0, lines)
    with pytest.raises(ValueError):
        covariant_pullback(psi, 4, 0, lines)
    with pytest.raises(ValueError):
        covariant_pushforward(psi, 1, 0, lines)
    with pytest.raises(ValueError):
        covariant_pushforward(psi, 3, 1, lines)


@pytest.mark.parametrize("comp,d,kind", [
    (1, 0, "pull"), (1, 1, "pull"), (1, 2, "pull"),
    (3, 0, "pull"), (3, 1, "pull"), (4, 2, "pull"),
    (2, 0, "push"), (2, 1, "push"), (2, 2, "push"),
    (4, 0, "push"), (4, 1, "push"), (3, 2, "push"),
])
def test_gauge_covariance_unified_phase(comp, d, kind):
    # transform-then-derive equals derive-then-rotate by e^{i e theta_J}
    spec = small_spec()
    e = 0.41
    psi, a, lines = random_state(spec, e)
    theta = VertexField(RNG.normal(size=spec.shape), spec)

    deriv = covariant_pullback if kind == "pull" else covariant_pushforward
    r0, i0 = deriv(psi, comp, d, lines)
    base = r0 + 1j * i0

    psi_t, a_t = gauge_transform(psi, a, theta, e)
    lines_t = build_wilson_lines(a_t, e, spec)
    r1, i1 = deriv(psi_t, comp, d, lines_t)
    transformed = r1 + 1j * i1

    want = base * np.exp(1j * e * theta.data)
    scale = np.max(np.abs(want)) + 1e-30
    assert np.max(np.abs(transformed - want)) / scale <= 1e-12


def test_gauge_transform_identity_and_constant():
    spec = small_spec()
    e = 0.7
    psi, a, _ = random_state(spec, e)

    psi0, a0 = gauge_transform(psi, a, VertexField.zeros(spec), e)
    assert np.allclose(psi0.data, psi.data, atol=1e-15)
    assert np.allclose(a0.data, a.data, atol=1e-15)

    const = VertexField(np.full(spec.shape, 2.13), spec)
    psi_c, a_c = gauge_transform(psi, a, const, e)
    assert np.allclose(a_c.data, a.data, atol=1e-13)
    # global phase rotation of every component pair
    z_old = psi.component(2)
    z_new = psi_c.component(2)
    assert np.allclose(z_new, z_old * np.exp(1j * e * 2.13), atol=1e-13)


def test_gauge_transform_preserves_probability():
    spec = small_spec()
    e = 0.9
    psi, a, _ = random_state(spec, e)
    theta = VertexField(10.0 * RNG.normal(size=spec.shape), spec)
    psi_t, _ = gauge_transform(psi, a, theta, e)
    p0 = total_probability(psi, spec)
    p1 = total_probability(psi_t, spec)
    assert p1 == pytest.approx(p0, rel=1e-14)


def test_gauge_transform_shifts_connection_by_gradient():
    spec = small_spec()
    e = 0.55
    psi, a, _ = random_state(spec, e)
    theta = VertexField(RNG.normal(size=spec.shape), spec)
    _, a_t = gauge_transform(psi, a, theta, e)
    assert np.allclose(a_t.data, a.data + grad_d(theta).data, atol=1e-14)
