"""Stochastic spinor-pair ensemble modeling the Dirac vacuum and plasmas.

Each ensemble member is a correlated pair of bispinor fields (the "male"
and "female" samples) synthesized from free-particle eigenspinors with
fixed per-mode amplitude moduli and independent uniform phases.  Their
symmetrized cross bilinears reproduce normal-ordered field expectation
values on ensemble average: amplitudes are drawn so that the second
moment of the particle (antiparticle) channel is 1 - 2 n+ (1 - 2 n-) at
every momentum mode.  Normal ordering of the observables that feed back
into the dynamics is realized by subtracting the frozen initial reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hamiltonians import current_bracket, eval_H1_bilinear, eval_H2_bilinear
from .lattice import EdgeField, LatticeSpec, VertexField
from .spinor import STAGGER_OFFSETS, SpinorField, WilsonLineCache

OccupationSpec = "float | Callable[[np.ndarray], np.ndarray]"


@dataclass(frozen=True)
class EnsembleConfig:
    """Sampling parameters of the stochastic vacuum/plasma background.

    ``n_plus`` / ``n_minus`` are the fermion/antifermion occupations on the
    momentum grid: either constants in [0, 1] or callables of |k|.
    ``sigma`` is kept as the white-noise amplitude used by the single-field
    spectra scenarios; it does not enter the pair sampling.
    """

    capacity: int
    n_plus: object = 0.0
    n_minus: object = 0.0
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.capacity < 2:
            raise ValueError("ensemble capacity must be >= 2")
        for name in ("n_plus", "n_minus"):
            occ = getattr(self, name)
            if not callable(occ) and not 0.0 <= float(occ) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1] (Pauli blocking)")

    def occupation_arrays(self, kmag: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = []
        for occ in (self.n_plus, self.n_minus):
            arr = occ(kmag) if callable(occ) else np.full_like(kmag, float(occ))
            if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
                raise ValueError("occupation function left [0, 1]")
            out.append(np.clip(arr, 0.0, 1.0))
        return out[0], out[1]


def momentum_grid(spec: LatticeSpec) -> np.ndarray:
    """FFT momentum grid of the spatial lattice, shape (3, nx, ny, nz)."""
    ks = [
        2.0 * np.pi * np.fft.fftfreq(n, d=delta)
        for n, delta in zip(spec.shape, spec.spacings)
    ]
    out = np.empty((3,) + spec.shape)
    out[0] = ks[0][:, None, None]
    out[1] = ks[1][None, :, None]
    out[2] = ks[2][None, None, :]
    return out


@dataclass(frozen=True)
class EigenspinorTable:
    """Normalized free-particle eigenspinors on the momentum grid.

    ``u`` and ``v`` have shape (2, 4, nx, ny, nz): spin index first, then
    the four complex bispinor components.  They satisfy
    u_s(k)+ u_s'(k) = v_s(k)+ v_s'(k) = delta_ss' and u_s(k)+ v_s'(-k) = 0.
    """

    kvecs: np.ndarray
    u: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    mass: float = 0.0


def build_eigenspinors(m: float, kvecs: np.ndarray) -> EigenspinorTable:
    """Evaluate the positive/negative energy spinor pair at every momentum.

    The upper (lower) two components of u (v) carry the Pauli spinor and
    the other block carries sigma.k / (E + m).  The k = 0, m = 0 mode is
    degenerate and falls back to the rest-frame forms.
    """
    if m < 0:
        raise ValueError("mass must be nonnegative")
    kx, ky, kz = kvecs
    kmag2 = kx**2 + ky**2 + kz**2
    energy = np.sqrt(kmag2 + m * m)
    denom = energy + m
    safe = denom > 0.0
    inv = np.where(safe, 1.0 / np.where(safe, denom, 1.0), 0.0)
    norm = np.where(safe, np.sqrt(np.where(safe, denom, 1.0) / np.where(energy > 0, 2.0 * energy, 1.0)), 1.0)
    # sigma.k on the two Pauli spinors
    s_up = np.stack([kz + 0j, kx + 1j * ky])          # sigma.k (1,0)
    s_dn = np.stack([kx - 1j * ky, -kz + 0j])          # sigma.k (0,1)

    shape = kvecs.shape[1:]
    u = np.zeros((2, 4) + shape, dtype=np.complex128)
    v = np.zeros((2, 4) + shape, dtype=np.complex128)
    u[0, 0] = norm
    u[0, 2] = norm * s_up[0] * inv
    u[0, 3] = norm * s_up[1] * inv
    u[1, 1] = norm
    u[1, 2] = norm * s_dn[0] * inv
    u[1, 3] = norm * s_dn[1] * inv
    v[0, 0] = norm * s_up[0] * inv
    v[0, 1] = norm * s_up[1] * inv
    v[0, 2] = norm
    v[1, 0] = norm * s_dn[0] * inv
    v[1, 1] = norm * s_dn[1] * inv
    v[1, 3] = norm
    return EigenspinorTable(kvecs=kvecs, u=u, v=v, energy=energy, mass=m)


def draw_mode_amplitudes(
    rng: np.random.Generator, weight_plus: np.ndarray, weight_minus: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One member's stochastic amplitudes (xi, eta), shape (2,) + grid each.

    Moduli are fixed to sqrt(|1 - 2 n|) per mode and spin; phases are
    independent uniform on (-pi, pi], so the ensemble second moments equal
    the weights exactly while all cross moments average to zero.
    """
    shape = (2,) + weight_plus.shape
    xi = np.sqrt(np.abs(weight_plus)) * np.exp(1j * rng.uniform(-np.pi, np.pi, size=shape))
    eta = np.sqrt(np.abs(weight_minus)) * np.exp(1j * rng.uniform(-np.pi, np.pi, size=shape))
    return xi, eta


@dataclass
class EnsembleState:
    """All stochastic pairs of one ensemble: male block, female block."""

    psi_m: np.ndarray
    psi_f: np.ndarray
    config: EnsembleConfig

    @property
    def capacity(self) -> int:
        return self.psi_m.shape[0]

    def stacked(self) -> np.ndarray:
        """(2B, 8, nx, ny, nz) block used by the shared stepper."""
        return np.concatenate([self.psi_m, self.psi_f], axis=0)

    def unstack(self, block: np.ndarray) -> None:
        b = self.capacity
        self.psi_m = block[:b]
        self.psi_f = block[b:]


def sample_background(
    cfg: EnsembleConfig, table: EigenspinorTable, spec: LatticeSpec
) -> EnsembleState:
    """Draw all stochastic pairs of the configured background.

    Synthesis runs over the lattice momentum sum (1/V) sum_k with the
    staggered half-site phase offsets applied per component.  Occupations
    above one half flip the sign of the matching channel in the female
    field so that the male/female cross moment keeps the signed weight.
    """
    kvecs = table.kvecs
    kmag = np.sqrt(np.sum(kvecs**2, axis=0))
    n_plus, n_minus = cfg.occupation_arrays(kmag)
    w_plus = 1.0 - 2.0 * n_plus
    w_minus = 1.0 - 2.0 * n_minus
    sgn_plus = np.where(w_plus >= 0.0, 1.0, -1.0)
    sgn_minus = np.where(w_minus >= 0.0, 1.0, -1.0)

    # v spinors at -k enter the antiparticle channel
    v_minus = build_eigenspinors_at_minus_k(table)

    offsets = STAGGER_OFFSETS * np.array(spec.spacings)
    offset_phase = np.exp(
        1j
        * (
            kvecs[0][None] * offsets[:, 0, None, None, None]
            + kvecs[1][None] * offsets[:, 1, None, None, None]
            + kvecs[2][None] * offsets[:, 2, None, None, None]
        )
    )  # shape (4, nx, ny, nz)

    scale = np.sqrt(2.0) * np.sqrt(spec.n_sites / spec.dv)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.capacity)]

    b = cfg.capacity
    psi_m = np.empty((b, 8) + spec.shape)
    psi_f = np.empty((b, 8) + spec.shape)
    for i, rng in enumerate(rngs):
        xi, eta = draw_mode_amplitudes(rng, w_plus, w_minus)
        a_m = (xi[:, None] * table.u).sum(axis=0) + (eta[:, None] * v_minus).sum(axis=0)
        a_f = (sgn_plus * xi[:, None] * table.u).sum(axis=0) - (
            sgn_minus * eta[:, None] * v_minus
        ).sum(axis=0)
        a_m *= offset_phase / np.sqrt(2.0)
        a_f *= offset_phase / np.sqrt(2.0)
        z_m = scale * np.fft.ifftn(a_m, axes=(-3, -2, -1))
        z_f = scale * np.fft.ifftn(a_f, axes=(-3, -2, -1))
        psi_m[i, :4] = z_m.real
        psi_m[i, 4:] = z_m.imag
        psi_f[i, :4] = z_f.real
        psi_f[i, 4:] = z_f.imag
    return EnsembleState(psi_m=psi_m, psi_f=psi_f, config=cfg)


def build_eigenspinors_at_minus_k(table: EigenspinorTable) -> np.ndarray:
    """v_s(-k) on the grid, evaluated directly from the spinor formula."""
    return build_eigenspinors(table.mass, -table.kvecs).v


def ensemble_current(
    state: EnsembleState,
    lines: WilsonLineCache,
    e: float,
    spec: LatticeSpec,
    reference_current: np.ndarray | None = None,
) -> np.ndarray:
    """Normal-ordered ensemble edge current -(e/2) <bracket(M,F) + bracket(F,M)>.

    This is the source that closes the gauge-momentum update; the passed
    vacuum reference (equal to the raw current of the sampled background at
    t = 0) is subtracted, making the initial current exactly zero.
    """
    raw = ensemble_current_raw(state.psi_m, state.psi_f, lines, e, spec)
    if reference_current is not None:
        return raw - reference_current
    return raw


def ensemble_current_raw(
    psi_m: np.ndarray,
    psi_f: np.ndarray,
    lines: WilsonLineCache,
    e: float,
    spec: LatticeSpec,
) -> np.ndarray:
    mf = current_bracket(psi_m, psi_f, lines, spec)
    fm = current_bracket(psi_f, psi_m, lines, spec)
    return (-0.5 * e) * np.mean(mf + fm, axis=0)


def ensemble_fermion_energy(
    psi_m: np.ndarray,
    psi_f: np.ndarray,
    lines: WilsonLineCache,
    phi: VertexField,
    m: float,
    e: float,
    spec: LatticeSpec,
) -> float:
    """Raw ensemble fermion energy -(1/2) <psi_M+ H psi_F + g.c.>."""
    sm = SpinorField(psi_m, spec)
    sf = SpinorField(psi_f, spec)
    h1 = eval_H1_bilinear(sm, sf, lines)
    h2 = eval_H2_bilinear(sm, sf, phi, m, e)
    return -float((h1 + h2).real) / psi_m.shape[0]


def ensemble_charge(
    psi_m: np.ndarray, psi_f: np.ndarray, e: float, spec: LatticeSpec
) -> float:
    """Raw net charge -e <Re psi_M+ psi_F> dV / 2."""
    return -e * float(np.sum(psi_m * psi_f)) * spec.dv / 2.0 / psi_m.shape[0]


def make_ensemble_current_fn(
    capacity: int, e: float, spec: LatticeSpec, reference_current=None
):
    """Current hook for the shared stepper operating on a stacked block.

    The midpoint block is split into its male/female halves; a reference
    array or a zero-argument callable returning one is subtracted.
    """

    def current_fn(psi_mid: np.ndarray, lines: WilsonLineCache) -> np.ndarray:
        raw = ensemble_current_raw(psi_mid[:capacity], psi_mid[capacity:], lines, e, spec)
        if reference_current is None:
            return raw
        ref = reference_current() if callable(reference_current) else reference_current
        return raw - ref

    return current_fn


def member_probabilities(block: np.ndarray, spec: LatticeSpec) -> np.ndarray:
    """Per-member total probability of a stacked or unstacked block."""
    return np.sum(block * block, axis=(-4, -3, -2, -1)) * spec.dv / 2.0


class PairedEnsemble:
    """Interacting ensemble plus its comoving free-vacuum reference.

    Normal ordering subtracts vacuum expectations; with a finite ensemble
    the sampled t = 0 snapshot carries interference noise whose free
    rotation would otherwise leave a constant residual current that kicks
    the uniform gauge mode secularly (A grows like t^2).  Evolving a copy
    of the initial block under the free maps (gauge frozen at zero) and
    subtracting its current stage by stage cancels the sampling noise
    exactly: the induced current is identically zero until the interacting
    block actually deviates from free motion.
    """

    def __init__(self, main, ref, capacity: int, e: float):
        self.main = main
        self.ref = ref
        self.capacity = capacity
        self.e = e

    @classmethod
    def create(cls, ens: EnsembleState, spec, m: float, e: float, a0=None, y0=None):
        from .integrators import SimState

        block = ens.stacked()
        main = SimState.zeros(spec, m, e, batch=(block.shape[0],))
        main.psi = block
        if a0 is not None:
            main.a.data[...] = a0
        if y0 is not None:
            main.y.data[...] = y0
        main.refresh_lines()
        ref = SimState.zeros(spec, m, 0.0, batch=(block.shape[0],))
        ref.psi = block.copy()
        return cls(main, ref, ens.capacity, e)

    def step(self, schedule, solver_cfg, gauge_source=None, t_gauge: float = 0.0) -> float:
        """One composed step of both blocks with stage-synchronized subtraction."""
        from .integrators import MD, MG, MM, step_MD, step_MG, step_MM

        spec = self.main.spec
        b = self.capacity
        for kind, h in schedule.stages:
            if kind == MM:
                step_MM(self.main, h)
                step_MM(self.ref, h)
            elif kind == MG:
                src = gauge_source(t_gauge, t_gauge + h) if gauge_source else None
                step_MG(self.main, h, solver_cfg, source=src)
                t_gauge += h
            else:
                holder = {}

                def record_ref(mid, lines):
                    holder["j"] = ensemble_current_raw(mid[:b], mid[b:], lines, self.e, spec)
                    return 0.0

                step_MD(self.ref, h, solver_cfg, current_fn=record_ref)

                def net_current(mid, lines):
                    raw = ensemble_current_raw(mid[:b], mid[b:], lines, self.e, spec)
                    return raw - holder["j"]

                step_MD(self.main, h, solver_cfg, current_fn=net_current)
        return t_gauge

    def fermion_energy(self) -> float:
        """Normal-ordered fermion energy: interacting minus free reference."""
        b = self.capacity
        main, ref = self.main, self.ref
        e_int = ensemble_fermion_energy(
            main.psi[:b], main.psi[b:], main.lines, main.phi, main.m, main.e, main.spec
        )
        e_ref = ensemble_fermion_energy(
            ref.psi[:b], ref.psi[b:], ref.lines, ref.phi, main.m, main.e, ref.spec
        )
        return e_int - e_ref

    def charge(self, subtract_reference: bool = True) -> float:
        b = self.capacity
        q = ensemble_charge(self.main.psi[:b], self.main.psi[b:], self.e, self.main.spec)
        if subtract_reference:
            q -= ensemble_charge(self.ref.psi[:b], self.ref.psi[b:], self.e, self.ref.spec)
        return q

    def current_now(self) -> np.ndarray:
        """Instantaneous normal-ordered current of the stored blocks."""
        b = self.capacity
        raw = ensemble_current_raw(
            self.main.psi[:b], self.main.psi[b:], self.main.lines, self.e, self.main.spec
        )
        ref = ensemble_current_raw(
            self.ref.psi[:b], self.ref.psi[b:], self.ref.lines, self.e, self.ref.spec
        )
        return raw - ref
