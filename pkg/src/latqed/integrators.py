"""One-step maps of the three split subsystems and their compositions.

The kinetic map advances the spinors with a Cayley transform of the skew
generator (implicit midpoint) and kicks the gauge momentum with the
midpoint-averaged current.  The mass map is an exact component-pair
rotation.  The gauge map is a Cayley step of the linear Maxwell generator
(Crank-Nicolson).  Symmetric compositions raise the order: the first-order
product, the second-order palindrome, and the triple-jump recursion for
arbitrary even order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .hamiltonians import apply_xi, current_increment
from .krylov import LinearOperatorHandle, SolverConfig, SolveStats, solve
from .lattice import EdgeField, LatticeSpec, VertexField, curlT_curl, grad_d
from .spinor import SpinorField, WilsonLineCache, build_wilson_lines, rotate_components

MD, MM, MG = "MD", "MM", "MG"

FOUR_PI = 4.0 * np.pi


@dataclass
class SimState:
    """Canonical state of one run: spinor block, gauge sector, link cache.

    ``psi`` may carry leading batch axes (ensemble members); the gauge
    sector is always shared.  ``lines`` must match ``a``; use
    ``refresh_lines`` after any direct change of the connection.
    """

    spec: LatticeSpec
    m: float
    e: float
    psi: np.ndarray
    a: EdgeField
    y: EdgeField
    phi: VertexField
    lines: WilsonLineCache = field(default=None, repr=False)

    def __post_init__(self):
        if self.lines is None:
            self.refresh_lines()

    @classmethod
    def zeros(cls, spec: LatticeSpec, m: float, e: float, batch: tuple = ()) -> "SimState":
        return cls(
            spec=spec,
            m=m,
            e=e,
            psi=np.zeros(batch + (8,) + spec.shape),
            a=EdgeField.zeros(spec),
            y=EdgeField.zeros(spec),
            phi=VertexField.zeros(spec),
        )

    def refresh_lines(self):
        self.lines = build_wilson_lines(self.a, self.e, self.spec)

    def copy(self) -> "SimState":
        return SimState(
            spec=self.spec,
            m=self.m,
            e=self.e,
            psi=self.psi.copy(),
            a=EdgeField(self.a.data.copy(), self.spec),
            y=EdgeField(self.y.data.copy(), self.spec),
            phi=VertexField(self.phi.data.copy(), self.spec),
            lines=self.lines,
        )

    def spinor(self) -> SpinorField:
        """Single-field view; only valid for unbatched states."""
        return SpinorField(self.psi, self.spec)


@dataclass(frozen=True)
class IntegratorSchedule:
    """Stage list of one composed step: (map kind, stage dt) in execution order."""

    order: int
    dt: float
    stages: tuple

    @property
    def n_second_order_blocks(self) -> int:
        return max(1, len(self.stages) // 5)


def _scale_factors(order: int) -> list[float]:
    if order == 2:
        return [1.0]
    a = 1.0 / (2.0 - 2.0 ** (1.0 / (order - 1)))
    b = 1.0 - 2.0 * a
    inner = _scale_factors(order - 2)
    return [f * s for f in (a, b, a) for s in inner]


def triple_jump_coefficients(level: int) -> tuple[float, float]:
    """(a_l, b_l) raising a 2l-th order symmetric method to order 2l + 2."""
    a = 1.0 / (2.0 - 2.0 ** (1.0 / (2 * level + 1)))
    return a, 1.0 - 2.0 * a


def build_schedule(order: int, dt: float) -> IntegratorSchedule:
    """Stage sequence for the requested order (1, or any even integer >= 2)."""
    if order == 1:
        stages = [(MM, dt), (MD, dt), (MG, dt)]
    elif order >= 2 and order % 2 == 0:
        stages = []
        for s in _scale_factors(order):
            h = s * dt
            stages += [(MM, h / 2), (MD, h / 2), (MG, h), (MD, h / 2), (MM, h / 2)]
    else:
        raise ValueError("integrator order must be 1 or an even integer >= 2")
    return IntegratorSchedule(order=order, dt=dt, stages=tuple(stages))


def _xi_matvec(lines: WilsonLineCache, spec: LatticeSpec, shape, gamma: float):
    """v -> v - gamma * Xi v on flattened spinor blocks."""
    if _kernels.HAVE_NUMBA:
        def mv(v):
            arr = v.reshape(shape)
            return _kernels.xi_axpby_numba(
                arr, lines.cos, lines.sin, spec.spacings, -gamma, 1.0
            ).reshape(-1)
    else:
        def mv(v):
            arr = v.reshape(shape)
            return (arr - gamma * apply_xi(arr, lines, spec)).reshape(-1)
    return mv


def step_MD(
    state: SimState,
    dt: float,
    solver_cfg: SolverConfig = SolverConfig(),
    current_fn: Callable[[np.ndarray, WilsonLineCache], np.ndarray] | None = None,
) -> SolveStats:
    """Kinetic subsystem: psi <- Cay(Xi dt/2) psi, Y kicked by the midpoint current.

    The linear system (I - Xi dt/2) psi' = (I + Xi dt/2) psi is solved
    matrix-free.  A is unchanged; the Wilson cache stays valid.  When
    ``current_fn`` is None the single-field current with the state's
    coupling is used; pass an ensemble closure to override.
    """
    spec, lines = state.spec, state.lines
    gamma = 0.5 * dt
    shape = state.psi.shape
    if _kernels.HAVE_NUMBA:
        rhs = _kernels.xi_axpby_numba(state.psi, lines.cos, lines.sin, spec.spacings, gamma, 1.0)
    else:
        rhs = state.psi + gamma * apply_xi(state.psi, lines, spec)
    op = LinearOperatorHandle(
        dim=state.psi.size, apply=_xi_matvec(lines, spec, shape, gamma), tag="cayley-kinetic"
    )
    x, stats = solve(op, rhs.reshape(-1), solver_cfg, x0=rhs.reshape(-1))
    psi_new = x.reshape(shape)
    psi_mid = 0.5 * (state.psi + psi_new)
    if current_fn is not None:
        state.y.data[...] += dt * current_fn(psi_mid, lines)
    elif state.e != 0.0:
        mid = SpinorField(psi_mid, spec)
        state.y.data[...] += dt * current_increment(mid, lines, state.e).data
    state.psi = psi_new
    return stats


def step_MM(state: SimState, dt: float) -> None:
    """Mass-energy subsystem, solved exactly: psi_c <- psi_c e^{-i w_c dt}.

    Components 1, 2 rotate with w+ = e phi + m and components 3, 4 with
    w- = e phi - m; the gauge sector is untouched.
    """
    theta_plus = (state.e * state.phi.data + state.m) * dt
    theta_minus = (state.e * state.phi.data - state.m) * dt
    state.psi = rotate_components(state.psi, -theta_plus, -theta_minus)


def _gauge_matvec(spec: LatticeSpec, gamma: float, open_z: bool):
    shape = (6,) + spec.shape

    def mv(v):
        w = v.reshape(shape)
        out = np.empty_like(w)
        out[:3] = w[:3] - gamma * FOUR_PI * w[3:]
        out[3:] = w[3:] + gamma / FOUR_PI * curlT_curl(EdgeField(w[:3], spec), open_z).data
        return out.reshape(-1)

    return mv


def apply_gauge_generator(
    a: np.ndarray, y: np.ndarray, spec: LatticeSpec, open_z: bool = False
):
    """Q (A, Y) = (4 pi Y, -curlT_curl A / 4 pi), the linear Maxwell generator."""
    return FOUR_PI * y, -curlT_curl(EdgeField(a, spec), open_z).data / FOUR_PI


def step_MG(
    state: SimState,
    dt: float,
    solver_cfg: SolverConfig = SolverConfig(),
    source: np.ndarray | None = None,
) -> SolveStats:
    """Gauge subsystem: (A, Y) <- Cay(Q dt/2) (A, Y); spinors unchanged.

    The prescribed-potential drift -grad(phi) (zero in temporal gauge) is
    applied as exact half-drifts around the Cayley core.  ``source`` is an
    optional extra RHS for the linear system (used by the wave injector).
    """
    spec = state.spec
    open_z = spec.open_z
    gamma = 0.5 * dt

    if np.any(state.phi.data):
        state.a.data[...] -= 0.5 * dt * grad_d(state.phi, open_z).data

    w = np.concatenate([state.a.data, state.y.data])
    qa, qy = apply_gauge_generator(w[:3], w[3:], spec, open_z)
    rhs = w.copy()
    rhs[:3] += gamma * qa
    rhs[3:] += gamma * qy
    if source is not None:
        rhs += source.reshape(rhs.shape)
    op = LinearOperatorHandle(
        dim=w.size, apply=_gauge_matvec(spec, gamma, open_z), tag="cayley-gauge"
    )
    x, stats = solve(op, rhs.reshape(-1), solver_cfg, x0=rhs.reshape(-1))
    w_new = x.reshape(w.shape)
    state.a.data[...] = w_new[:3]
    state.y.data[...] = w_new[3:]

    if np.any(state.phi.data):
        state.a.data[...] -= 0.5 * dt * grad_d(state.phi, open_z).data

    state.refresh_lines()
    return stats


def compose_step(
    state: SimState,
    schedule: IntegratorSchedule,
    solver_cfg: SolverConfig = SolverConfig(),
    current_fn: Callable[[np.ndarray, WilsonLineCache], np.ndarray] | None = None,
    gauge_source: Callable[[float, float], np.ndarray] | None = None,
    t_gauge: float = 0.0,
) -> float:
    """Apply one composed step; returns the advanced gauge-sector time.

    ``gauge_source(t0, t1)`` supplies the extra RHS of a gauge stage
    spanning [t0, t1] (the wave injector hook); sub-step solver failures
    propagate.
    """
    for kind, h in schedule.stages:
        if kind == MM:
            step_MM(state, h)
        elif kind == MD:
            step_MD(state, h, solver_cfg, current_fn)
        else:
            src = gauge_source(t_gauge, t_gauge + h) if gauge_source is not None else None
            step_MG(state, h, solver_cfg, source=src)
            t_gauge += h
    return t_gauge
