"""Symmetric-Trotter trajectory propagation for all three models.

The Hamiltonian part is a velocity-Verlet step whose explicit time
dependence (the drive) is evaluated at the step midpoint, which keeps the
map second-order accurate and time-reversible. The Nose-Hoover chain wraps
that step between two thermostat half-updates built from a Suzuki-Yoshida
composition with a multiple-time-step inner loop; the drag on the bath
oscillator momentum is applied as an exact exponential scaling.

All steppers mutate the state in place and operate transparently on scalar
or batched (leading-axis) phase coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .baths import (NHCBathParams, NHCBathPhase, OhmicBathParams, OhmicBathPhase,
                    nhc_bath_forces, ohmic_forces)
from .system import SystemParams, SystemPhase, system_force


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 0.01
    n_steps: int = 25000
    n_yoshida: int = 3
    n_mts: int = 3
    stride: int = 25    # steps between observable snapshots

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.n_yoshida not in (1, 3, 5):
            raise ValueError(f"n_yoshida must be 1, 3 or 5, got {self.n_yoshida}")
        if self.n_mts < 1:
            raise ValueError(f"n_mts must be >= 1, got {self.n_mts}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")


BathPhase = Union[OhmicBathPhase, NHCBathPhase, None]
BathParams = Union[OhmicBathParams, NHCBathParams, None]


@dataclass
class TrajectoryState:
    """Current time plus system and (optional) bath phase coordinates."""

    t: float
    system: SystemPhase
    bath: BathPhase = None

    def copy(self) -> "TrajectoryState":
        return TrajectoryState(self.t, self.system.copy(),
                               self.bath.copy() if self.bath is not None else None)

    def is_finite(self):
        ok = self.system.is_finite()
        if self.bath is not None:
            ok = ok & self.bath.is_finite()
        return ok


class TrajectoryFailure(RuntimeError):
    """Raised when a trajectory produces non-finite coordinates."""

    def __init__(self, step: int):
        super().__init__(f"non-finite phase-space coordinates at step {step}")
        self.step = step


def yoshida_weights(n_yoshida: int) -> np.ndarray:
    """Fourth-order Suzuki-Yoshida composition weights (sum to 1)."""
    if n_yoshida == 1:
        return np.array([1.0])
    if n_yoshida == 3:
        w = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
        return np.array([w, 1.0 - 2.0 * w, w])
    if n_yoshida == 5:
        w = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
        return np.array([w, w, 1.0 - 4.0 * w, w, w])
    raise ValueError(f"unsupported Yoshida stage count {n_yoshida}; use 1, 3 or 5")


def _kick(state: TrajectoryState, sys: SystemParams, bath: BathParams,
          h: float, t_force: float) -> None:
    """Momentum update p += h * F with all forces evaluated at t_force."""
    ph = state.system
    f1, f2 = system_force(t_force, ph, sys)
    if bath is None:
        ph.p1 = ph.p1 + h * f1
        ph.p2 = ph.p2 + h * f2
        return
    if isinstance(bath, OhmicBathParams):
        sys_kick, bath_force = ohmic_forces(ph, state.bath, bath)
        ph.p1 = ph.p1 + h * (f1 + sys_kick)
        ph.p2 = ph.p2 + h * (f2 + sys_kick)
        state.bath.mom += h * bath_force
        return
    sys_kick, osc_force = nhc_bath_forces(ph, state.bath, bath)
    ph.p1 = ph.p1 + h * (f1 + sys_kick)
    ph.p2 = ph.p2 + h * (f2 + sys_kick)
    state.bath.osc_p = state.bath.osc_p + h * osc_force


def _drift(state: TrajectoryState, sys: SystemParams, bath: BathParams,
           dt: float) -> None:
    ph = state.system
    ph.q1 = ph.q1 + dt * ph.p1 / sys.mass
    ph.q2 = ph.q2 + dt * ph.p2 / sys.mass
    if isinstance(bath, OhmicBathParams):
        state.bath.pos += (dt / bath.mass) * state.bath.mom
    elif isinstance(bath, NHCBathParams):
        state.bath.osc_q = state.bath.osc_q + dt * state.bath.osc_p / bath.osc_mass


def step_hamiltonian(state: TrajectoryState, sys: SystemParams,
                     bath: BathParams, dt: float) -> TrajectoryState:
    """One symmetric kick-drift-kick step; drive frozen at the midpoint time."""
    t_mid = state.t + 0.5 * dt
    _kick(state, sys, bath, 0.5 * dt, t_mid)
    _drift(state, sys, bath, dt)
    _kick(state, sys, bath, 0.5 * dt, t_mid)
    state.t += dt
    return state


def _thermostat_substep(ph: NHCBathPhase, bath: NHCBathParams, delta: float) -> None:
    """One reversible chain update of size delta, symmetric about the drag."""
    kt = bath.temperature
    g = bath.thermo_dof

    ph.p_eta2 = ph.p_eta2 + 0.5 * delta * (ph.p_eta1 ** 2 / bath.mass_eta1 - kt)
    scale1 = np.exp(-0.25 * delta * ph.p_eta2 / bath.mass_eta2)
    g1 = ph.osc_p ** 2 / bath.osc_mass - g * kt
    ph.p_eta1 = (ph.p_eta1 * scale1 + 0.5 * delta * g1) * scale1

    ph.osc_p = ph.osc_p * np.exp(-delta * ph.p_eta1 / bath.mass_eta1)
    ph.eta1 = ph.eta1 + delta * ph.p_eta1 / bath.mass_eta1
    ph.eta2 = ph.eta2 + delta * ph.p_eta2 / bath.mass_eta2

    g1 = ph.osc_p ** 2 / bath.osc_mass - g * kt
    ph.p_eta1 = (ph.p_eta1 * scale1 + 0.5 * delta * g1) * scale1
    ph.p_eta2 = ph.p_eta2 + 0.5 * delta * (ph.p_eta1 ** 2 / bath.mass_eta1 - kt)


def _thermostat_half_step(ph: NHCBathPhase, bath: NHCBathParams, half_dt: float,
                          weights: np.ndarray, n_mts: int) -> None:
    for _ in range(n_mts):
        for w in weights:
            _thermostat_substep(ph, bath, w * half_dt / n_mts)


def step_nhc(state: TrajectoryState, sys: SystemParams, bath: NHCBathParams,
             dt: float, n_yoshida: int = 3, n_mts: int = 3) -> TrajectoryState:
    """Thermostat half-step, Hamiltonian step, mirrored thermostat half-step."""
    weights = yoshida_weights(n_yoshida)
    _thermostat_half_step(state.bath, bath, 0.5 * dt, weights, n_mts)
    step_hamiltonian(state, sys, bath, dt)
    _thermostat_half_step(state.bath, bath, 0.5 * dt, weights, n_mts)
    return state


Observer = Callable[[int, TrajectoryState], None]


def integrate(state: TrajectoryState, sys: SystemParams, bath: BathParams,
              config: IntegratorConfig, observer: Optional[Observer] = None,
              strict: bool = True) -> TrajectoryState:
    """Propagate n_steps steps, calling the observer at step 0 and every stride.

    With ``strict`` a non-finite state at an observation point raises
    :class:`TrajectoryFailure`; batched ensemble runs disable it and handle
    per-trajectory masking themselves.
    """
    if observer is not None:
        observer(0, state)
    nhc = isinstance(bath, NHCBathParams)
    for i in range(1, config.n_steps + 1):
        if nhc:
            step_nhc(state, sys, bath, config.dt, config.n_yoshida, config.n_mts)
        else:
            step_hamiltonian(state, sys, bath, config.dt)
        if i % config.stride == 0 or i == config.n_steps:
            if strict and not np.all(state.is_finite()):
                raise TrajectoryFailure(i)
            if observer is not None and i % config.stride == 0:
                observer(i, state)
    return state
