"""Deterministic Gaussian ground truth for the Monte Carlo pipeline.

The models are linear, so Gaussian initial states stay Gaussian and every
variance follows from the fundamental solutions of the equations of motion.
Both oracles drive the *same* stepper as the trajectory code (unit initial
conditions instead of thermal samples), which keeps discretization bias
common-mode between oracle and Monte Carlo; a finer-step run of the oracle
bounds that shared bias.

The relative mode is exactly bath-decoupled (both baths couple to q1 + q2),
so its two-dimensional fundamental solution is exact for all three models.
The thermostatted model has no Gaussian closure in the chain variables and
is validated against the Ohmic oracle instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baths import OhmicBathParams, OhmicBathPhase
from .integrate import IntegratorConfig, TrajectoryState, integrate
from .sampling import SamplingMode, thermal_widths
from .system import SystemParams, SystemPhase, normal_mode_freqs, to_normal_modes

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass
class FundamentalSolution:
    """Unit-position and unit-velocity solutions of the relative mode."""

    times: np.ndarray
    pos_a: np.ndarray   # y(0)=1, y'(0)=0
    vel_a: np.ndarray
    pos_b: np.ndarray   # y(0)=0, y'(0)=1
    vel_b: np.ndarray

    def wronskian(self) -> np.ndarray:
        return self.pos_a * self.vel_b - self.vel_a * self.pos_b


def fundamental_solution(sys: SystemParams, dt: float = 0.01,
                         n_steps: int = 25000) -> FundamentalSolution:
    """Integrate the two fundamental solutions with the trajectory stepper.

    Implemented as a two-trajectory batch of the full system prepared in pure
    relative-mode states, so the exact code path of the ensemble runs is
    exercised.
    """
    m = sys.mass
    # batch rows: (A, B); qt2 = 1 resp. 0, pt2 = 0 resp. m (unit velocity)
    phase = SystemPhase(q1=np.array([_SQRT_HALF, 0.0]),
                        q2=np.array([-_SQRT_HALF, 0.0]),
                        p1=np.array([0.0, m * _SQRT_HALF]),
                        p2=np.array([0.0, -m * _SQRT_HALF]))
    state = TrajectoryState(t=0.0, system=phase)
    pos = np.empty((n_steps + 1, 2))
    vel = np.empty((n_steps + 1, 2))

    def observer(step, st):
        modes = to_normal_modes(st.system)
        pos[step] = modes.qt2
        vel[step] = modes.pt2 / m

    cfg = IntegratorConfig(dt=dt, n_steps=n_steps, stride=1)
    integrate(state, sys, None, cfg, observer)
    times = np.arange(n_steps + 1) * dt
    return FundamentalSolution(times=times, pos_a=pos[:, 0], vel_a=vel[:, 0],
                               pos_b=pos[:, 1], vel_b=vel[:, 1])


def mode2_variance_exact(sys: SystemParams, temperature: float,
                         mode: SamplingMode = SamplingMode.QUANTUM,
                         dt: float = 0.01, n_steps: int = 25000,
                         fundamental: Optional[FundamentalSolution] = None):
    """Exact (var_qt2, var_pt2) curves from the fundamental solutions.

    Returns ``(times, var_q, var_p)``. The initial widths are thermal at the
    undriven mode frequency; the curves are exact for all three models since
    the relative mode never couples to a bath.
    """
    if fundamental is None:
        fundamental = fundamental_solution(sys, dt=dt, n_steps=n_steps)
    w1, _ = normal_mode_freqs(0.0, sys)
    wid = thermal_widths(sys.mass, w1, temperature, mode)
    m = sys.mass
    var_q = fundamental.pos_a ** 2 * wid.var_q + fundamental.pos_b ** 2 * (wid.var_p / m ** 2)
    var_p = (m * fundamental.vel_a) ** 2 * wid.var_q + fundamental.vel_b ** 2 * wid.var_p
    return fundamental.times, var_q, var_p


def isolated_variance_series(sys: SystemParams, temperature: float,
                             mode: SamplingMode = SamplingMode.QUANTUM,
                             config: Optional[IntegratorConfig] = None,
                             fundamental: Optional[FundamentalSolution] = None):
    """Exact isolated-model variance curves in the ensemble CSV layout.

    Mode 1 is an undriven thermal oscillator, so its position and momentum
    variances are constant; mode 2 comes from the fundamental solutions.
    Standard-error columns are zero (the curves are deterministic).
    """
    from .observables import VarianceSeries

    if config is None:
        config = IntegratorConfig()
    if fundamental is None:
        fundamental = fundamental_solution(sys, dt=config.dt, n_steps=config.n_steps)
    _, var_q2, var_p2 = mode2_variance_exact(sys, temperature, mode,
                                             fundamental=fundamental)
    w1, _ = normal_mode_freqs(0.0, sys)
    wid = thermal_widths(sys.mass, w1, temperature, mode)
    idx = np.arange(0, config.n_steps + 1, config.stride)
    n_obs = len(idx)
    variances = np.column_stack([
        np.full(n_obs, wid.var_q), var_q2[idx],
        np.full(n_obs, wid.var_p), var_p2[idx],
    ])
    return VarianceSeries(times=fundamental.times[idx], variances=variances,
                          std_errors=np.zeros_like(variances),
                          count=np.zeros(n_obs, dtype=np.int64))


class BracketError(ValueError):
    """The threshold search window does not bracket a sign change."""

    def __init__(self, t_lo, t_hi, f_lo, f_hi):
        super().__init__(
            f"no squeezing-threshold bracket in [{t_lo}, {t_hi}]: "
            f"f({t_lo}) = {f_lo:.6g}, f({t_hi}) = {f_hi:.6g}")
        self.f_lo = f_lo
        self.f_hi = f_hi


@dataclass
class ThresholdResult:
    temperature: float
    definition: str          # "anywhere" or "sustained"
    tolerance: float
    min_variance: float      # minimum of the variance curve at the threshold
    f_lo: float
    f_hi: float

    def to_dict(self) -> dict:
        return {"temperature": self.temperature, "definition": self.definition,
                "tolerance": self.tolerance, "min_variance": self.min_variance,
                "f_lo": self.f_lo, "f_hi": self.f_hi}


def threshold_temperature(sys: SystemParams, t_lo: float, t_hi: float,
                          tolerance: float = 1e-3, threshold: float = 0.5,
                          mode: SamplingMode = SamplingMode.QUANTUM,
                          dt: float = 0.01, n_steps: int = 25000,
                          definition: str = "anywhere",
                          fundamental: Optional[FundamentalSolution] = None) -> ThresholdResult:
    """Bisect for the temperature where position squeezing disappears.

    ``anywhere``: the minimum of var_qt2 over the window touches the
    threshold. ``sustained``: the curve must stay below the threshold from
    its first crossing to the end of the window.
    """
    if definition not in ("anywhere", "sustained"):
        raise ValueError(f"unknown threshold definition {definition!r}")
    if not (0 < t_lo < t_hi):
        raise ValueError(f"need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")
    if fundamental is None:
        fundamental = fundamental_solution(sys, dt=dt, n_steps=n_steps)

    def objective(temp):
        _, var_q, _ = mode2_variance_exact(sys, temp, mode, fundamental=fundamental)
        below = var_q < threshold
        if definition == "anywhere":
            return float(var_q.min()) - threshold
        if not below.any():
            return float(var_q.min()) - threshold  # positive: no crossing at all
        return float(var_q[np.argmax(below):].max()) - threshold

    f_lo, f_hi = objective(t_lo), objective(t_hi)
    if not (f_lo < 0 <= f_hi or f_hi < 0 <= f_lo):
        raise BracketError(t_lo, t_hi, f_lo, f_hi)
    lo, hi = (t_lo, t_hi) if f_lo < 0 else (t_hi, t_lo)
    while abs(hi - lo) > tolerance:
        mid = 0.5 * (lo + hi)
        if objective(mid) < 0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    _, var_q, _ = mode2_variance_exact(sys, t_star, mode, fundamental=fundamental)
    return ThresholdResult(temperature=t_star, definition=definition,
                           tolerance=tolerance, min_variance=float(var_q.min()),
                           f_lo=f_lo, f_hi=f_hi)


@dataclass
class CovarianceSeries:
    """Exact normal-mode variances of the full linear model on the
    observation grid, with optional full covariance matrices."""

    times: np.ndarray
    variances: np.ndarray           # (n_times, 4): qt1, qt2, pt1, pt2
    dim: int
    full: Optional[np.ndarray] = None   # (n_times, dim, dim)

    def eigenvalue_floor(self) -> float:
        if self.full is None:
            raise ValueError("full covariance matrices were not kept")
        return float(min(np.linalg.eigvalsh(sigma)[0] for sigma in self.full))


MAX_ORACLE_BATH_MODES = 512


def full_covariance_exact(sys: SystemParams, bath: OhmicBathParams,
                          temperature: float,
                          mode: SamplingMode = SamplingMode.QUANTUM,
                          config: Optional[IntegratorConfig] = None,
                          keep_full: bool = False) -> CovarianceSeries:
    """Propagate the full covariance of the Ohmic model exactly.

    The one-step map is linear, so the propagator columns are obtained by
    integrating unit initial conditions through the ordinary stepper (one
    batch row per phase-space direction); variances follow by summing the
    squared rows against the diagonal initial covariance. The initial
    covariance is diagonal in the oscillator coordinates because both modes
    share the undriven frequency at t=0.
    """
    if bath.n_modes > MAX_ORACLE_BATH_MODES:
        raise ValueError(f"oracle capped at {MAX_ORACLE_BATH_MODES} bath modes, "
                         f"got {bath.n_modes}")
    if sys.frozen_coupling:
        raise ValueError("covariance oracle requires the driven model: with a "
                         "frozen coupling the t=0 covariance is not diagonal "
                         "in oscillator coordinates")
    if config is None:
        config = IntegratorConfig()
    n_bath = bath.n_modes
    dim = 4 + 2 * n_bath

    # unit columns, coordinate order (q1, q2, R_1..R_N, p1, p2, P_1..P_N)
    q1 = np.zeros(dim)
    q2 = np.zeros(dim)
    p1 = np.zeros(dim)
    p2 = np.zeros(dim)
    pos = np.zeros((dim, n_bath))
    mom = np.zeros((dim, n_bath))
    q1[0] = 1.0
    q2[1] = 1.0
    pos[2:2 + n_bath] = np.eye(n_bath)
    p1[2 + n_bath] = 1.0
    p2[3 + n_bath] = 1.0
    mom[4 + n_bath:] = np.eye(n_bath)
    state = TrajectoryState(t=0.0, system=SystemPhase(q1, q2, p1, p2),
                            bath=OhmicBathPhase(pos, mom))

    w1, _ = normal_mode_freqs(0.0, sys)
    wid_sys = thermal_widths(sys.mass, w1, temperature, mode)
    wid_bath = thermal_widths(bath.mass, bath.freqs, temperature, mode)
    sigma0_sq = np.concatenate([
        [wid_sys.var_q, wid_sys.var_q], wid_bath.var_q,
        [wid_sys.var_p, wid_sys.var_p], wid_bath.var_p,
    ])

    n_obs = config.n_steps // config.stride + 1
    if keep_full and n_obs * dim * dim > 2 * 10 ** 8:
        raise ValueError("keep_full would exceed the matrix-storage budget; "
                         "reduce bath size or increase the stride")
    times = np.empty(n_obs)
    variances = np.empty((n_obs, 4))
    full = np.empty((n_obs, dim, dim)) if keep_full else None
    snapshot_index = [0]

    def observer(step, st):
        i = snapshot_index[0]
        snapshot_index[0] += 1
        times[i] = st.t
        ph = st.system
        rows = np.vstack([(ph.q1 + ph.q2) * _SQRT_HALF,
                          (ph.q1 - ph.q2) * _SQRT_HALF,
                          (ph.p1 + ph.p2) * _SQRT_HALF,
                          (ph.p1 - ph.p2) * _SQRT_HALF])
        variances[i] = rows ** 2 @ sigma0_sq
        if keep_full:
            phi = np.vstack([ph.q1, ph.q2, st.bath.pos.T, ph.p1, ph.p2,
                             st.bath.mom.T])
            scaled = phi * np.sqrt(sigma0_sq)
            full[i] = scaled @ scaled.T

    integrate(state, sys, bath, config, observer)
    return CovarianceSeries(times=times, variances=variances, dim=dim, full=full)
