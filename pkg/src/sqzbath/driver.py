"""Monte Carlo ensemble orchestration: runs, temperature sweeps, and
bath-model comparisons.

Trajectories are processed in fixed-size chunks whose statistics merge
associatively, so results are bit-reproducible for a given seed regardless
of worker count or scheduling. Each trajectory samples from its own
counter-based random stream keyed by (master seed, trajectory index).
"""

from __future__ import annotations

import dataclasses
import enum
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baths import (NHCBathParams, NHCBathPhase, OhmicBathParams, OhmicBathPhase,
                    nhc_extended_energy, ohmic_energy)
from .integrate import IntegratorConfig, TrajectoryState, integrate
from .oracle import (FundamentalSolution, fundamental_solution,
                     mode2_variance_exact, threshold_temperature)
from .observables import (SqueezeReport, VarianceAccumulator, VarianceSeries,
                          squeeze_report)
from .sampling import (SamplingMode, init_nhc_bath, sample_ohmic_bath,
                       sample_system, trajectory_rng)
from .system import SystemParams, SystemPhase, system_energy, to_normal_modes

SEED_STREAM_RULE = "philox(seed_sequence=(seed, trajectory_index))"


class ModelKind(enum.Enum):
    ISOLATED = "isolated"
    OHMIC = "ohmic"
    NHC = "nhc"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown model {name!r}; expected one of "
                             f"{[m.value for m in cls]}") from None


class EnsembleFailure(RuntimeError):
    """More than the tolerated fraction of trajectories went non-finite."""

    def __init__(self, n_failed: int, n_total: int):
        super().__init__(f"{n_failed} of {n_total} trajectories produced "
                         f"non-finite coordinates (tolerance 0.1%)")
        self.n_failed = n_failed
        self.n_total = n_total


FAILURE_TOLERANCE = 1e-3


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    model: ModelKind
    temperature: float
    n_traj: int
    seed: int
    integrator: IntegratorConfig = IntegratorConfig()
    sampling: SamplingMode = SamplingMode.QUANTUM
    bath_ohmic: Optional[OhmicBathParams] = None
    bath_nhc: Optional[NHCBathParams] = None
    workers: int = 1
    chunk_size: int = 500
    track_energy: bool = False

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.n_traj < 2:
            raise ValueError(f"n_traj must be >= 2, got {self.n_traj}")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be >= 1")
        if self.model is ModelKind.OHMIC and self.bath_ohmic is None:
            raise ValueError("ohmic model requires bath_ohmic parameters")
        if self.model is ModelKind.NHC:
            if self.bath_nhc is None:
                raise ValueError("nhc model requires bath_nhc parameters")
            if self.bath_nhc.temperature != self.temperature:
                raise ValueError("thermostat temperature must match the ensemble "
                                 "temperature")

    @property
    def obs_times(self) -> np.ndarray:
        cfg = self.integrator
        n_obs = cfg.n_steps // cfg.stride + 1
        return np.arange(n_obs) * (cfg.stride * cfg.dt)


@dataclass
class EnergySeries:
    times: np.ndarray
    mean: np.ndarray


@dataclass
class EnsembleResult:
    series: VarianceSeries
    report: SqueezeReport
    n_traj: int
    n_failed: int
    energy: Optional[EnergySeries] = None
    wall_time: float = 0.0


def _sample_chunk(config: RunConfig, lo: int, hi: int) -> TrajectoryState:
    """Draw initial conditions for trajectory indices [lo, hi) as one batch."""
    n = hi - lo
    q1 = np.empty(n)
    q2 = np.empty(n)
    p1 = np.empty(n)
    p2 = np.empty(n)
    bath = None
    if config.model is ModelKind.OHMIC:
        pos = np.empty((n, config.bath_ohmic.n_modes))
        mom = np.empty((n, config.bath_ohmic.n_modes))
    elif config.model is ModelKind.NHC:
        osc = np.empty((n, 2))
    for row, idx in enumerate(range(lo, hi)):
        rng = trajectory_rng(config.seed, idx)
        ph = sample_system(rng, config.system, config.temperature, config.sampling)
        q1[row], q2[row], p1[row], p2[row] = ph.q1, ph.q2, ph.p1, ph.p2
        if config.model is ModelKind.OHMIC:
            bp = sample_ohmic_bath(rng, config.bath_ohmic, config.temperature,
                                   config.sampling)
            pos[row] = bp.pos
            mom[row] = bp.mom
        elif config.model is ModelKind.NHC:
            bp = init_nhc_bath(rng, config.bath_nhc, config.temperature,
                               config.sampling)
            osc[row] = bp.osc_q, bp.osc_p
    if config.model is ModelKind.OHMIC:
        bath = OhmicBathPhase(pos=pos, mom=mom)
    elif config.model is ModelKind.NHC:
        bath = NHCBathPhase(osc_q=osc[:, 0], osc_p=osc[:, 1],
                            eta1=np.zeros(n), eta2=np.zeros(n),
                            p_eta1=np.zeros(n), p_eta2=np.ones(n))
    return TrajectoryState(t=0.0, system=SystemPhase(q1, q2, p1, p2), bath=bath)


def _chunk_energy(config: RunConfig, state: TrajectoryState):
    if config.model is ModelKind.OHMIC:
        return ohmic_energy(state.t, state.system, state.bath, config.system,
                            config.bath_ohmic)
    if config.model is ModelKind.NHC:
        return nhc_extended_energy(state.t, state.system, state.bath,
                                   config.system, config.bath_nhc)
    return system_energy(state.t, state.system, config.system)


def _run_chunk(config: RunConfig, lo: int, hi: int):
    """Integrate one chunk; returns (accumulator, energy_sums, n_failed)."""
    state = _sample_chunk(config, lo, hi)
    times = config.obs_times
    n_obs = len(times)
    n = hi - lo
    snaps = np.empty((n_obs, n, 4))
    energies = np.empty((n_obs, n)) if config.track_energy else None
    cursor = [0]

    def observer(step, st):
        i = cursor[0]
        cursor[0] += 1
        modes = to_normal_modes(st.system)
        snaps[i, :, 0] = modes.qt1
        snaps[i, :, 1] = modes.qt2
        snaps[i, :, 2] = modes.pt1
        snaps[i, :, 3] = modes.pt2
        if energies is not None:
            energies[i] = _chunk_energy(config, st)

    bath_params = {ModelKind.ISOLATED: None,
                   ModelKind.OHMIC: config.bath_ohmic,
                   ModelKind.NHC: config.bath_nhc}[config.model]
    integrate(state, config.system, bath_params, config.integrator, observer,
              strict=False)

    ok = np.isfinite(snaps).all(axis=(0, 2)) & state.is_finite()
    n_failed = int(n - ok.sum())
    acc = VarianceAccumulator(times)
    acc.add_block(snaps[:, ok, :].swapaxes(0, 1))
    energy_sums = None
    if energies is not None:
        energy_sums = energies[:, ok].sum(axis=1)
    return acc, energy_sums, n_failed


def _chunk_ranges(n_traj: int, chunk_size: int):
    return [(lo, min(lo + chunk_size, n_traj))
            for lo in range(0, n_traj, chunk_size)]


def run_ensemble(config: RunConfig) -> EnsembleResult:
    """Sample, integrate and reduce a full trajectory ensemble.

    Aborts with :class:`EnsembleFailure` when more than 0.1% of trajectories
    go non-finite, which signals a stepping problem rather than noise.
    """
    start = time.perf_counter()
    times = config.obs_times
    ranges = _chunk_ranges(config.n_traj, config.chunk_size)
    if config.workers > 1 and len(ranges) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            partials = list(pool.map(_run_chunk, *zip(*((config, lo, hi)
                                                        for lo, hi in ranges))))
    else:
        partials = [_run_chunk(config, lo, hi) for lo, hi in ranges]

    acc = VarianceAccumulator(times)
    energy_sum = np.zeros(len(times)) if config.track_energy else None
    n_failed = 0
    for part_acc, part_energy, part_failed in partials:
        acc.merge(part_acc)
        n_failed += part_failed
        if energy_sum is not None and part_energy is not None:
            energy_sum += part_energy

    if n_failed > FAILURE_TOLERANCE * config.n_traj:
        raise EnsembleFailure(n_failed, config.n_traj)

    series = acc.series()
    energy = None
    if energy_sum is not None:
        energy = EnergySeries(times=times, mean=energy_sum / (config.n_traj - n_failed))
    return EnsembleResult(series=series, report=squeeze_report(series),
                          n_traj=config.n_traj, n_failed=n_failed, energy=energy,
                          wall_time=time.perf_counter() - start)


def temperature_seed(master_seed: int, index: int) -> int:
    """Derived master seed for sweep point ``index`` (documented, stable)."""
    return int(np.random.SeedSequence((master_seed, 7919, index))
               .generate_state(1, np.uint64)[0])


@dataclass
class SweepRow:
    temperature: float
    min_variance: float
    se_at_min: float
    first_crossing: Optional[float]
    significant: bool
    oracle_min_variance: float
    series: Optional[VarianceSeries] = None

    def to_dict(self) -> dict:
        payload = dataclasses.asdict(self)
        payload.pop("series")
        return payload


@dataclass
class SweepResult:
    rows: list
    mc_threshold: Optional[float]
    mc_threshold_defined: bool
    oracle_threshold: Optional[dict]
    oracle_threshold_note: str

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows],
                "mc_threshold": self.mc_threshold,
                "mc_threshold_defined": self.mc_threshold_defined,
                "oracle_threshold": self.oracle_threshold,
                "oracle_threshold_note": self.oracle_threshold_note}


def _oracle_threshold_auto(sys: SystemParams, t_lo: float, t_hi: float,
                           mode: SamplingMode, dt: float, n_steps: int,
                           fundamental: FundamentalSolution):
    """Bisect with a geometrically expanded bracket; None when no threshold
    exists (e.g. no squeezing at any temperature)."""
    lo, hi = t_lo, t_hi

    def objective(temp):
        _, var_q, _ = mode2_variance_exact(sys, temp, mode, fundamental=fundamental)
        return float(var_q.min()) - 0.5

    # var(T) is pointwise monotone in T, so expanding the ends is sound.
    for _ in range(60):
        if objective(lo) < 0:
            break
        lo /= 2.0
        if lo < 1e-6:
            return None, "no squeezing even as T -> 0; threshold undefined"
    else:
        return None, "bracket expansion failed at the low end"
    for _ in range(60):
        if objective(hi) >= 0:
            break
        hi *= 2.0
        if hi > 1e6:
            return None, "squeezing persists at all probed temperatures"
    else:
        return None, "bracket expansion failed at the high end"
    result = threshold_temperature(sys, lo, hi, mode=mode, dt=dt, n_steps=n_steps,
                                   fundamental=fundamental)
    note = ""
    if not (t_lo <= result.temperature <= t_hi):
        note = (f"threshold {result.temperature:.4f} lies outside the requested "
                f"window [{t_lo}, {t_hi}]")
    return result.to_dict(), note


def temperature_sweep(config: RunConfig, temperatures) -> SweepResult:
    """One ensemble per temperature with per-temperature derived seeds.

    The Monte Carlo threshold estimate is the lowest grid temperature with no
    statistically significant sub-threshold crossing of var(qt2); the exact
    covariance oracle provides the reference column and headline threshold.
    """
    temps = [float(t) for t in temperatures]
    if not temps:
        raise ValueError("temperature list must be non-empty")
    if any(b <= a for a, b in zip(temps, temps[1:])):
        raise ValueError("temperatures must be strictly increasing")

    cfg_int = config.integrator
    fundamental = fundamental_solution(config.system, dt=cfg_int.dt,
                                       n_steps=cfg_int.n_steps)
    rows = []
    for i, temp in enumerate(temps):
        run_cfg = dataclasses.replace(
            config, temperature=temp, seed=temperature_seed(config.seed, i),
            bath_nhc=(dataclasses.replace(config.bath_nhc, temperature=temp)
                      if config.bath_nhc is not None else None))
        result = run_ensemble(run_cfg)
        diag = result.report["qt2"]
        _, oracle_var_q, _ = mode2_variance_exact(config.system, temp,
                                                  config.sampling,
                                                  fundamental=fundamental)
        obs_idx = np.arange(0, cfg_int.n_steps + 1, cfg_int.stride)
        rows.append(SweepRow(temperature=temp,
                             min_variance=diag.min_variance,
                             se_at_min=diag.se_at_min,
                             first_crossing=diag.first_crossing,
                             significant=diag.significant,
                             oracle_min_variance=float(oracle_var_q[obs_idx].min()),
                             series=result.series))

    mc_threshold = None
    defined = False
    if len(rows) > 1:
        for row in rows:
            if not row.significant:
                mc_threshold = row.temperature
                defined = True
                break
    oracle_thr, note = _oracle_threshold_auto(config.system, temps[0], temps[-1],
                                              config.sampling, cfg_int.dt,
                                              cfg_int.n_steps, fundamental)
    return SweepResult(rows=rows, mc_threshold=mc_threshold,
                       mc_threshold_defined=defined, oracle_threshold=oracle_thr,
                       oracle_threshold_note=note)


@dataclass
class CoordAgreement:
    max_rel_dev: float
    time_of_max: float
    passed: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class BathComparison:
    coords: dict
    passed: bool
    n_traj: int
    rel_tolerance: float

    def to_dict(self) -> dict:
        return {"coords": {k: v.to_dict() for k, v in self.coords.items()},
                "passed": self.passed, "n_traj": self.n_traj,
                "rel_tolerance": self.rel_tolerance}


def compare_variance_series(series_ref: VarianceSeries, series_other: VarianceSeries,
                            rel_tolerance: float = 0.05):
    """Pointwise agreement check between two variance series.

    A coordinate passes when, at every observed time, the curves differ by
    no more than max(rel_tolerance * var, 3 * combined standard error).
    Returns ``(coords, passed)``.
    """
    coords = {}
    all_ok = True
    for name in ("qt1", "qt2", "pt1", "pt2"):
        vo = series_ref.column(name)
        vn = series_other.column(name)
        se = np.hypot(series_ref.se_column(name), series_other.se_column(name))
        dev = np.abs(vo - vn)
        allowed = np.maximum(rel_tolerance * np.abs(vo), 3.0 * se)
        ok = bool(np.all(dev <= allowed))
        imax = int(np.argmax(np.where(vo != 0, dev / np.abs(vo), 0.0)))
        coords[name] = CoordAgreement(
            max_rel_dev=float(dev[imax] / abs(vo[imax])) if vo[imax] != 0 else float("inf"),
            time_of_max=float(series_ref.times[imax]),
            passed=ok)
        all_ok &= ok
    return coords, all_ok


def bath_equivalence(config_ohmic: RunConfig, config_nhc: RunConfig,
                     rel_tolerance: float = 0.05) -> BathComparison:
    """Run the two bath representations and compare their variance curves."""
    if config_ohmic.model is not ModelKind.OHMIC or config_nhc.model is not ModelKind.NHC:
        raise ValueError("expected an ohmic config and an nhc config")
    for attr in ("system", "temperature", "seed", "n_traj", "integrator", "sampling"):
        if getattr(config_ohmic, attr) != getattr(config_nhc, attr):
            raise ValueError(f"configs must share {attr} for a fair comparison")

    res_o = run_ensemble(config_ohmic)
    res_n = run_ensemble(config_nhc)
    coords, all_ok = compare_variance_series(res_o.series, res_n.series, rel_tolerance)
    return BathComparison(coords=coords, passed=all_ok, n_traj=config_ohmic.n_traj,
                          rel_tolerance=rel_tolerance)
