"""Floquet stability of the driven relative mode.

In drive-scaled time the relative mode obeys y'' + (a - 2q cos 2t) y = 0;
one period is [0, pi]. The monodromy matrix is built from the two
fundamental solutions integrated with the same symmetric second-order
stepper as the trajectory code, and |trace| > 2 flags parametric
instability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import SystemParams


@dataclass(frozen=True)
class MathieuParams:
    a: float
    q: float

    def __post_init__(self):
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")

    @classmethod
    def from_axes(cls, x: float, y: float) -> "MathieuParams":
        """Map map-plane coordinates x=(w/wd)^2, y=(w0/wd)^2 to (a, q)."""
        return cls(a=x + y, q=y / 2.0)


def mathieu_params(sys: SystemParams) -> MathieuParams:
    """a = (w^2 + w0^2)/wd^2 and q = w0^2/(2 wd^2) for the relative mode."""
    wd2 = sys.drive_freq ** 2
    return MathieuParams(a=(sys.freq ** 2 + sys.coupling_amp ** 2) / wd2,
                         q=sys.coupling_amp ** 2 / (2.0 * wd2))


def _propagate_fundamental(a, q, t_final: float, steps: int):
    """Velocity-Verlet fundamental solutions over [0, t_final]; a, q may be arrays."""
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    ay = np.ones_like(a)
    av = np.zeros_like(a)
    by = np.zeros_like(a)
    bv = np.ones_like(a)
    dt = t_final / steps
    half = 0.5 * dt
    for i in range(steps):
        k = a - 2.0 * q * np.cos(2.0 * (i * dt + half))
        av -= half * k * ay
        bv -= half * k * by
        ay += dt * av
        by += dt * bv
        av -= half * k * ay
        bv -= half * k * by
    return ay, by, av, bv


def monodromy(params: MathieuParams, steps: int = 4096) -> np.ndarray:
    """One-period propagator of the scaled relative-mode equation."""
    if steps < 256:
        raise ValueError(f"steps must be >= 256, got {steps}")
    ay, by, av, bv = _propagate_fundamental(params.a, params.q, np.pi, steps)
    m = np.array([[ay, by], [av, bv]], dtype=float)
    if not np.isfinite(m).all():
        raise ValueError(f"monodromy overflow at a={params.a}, q={params.q}")
    return m


@dataclass
class StabilityMap:
    """Instability classification over the (x, y) = ((w/wd)^2, (w0/wd)^2) plane."""

    xs: np.ndarray          # cell centers, (nx,)
    ys: np.ndarray          # cell centers, (ny,)
    abs_trace: np.ndarray   # (ny, nx)
    determinant: np.ndarray
    unstable: np.ndarray    # |trace| > 2 + trace_tol
    marginal: np.ndarray    # ||trace| - 2| < marginal_tol


def stability_map(x_range=(0.0, 40.0), y_range=(0.0, 40.0), resolution=400,
                  steps: int = 4096, trace_tol: float = 1e-9,
                  marginal_tol: float = 1e-3) -> StabilityMap:
    """Classify every cell of a regular grid by its monodromy trace.

    Cells are sampled at their centers; cells within ``marginal_tol`` of the
    |trace| = 2 boundary are additionally flagged marginal since floating
    point cannot decide them.
    """
    if x_range[1] <= x_range[0] or y_range[1] <= y_range[0]:
        raise ValueError("stability map window must have positive area")
    if isinstance(resolution, int):
        nx = ny = resolution
    else:
        nx, ny = resolution
    if nx < 1 or ny < 1:
        raise ValueError("resolution must be >= 1 in both directions")
    xs = x_range[0] + (np.arange(nx) + 0.5) * (x_range[1] - x_range[0]) / nx
    ys = y_range[0] + (np.arange(ny) + 0.5) * (y_range[1] - y_range[0]) / ny
    gx, gy = np.meshgrid(xs, ys)
    a = (gx + gy).ravel()
    q = (gy / 2.0).ravel()
    ay, by, av, bv = _propagate_fundamental(a, q, np.pi, steps)
    tr = np.abs(ay + bv).reshape(ny, nx)
    det = (ay * bv - av * by).reshape(ny, nx)
    return StabilityMap(xs=xs, ys=ys, abs_trace=tr, determinant=det,
                        unstable=tr > 2.0 + trace_tol,
                        marginal=np.abs(tr - 2.0) < marginal_tol)


def write_stability_csv(smap: StabilityMap, path, header_lines=()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("x,y,abs_trace,unstable,marginal\n")
        for iy, y in enumerate(smap.ys):
            for ix, x in enumerate(smap.xs):
                fh.write(f"{x!r},{y!r},{smap.abs_trace[iy, ix]!r},"
                         f"{int(smap.unstable[iy, ix])},{int(smap.marginal[iy, ix])}\n")


def grows_unbounded(params: MathieuParams, periods: int = 50,
                    growth_threshold: float = 1e6,
                    steps_per_period: int = 4096) -> bool:
    """Brute-force classification: does |y| exceed the threshold within
    ``periods`` periods for either fundamental solution?"""
    ay, by, av, bv = _propagate_fundamental(params.a, params.q,
                                            periods * np.pi,
                                            periods * steps_per_period)
    peak = max(abs(float(ay)), abs(float(by)), abs(float(av)), abs(float(bv)))
    if not np.isfinite(peak):
        return True
    return peak > growth_threshold
