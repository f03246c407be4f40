"""Explicit integration of the regularized spinorial heat flow.

The evolved field obeys::

    d_t psi = -D_g(psi)^2 psi - epsilon * Delta0 psi + [gauge] (grad log rho . grad0) psi

with ``Delta0`` the nonnegative compact Laplacian, so the ``epsilon`` term is
dissipative.  Steps are classical RK4; the step size comes either from a
fixed value or from a CFL bound on the clamped diffusion coefficient.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .diagnostics import (
    DiagnosticsRow,
    compute_row,
    fill_energy_gaps,
    weighted_growth_constant,
)
from .dirac import (
    ConformalGeometry,
    clamp,
    conformal_factor,
    conformal_geometry,
    dirac_squared,
)
from .fieldgrid import Grid, diff_central, gradient_flat, laplacian_flat

log = logging.getLogger(__name__)

PRESETS = ("constant", "gaussian_bump", "nodal_ring", "random_smooth")


class IntegratorDiverged(RuntimeError):
    def __init__(self, step: int, node: tuple[int, ...]):
        super().__init__(f"non-finite value at step {step}, node {node}")
        self.step = step
        self.node = node


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters.  ``dt=None`` selects the CFL policy with ``cfl_safety``."""

    n: tuple[int, ...] = (32, 32)
    length: tuple[float, ...] = (3.0, 3.0)
    t_end: float = 0.01
    dt: float | None = None
    cfl_safety: float = 0.5
    epsilon: float = 0.0
    rho_floor: float = 1e-6
    gauge: bool = False
    alpha: float = 2.0
    init: str = "gaussian_bump"
    init_r0: float = 1.0
    init_amp: float = 1.0
    seed: int = 0
    snapshot_every: int = 0
    outdir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "length", tuple(float(v) for v in self.length))
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0 < self.rho_floor < 1:
            raise ValueError(f"rho_floor must lie in (0, 1), got {self.rho_floor}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.init not in PRESETS:
            raise ValueError(f"unknown init preset {self.init!r}; expected one of {PRESETS}")
        if self.snapshot_every < 0:
            raise ValueError(f"snapshot_every must be >= 0, got {self.snapshot_every}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        Grid(self.n, self.length)

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.length)

    def echo(self) -> dict:
        return asdict(self)

    def as_pairs(self) -> dict:
        """Resolved parameters under their config-file keys, with config-file spellings."""
        out = {}
        for axis, n, length in zip("xyz", self.n, self.length):
            out[f"n{axis}"] = n
            out[f"l{axis}"] = length
        if self.grid.dim == 2:
            out["nz"] = 0
        skip = ("n", "length")
        for k, v in asdict(self).items():
            if k in skip:
                continue
            if k == "dt" and v is None:
                v = "cfl"
            elif k == "gauge":
                v = "on" if v else "off"
            elif k == "outdir" and v is None:
                v = ""
            out[k] = v
        return out


@dataclass
class FlowState:
    t: float
    step: int
    psi: np.ndarray
    geometry: ConformalGeometry


def make_state(psi: np.ndarray, cfg: FlowConfig, t: float = 0.0, step: int = 0) -> FlowState:
    return FlowState(t, step, psi, conformal_geometry(psi, cfg.grid, cfg.rho_floor))


def initial_data(preset: str, grid: Grid, seed: int = 0, r0: float = 1.0,
                 amp: float = 1.0) -> np.ndarray:
    """Initial spinor field for one of the named presets; ``r`` is measured from the box center."""
    psi = np.zeros(grid.n + (4,))
    x = grid.coords(centered=True)
    r2 = sum(xi ** 2 for xi in x)
    if preset == "constant":
        psi[..., 0] = amp
    elif preset == "gaussian_bump":
        psi[..., 0] = amp * np.exp(-r2)
    elif preset == "nodal_ring":
        psi[..., 0] = amp * (r2 - r0 ** 2) * np.exp(-r2)
    elif preset == "random_smooth":
        rng = np.random.default_rng(seed)
        modes = np.array(np.meshgrid(*[np.arange(-2, 3)] * grid.dim, indexing="ij")).reshape(grid.dim, -1).T
        phase_axes = [2 * np.pi * xi / L for xi, L in zip(grid.coords(), grid.length)]
        for c in range(4):
            coef = rng.standard_normal((len(modes), 2))
            for m, (a, b) in zip(modes, coef):
                theta = sum(mi * p for mi, p in zip(m, phase_axes))
                scale = amp / (1.0 + float(m @ m))
                psi[..., c] += scale * (a * np.cos(theta) + b * np.sin(theta))
    else:
        raise ValueError(f"unknown init preset {preset!r}; expected one of {PRESETS}")
    return psi


def _rhs_parts(psi: np.ndarray, cfg: FlowConfig, rho=None) -> tuple[np.ndarray, np.ndarray]:
    grid = cfg.grid
    d2 = dirac_squared(psi, grid, cfg.rho_floor, rho=rho)
    out = -d2
    if cfg.epsilon:
        out = out - cfg.epsilon * laplacian_flat(psi, grid)
    if cfg.gauge:
        r = conformal_factor(psi) if rho is None else np.broadcast_to(np.asarray(rho, float), grid.n)
        w = gradient_flat(np.log(clamp(r, cfg.rho_floor)), grid)
        for k in range(grid.dim):
            out = out + w[..., k, None] * diff_central(psi, grid, k)
    return out, d2


def rhs(psi: np.ndarray, cfg: FlowConfig, rho=None) -> np.ndarray:
    """Time derivative of ``psi``; ``rho`` freezes the metric instead of using ``|psi|``."""
    return _rhs_parts(psi, cfg, rho)[0]


def cfl_dt(psi: np.ndarray, cfg: FlowConfig, rho=None) -> float:
    """``safety * min h^2 / (2 dim (rho_min^-2 + epsilon))`` with the clamped ``rho_min``."""
    grid = cfg.grid
    r = conformal_factor(psi) if rho is None else np.asarray(rho, dtype=float)
    rho_min = float(np.min(clamp(r, cfg.rho_floor)))
    return cfg.cfl_safety * min(grid.h) ** 2 / (2 * grid.dim * (rho_min ** -2 + cfg.epsilon))


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float,
             k1: np.ndarray | None = None) -> np.ndarray:
    if k1 is None:
        k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def check_finite(y: np.ndarray, step: int, spatial_dims: int) -> None:
    bad = ~np.isfinite(y)
    if bad.any():
        node = tuple(int(i) for i in np.argwhere(bad)[0][:spatial_dims])
        raise IntegratorDiverged(step, node)


def _step_dt(state: FlowState, cfg: FlowConfig, rho) -> float:
    dt = cfg.dt if cfg.dt is not None else cfl_dt(state.psi, cfg, rho)
    return min(dt, cfg.t_end - state.t) if state.t < cfg.t_end else dt


def step(state: FlowState, cfg: FlowConfig, rho=None, dt: float | None = None,
         k1: np.ndarray | None = None) -> FlowState:
    """Advance one RK4 step; the step is clipped so ``t`` never overshoots ``t_end``."""
    if dt is None:
        dt = _step_dt(state, cfg, rho)
    psi = rk4_step(lambda y: rhs(y, cfg, rho), state.psi, dt, k1)
    check_finite(psi, state.step + 1, cfg.grid.dim)
    return make_state(psi, cfg, state.t + dt, state.step + 1)


def thread_cap() -> int | None:
    value = os.environ.get("SPINFLOW_THREADS")
    if not value:
        return None
    try:
        cap = int(value)
    except ValueError:
        raise ValueError(f"SPINFLOW_THREADS must be an integer, got {value!r}") from None
    return max(cap, 1)


@dataclass
class RunResult:
    state: FlowState
    rows: list[DiagnosticsRow]
    status: str
    sup_growth_constant: float
    manifest: dict = field(default_factory=dict)


def _status(state: FlowState, cfg: FlowConfig, rho=None) -> str:
    r = state.geometry.rho if rho is None else np.asarray(rho, dtype=float)
    if np.any(r < cfg.rho_floor):
        return "floor-dominated"
    return "completed"


def run(cfg: FlowConfig, rho=None, psi0: np.ndarray | None = None,
        max_steps: int | None = None) -> RunResult:
    """Integrate to ``t_end`` recording a diagnostics row per step.

    Files (``diagnostics.csv``, ``manifest.txt``, ``snap_<step>.sghf``) are
    written only when ``cfg.outdir`` is set.  ``max_steps`` stops early and
    is meant for short smoke runs.
    """
    from . import io

    grid = cfg.grid
    outdir = Path(cfg.outdir) if cfg.outdir else None
    manifest = {
        **{f"config.{k}": v for k, v in cfg.as_pairs().items()},
        "version": __version__,
        "seed": cfg.seed,
        "start_time": datetime.now(timezone.utc).isoformat(),
        "end_time": "",
        "status": "running",
        "threads": thread_cap() or "",
    }
    if outdir is not None:
        io.write_manifest(manifest, outdir / "manifest.txt")

    psi = initial_data(cfg.init, grid, cfg.seed, cfg.init_r0, cfg.init_amp) if psi0 is None else psi0
    state = make_state(np.array(psi, dtype=float), cfg)
    rows: list[DiagnosticsRow] = []
    status = "completed"
    diverged: IntegratorDiverged | None = None

    # overflow on the way to a non-finite field is reported by check_finite instead
    with threadpool_limits(limits=thread_cap()), np.errstate(over="ignore", invalid="ignore"):
        dt = 0.0
        while True:
            k1, d2 = _rhs_parts(state.psi, cfg, rho)
            rows.append(compute_row(state.step, state.t, dt, state.psi, k1, grid, cfg.rho_floor,
                                    cfg.alpha, rho=rho, d2=d2,
                                    previous=rows[-1] if rows else None))
            if outdir is not None and cfg.snapshot_every and state.step % cfg.snapshot_every == 0:
                io.write_snapshot(state.psi, grid, outdir / f"snap_{state.step}.sghf")
            if cfg.t_end - state.t <= 1e-12 * cfg.t_end:
                break
            if max_steps is not None and state.step >= max_steps:
                break
            dt = _step_dt(state, cfg, rho)
            try:
                state = step(state, cfg, rho, dt, k1)
            except IntegratorDiverged as exc:
                log.error("run diverged: %s", exc)
                status = f"diverged({exc.step})"
                diverged = exc
                break

    if diverged is None:
        status = _status(state, cfg, rho)
    fill_energy_gaps(rows)
    sup_c = math.nan
    if len(rows) >= 3 and all(b.t > a.t for a, b in zip(rows, rows[1:])):
        c = weighted_growth_constant([r.t for r in rows], [r.weighted_l2 for r in rows],
                                     [r.weighted_h1 for r in rows])
        sup_c = float(np.max(c))
    manifest.update(end_time=datetime.now(timezone.utc).isoformat(), status=status,
                    steps=state.step, t_final=state.t, sup_growth_constant=sup_c)
    if outdir is not None:
        io.write_diagnostics_csv(rows, outdir / "diagnostics.csv")
        if cfg.snapshot_every and state.step % cfg.snapshot_every and diverged is None:
            io.write_snapshot(state.psi, grid, outdir / f"snap_{state.step}.sghf")
        io.write_manifest(manifest, outdir / "manifest.txt")
    if diverged is not None:
        raise diverged
    return RunResult(state, rows, status, sup_c, manifest)


def with_overrides(cfg: FlowConfig, **kw) -> FlowConfig:
    return replace(cfg, **kw)
