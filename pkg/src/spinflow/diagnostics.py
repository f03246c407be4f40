"""Monitored quantities of the spinorial heat flow.

Energies use the clamped amplitude inside the operators and the unclamped
``rho**dim`` as volume weight, so the functional stays finite while still
vanishing where the induced volume collapses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .dirac import (
    DEFAULT_RHO_FLOOR,
    clamp,
    conformal_factor,
    conformal_laplacian_scalar,
    dirac_conformal,
    dirac_squared,
    scalar_curvature,
)
from .fieldgrid import Grid, diff_central, integrate, pointwise_sq

CSV_COLUMNS = (
    "step", "t", "dt", "energy", "weighted_l2", "weighted_h1", "min_rho", "max_rho",
    "nodal_fraction", "resA_l2", "resA_linf", "energy_gap",
)


@dataclass
class DiagnosticsRow:
    step: int
    t: float
    dt: float
    energy: float
    weighted_l2: float
    weighted_h1: float
    min_rho: float
    max_rho: float
    nodal_fraction: float
    resA_l2: float
    resA_linf: float
    energy_gap: float = math.nan
    monotonicity_flag: bool = True
    # int |D^2 psi|^2 rho^dim dV0, needed for the energy identity
    dissipation: float = field(default=0.0, repr=False)

    def csv_values(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def _volume_weight(psi, grid: Grid, rho) -> np.ndarray:
    if rho is None:
        rho = conformal_factor(psi)
    return np.broadcast_to(np.asarray(rho, dtype=float), grid.n) ** grid.dim


def energy(psi: np.ndarray, grid: Grid, rho_floor: float = DEFAULT_RHO_FLOOR, rho=None) -> float:
    """Spinorial Dirichlet energy ``int |D_g psi|^2 rho^dim dV0``.

    ``rho`` pins the metric (frozen geometry); by default it is ``|psi|``.
    """
    d = dirac_conformal(psi, psi, grid, "A", rho_floor, rho=rho)
    return integrate(pointwise_sq(d, grid) * _volume_weight(psi, grid, rho), grid)


def dissipation(psi: np.ndarray, grid: Grid, rho_floor: float = DEFAULT_RHO_FLOOR, rho=None,
                d2: np.ndarray | None = None) -> float:
    """``int |D_g^2 psi|^2 rho^dim dV0``, the principal energy-decay density."""
    if d2 is None:
        d2 = dirac_squared(psi, grid, rho_floor, rho=rho)
    return integrate(pointwise_sq(d2, grid) * _volume_weight(psi, grid, rho), grid)


def weighted_norms(psi: np.ndarray, grid: Grid, alpha: float = 2.0) -> tuple[float, float]:
    """``(int rho^a |psi|^2 dV0, int rho^a |grad psi|^2 dV0)`` with unclamped ``rho``."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    w = conformal_factor(psi) ** alpha
    grad_sq = sum(pointwise_sq(diff_central(psi, grid, a), grid) for a in range(grid.dim))
    return integrate(w * pointwise_sq(psi, grid), grid), integrate(w * grad_sq, grid)


def energy_identity_gap(t, energy_series, dissipation_series) -> np.ndarray:
    """``dE/dt + 2 int |D^2 psi|^2 dV_g`` along a trajectory.

    Interior samples use the centered difference, end points the one-sided
    second-order formula.  Needs at least three samples.
    """
    t = np.asarray(t, dtype=float)
    if t.size < 3:
        raise ValueError(f"energy gap needs at least 3 samples, got {t.size}")
    dE = np.gradient(np.asarray(energy_series, dtype=float), t, edge_order=2)
    return dE + 2.0 * np.asarray(dissipation_series, dtype=float)


def weighted_growth_constant(t, weighted_l2, weighted_h1) -> np.ndarray:
    """``C(t) = (d/dt wl2 + wh1) / wl2``; the smallest constant in the weighted estimate."""
    t = np.asarray(t, dtype=float)
    wl2 = np.asarray(weighted_l2, dtype=float)
    if t.size < 3:
        raise ValueError(f"growth constant needs at least 3 samples, got {t.size}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.gradient(wl2, t, edge_order=2) + np.asarray(weighted_h1)) / wl2


def _residual_parts(psi, rhs_value, grid: Grid, rho_floor: float):
    rho = conformal_factor(psi)
    rc = clamp(rho, rho_floor)
    rho_sq = rho ** 2
    grad_sq = sum(pointwise_sq(diff_central(psi, grid, a), grid) for a in range(grid.dim))
    lhs = 2.0 * np.sum(rhs_value * psi, axis=-1)
    bracket = (conformal_laplacian_scalar(rc, rho_sq, grid)
               + 2.0 * grad_sq / rc ** 2
               - 0.5 * scalar_curvature(rc, grid) * rho_sq)
    return rho, rc, lhs, bracket


def residual_field(psi: np.ndarray, rhs_value: np.ndarray, grid: Grid,
                   rho_floor: float = DEFAULT_RHO_FLOOR) -> np.ndarray:
    """``d/dt rho^2`` (from the flow) minus the conformal-factor evolution law."""
    _, _, lhs, bracket = _residual_parts(psi, rhs_value, grid, rho_floor)
    return lhs - bracket


def metric_evolution_factors(psi, rhs_value, grid: Grid, rho_floor: float = DEFAULT_RHO_FLOOR):
    """``d_t g_ij / g_ij`` two ways: from ``d_t(rho^2) / rho^2`` and from the evolution law."""
    _, rc, lhs, bracket = _residual_parts(psi, rhs_value, grid, rho_floor)
    return lhs / rc ** 2, bracket / rc ** 2


def conformal_factor_residual(psi: np.ndarray, rhs_value: np.ndarray, grid: Grid,
                        rho_floor: float = DEFAULT_RHO_FLOOR) -> tuple[float, float]:
    """L2 and max norms of the residual over the region ``rho > 10 rho_floor``."""
    rho, _, lhs, bracket = _residual_parts(psi, rhs_value, grid, rho_floor)
    mask = rho > 10.0 * rho_floor
    if not mask.any():
        return 0.0, 0.0
    r = np.where(mask, lhs - bracket, 0.0)
    return math.sqrt(integrate(r ** 2, grid)), float(np.abs(r).max())


def _periodic_label(mask: np.ndarray) -> tuple[np.ndarray, int]:
    labels, count = ndimage.label(mask)
    if count == 0:
        return labels, 0
    parent = list(range(count + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for axis in range(mask.ndim):
        first = np.take(labels, 0, axis=axis)
        last = np.take(labels, -1, axis=axis)
        for a, b in zip(first[(first > 0) & (last > 0)], last[(first > 0) & (last > 0)]):
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(count + 1)])
    _, relabel = np.unique(roots, return_inverse=True)
    return relabel[labels], int(relabel.max())


def nodal_stats(rho: np.ndarray, grid: Grid, threshold: float = 10 * DEFAULT_RHO_FLOOR):
    """Nodes with ``rho < threshold``: ``(mask, fraction, face-connected periodic components)``."""
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    grid.check(rho)
    mask = rho < threshold
    _, count = _periodic_label(mask)
    return mask, float(mask.sum()) / mask.size, count


def compute_row(step: int, t: float, dt: float, psi: np.ndarray, rhs_value: np.ndarray,
                grid: Grid, rho_floor: float, alpha: float, rho=None,
                d2: np.ndarray | None = None, previous: DiagnosticsRow | None = None) -> DiagnosticsRow:
    amp = conformal_factor(psi)
    e = energy(psi, grid, rho_floor, rho=rho)
    wl2, wh1 = weighted_norms(psi, grid, alpha)
    _, frac, _ = nodal_stats(amp, grid, 10.0 * rho_floor)
    res_l2, res_linf = conformal_factor_residual(psi, rhs_value, grid, rho_floor)
    return DiagnosticsRow(
        step=step, t=t, dt=dt, energy=e, weighted_l2=wl2, weighted_h1=wh1,
        min_rho=float(amp.min()), max_rho=float(amp.max()), nodal_fraction=frac,
        resA_l2=res_l2, resA_linf=res_linf,
        monotonicity_flag=previous is None or e <= previous.energy * (1 + 1e-12) + 1e-300,
        dissipation=dissipation(psi, grid, rho_floor, rho=rho, d2=d2),
    )


def fill_energy_gaps(rows: list[DiagnosticsRow]) -> None:
    """Fill ``energy_gap`` in place once the trajectory is known (needs 3+ rows)."""
    if len(rows) < 3:
        return
    t = [r.t for r in rows]
    # repeated times (zero-length steps) make the difference undefined
    if np.any(np.diff(t) <= 0):
        return
    gaps = energy_identity_gap(t, [r.energy for r in rows], [r.dissipation for r in rows])
    for row, g in zip(rows, gaps):
        row.energy_gap = float(g)
