"""Flat and conformal Dirac operators on periodic spinor fields.

The metric induced by a spinor field ``psi`` is ``g = rho^2 g0`` with
``rho = |psi|``.  Every division by ``rho`` goes through the clamped copy
``max(rho, rho_floor)`` so that evaluations stay finite on nodal sets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import clifford
from .fieldgrid import Grid, diff_central, gradient_flat, laplacian_flat, pointwise_sq

DEFAULT_RHO_FLOOR = 1e-6


def conformal_factor(psi: np.ndarray) -> np.ndarray:
    """Pointwise amplitude of a ``(..., 4)`` spinor field."""
    return np.sqrt(np.sum(np.asarray(psi, dtype=float) ** 2, axis=-1))


def clamp(rho: np.ndarray, rho_floor: float) -> np.ndarray:
    if rho_floor <= 0:
        raise ValueError(f"rho_floor must be positive, got {rho_floor}")
    return np.maximum(rho, rho_floor)


def _metric_rho(psi_metric, rho, grid: Grid, rho_floor: float) -> np.ndarray:
    # explicit rho (scalar or field) overrides the amplitude of psi_metric
    if rho is None:
        rho = conformal_factor(psi_metric)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.n)
    return clamp(rho, rho_floor)


@dataclass(frozen=True)
class ConformalGeometry:
    rho: np.ndarray
    rho_clamped: np.ndarray
    log_rho: np.ndarray
    grad_rho: np.ndarray
    scalar_curvature: np.ndarray
    volume_weight: np.ndarray
    rho_floor: float


def conformal_geometry(psi: np.ndarray, grid: Grid,
                       rho_floor: float = DEFAULT_RHO_FLOOR) -> ConformalGeometry:
    rho = conformal_factor(psi)
    rc = clamp(rho, rho_floor)
    return ConformalGeometry(
        rho=rho,
        rho_clamped=rc,
        log_rho=np.log(rc),
        grad_rho=gradient_flat(rc, grid),
        scalar_curvature=scalar_curvature(rc, grid),
        volume_weight=rho ** grid.dim,
        rho_floor=rho_floor,
    )


def frame(psi: np.ndarray, grid: Grid, k: int) -> np.ndarray:
    """Induced frame vector ``e_k = rho R E_k R~ = psi E_k psi~ / rho`` as a ``(..., 3)`` field.

    Raises ``NodalPointError`` if ``psi`` vanishes at any node.
    """
    grid.check(psi)
    rho = conformal_factor(psi)
    if np.any(rho == 0.0):
        idx = tuple(int(i) for i in np.argwhere(rho == 0.0)[0])
        raise clifford.NodalPointError(f"frame undefined at nodal point {idx}")
    m = clifford.even_to_mv(psi)
    ek = np.zeros(8)
    ek[1 + k] = 1.0
    out = clifford.gp(clifford.gp(m, ek), clifford.rev(m))
    return out[..., 1:4] / rho[..., None]


def dirac_flat(phi: np.ndarray, grid: Grid) -> np.ndarray:
    """``D0 phi = sum_k c(E_k) d_k phi`` with central differences."""
    out = np.zeros_like(phi, dtype=float)
    for k in range(grid.dim):
        out += clifford.act(k, diff_central(phi, grid, k))
    return out


def _dirac_a(rc: np.ndarray, phi: np.ndarray, grid: Grid) -> np.ndarray:
    return dirac_flat(rc[..., None] * phi, grid) / (rc ** 2)[..., None]


def _dirac_b(rc: np.ndarray, phi: np.ndarray, grid: Grid) -> np.ndarray:
    lead = dirac_flat(phi, grid) / rc[..., None]
    return lead + clifford.act_vector(gradient_flat(rc, grid), phi) / (rc ** 2)[..., None]


def dirac_conformal(psi_metric: np.ndarray | None, phi: np.ndarray, grid: Grid,
                    form: str = "A", rho_floor: float = DEFAULT_RHO_FLOOR,
                    rho=None) -> np.ndarray:
    """Dirac operator of ``g = rho^2 g0`` applied to ``phi``.

    Form ``"A"`` is ``rho^-2 D0(rho phi)``; form ``"B"`` is the expanded
    ``rho^-1 D0 phi + rho^-2 c(grad rho) phi``.  ``rho`` may be passed
    directly (a constant or a scalar field) in place of ``psi_metric``.
    """
    rc = _metric_rho(psi_metric, rho, grid, rho_floor)
    if form == "A":
        return _dirac_a(rc, phi, grid)
    if form == "B":
        return _dirac_b(rc, phi, grid)
    raise ValueError(f"unknown form {form!r}, expected 'A' or 'B'")


def dirac_squared(psi: np.ndarray, grid: Grid, rho_floor: float = DEFAULT_RHO_FLOOR,
                  rho=None) -> np.ndarray:
    """``D_g(D_g psi)`` with one clamped ``rho`` frozen for both applications."""
    rc = _metric_rho(psi, rho, grid, rho_floor)
    return _dirac_a(rc, _dirac_a(rc, psi, grid), grid)


def scalar_curvature(rho: np.ndarray, grid: Grid) -> np.ndarray:
    """Scalar curvature of ``rho^2 g0`` for a flat periodic ``g0``; ``rho`` must be clamped."""
    log_rho = np.log(rho)
    lap = laplacian_flat(log_rho, grid)
    if grid.dim == 2:
        return 2.0 * lap / rho ** 2
    grad_sq = pointwise_sq(gradient_flat(log_rho, grid), grid)
    return (4.0 * lap - 2.0 * grad_sq) / rho ** 2


def conformal_laplacian_scalar(rho: np.ndarray, f: np.ndarray, grid: Grid) -> np.ndarray:
    """Nonnegative Laplace-Beltrami operator of ``rho^2 g0`` on scalar ``f``; ``rho`` clamped.

    In 3D this is ``rho^-2 (Delta0 f - <grad log rho, grad f>)``; the drift
    term carries a factor ``dim - 2`` and drops out in 2D.
    """
    drift = np.sum(gradient_flat(np.log(rho), grid) * gradient_flat(f, grid), axis=-1)
    return (laplacian_flat(f, grid) - (grid.dim - 2) * drift) / rho ** 2


def discrete_symbol(k: float, h: float, stencil: str = "wide") -> float:
    """Fourier symbol of the nonnegative second-difference along one axis."""
    if stencil == "wide":
        return (np.sin(k * h) / h) ** 2
    if stencil == "compact":
        return (2.0 - 2.0 * np.cos(k * h)) / h ** 2
    raise ValueError(f"unknown stencil {stencil!r}")
