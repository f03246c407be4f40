"""Named property checks and acceptance criteria, runnable from the CLI.

Each check returns a ``CheckResult``; ``verify_suite`` prints one line per
check in a fixed order and maps the outcome to an exit code.
"""
from __future__ import annotations

import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import clifford, oracles
from .diagnostics import conformal_factor_residual, weighted_growth_constant, weighted_norms
from .dirac import conformal_factor, dirac_conformal, dirac_flat, dirac_squared, discrete_symbol, scalar_curvature
from .fieldgrid import Grid, diff_central, laplacian_flat, laplacian_wide, norms
from .flow import FlowConfig, IntegratorDiverged, cfl_dt, initial_data, rhs, run
from .io import csv_is_complete, read_diagnostics_csv, read_manifest
from .toy2d import ToyConfig, toy_run

RATIO_BAND = (3.5, 4.6)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _timed(name: str, fn: Callable[[], tuple[bool, str]], budget: float | None = None) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    if budget is not None and elapsed > budget:
        ok = False
        detail += f"; runtime {elapsed:.1f}s exceeds {budget:g}s"
    return CheckResult(name, ok, detail, elapsed)


def _ratios(values) -> list[float]:
    return [a / b for a, b in zip(values, values[1:])]


def _in_band(ratios) -> bool:
    return all(RATIO_BAND[0] <= r <= RATIO_BAND[1] for r in ratios)


# --- module invariants -------------------------------------------------------

def check_anticommutators() -> tuple[bool, str]:
    """Generator and module-action anticommutators (exact)."""
    worst_gen = 0.0
    for i, ei in enumerate(clifford.BASIS_VECTORS):
        for j, ej in enumerate(clifford.BASIS_VECTORS):
            anti = (ei * ej + ej * ei).to_array()
            target = np.zeros(8)
            target[0] = 2.0 * (i == j)
            worst_gen = max(worst_gen, float(np.abs(anti - target).max()))
    worst_act = 0.0
    for b in np.eye(4):
        psi = clifford.EvenSpinor.from_array(b)
        for i, ei in enumerate(clifford.BASIS_VECTORS):
            for j, ej in enumerate(clifford.BASIS_VECTORS):
                anti = (clifford.clifford_action(ei, clifford.clifford_action(ej, psi)).to_array()
                        + clifford.clifford_action(ej, clifford.clifford_action(ei, psi)).to_array())
                worst_act = max(worst_act, float(np.abs(anti + 2.0 * (i == j) * b).max()))
    ok = worst_gen <= 1e-12 and worst_act <= 1e-12
    return ok, f"generator err {worst_gen:.1e}, action err {worst_act:.1e}"


def check_structure_table() -> tuple[bool, str]:
    index, sign = oracles.symbolic_structure_table()
    worst = 0.0
    for i in range(8):
        for j in range(8):
            a = np.zeros(8)
            b = np.zeros(8)
            a[i] = b[j] = 1.0
            expected = np.zeros(8)
            expected[index[i, j]] = sign[i, j]
            worst = max(worst, float(np.abs(clifford.gp(a, b) - expected).max()))
    return worst <= 1e-12, f"64 blade products, max err {worst:.1e}"


def check_reverse_antiautomorphism(samples: int = 1000, seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((samples, 8))
    b = rng.standard_normal((samples, 8))
    lhs = clifford.rev(clifford.gp(a, b))
    rhs_ = clifford.gp(clifford.rev(b), clifford.rev(a))
    err = float(np.max(np.abs(lhs - rhs_) / np.maximum(np.abs(lhs), 1.0)))
    invol = float(np.abs(clifford.rev(clifford.rev(a)) - a).max())
    return err <= 1e-12 and invol == 0.0, f"rel err {err:.1e}, involution err {invol:.1e}"


def check_amplitude_identity(samples: int = 1000, seed: int = 2) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal((samples, 4))
    m = clifford.even_to_mv(psi)
    scalar = clifford.gp(m, clifford.rev(m))[..., 0]
    err = float(np.max(np.abs(scalar - conformal_factor(psi) ** 2) / scalar))
    return err <= 1e-12, f"rel err {err:.1e}"


def check_sandwich_grade(samples: int = 1000, seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    m = clifford.even_to_mv(rng.standard_normal((samples, 4)))
    v = clifford.vec_to_mv(rng.standard_normal((samples, 3)))
    out = clifford.gp(clifford.gp(m, v), clifford.rev(m))
    stray = float(np.abs(out[..., [0, 4, 5, 6, 7]]).max())
    return stray <= 1e-14 * max(1.0, float(np.abs(out).max())), f"non-vector part {stray:.1e}"


def check_stencils_annihilate_constants() -> tuple[bool, str]:
    g = Grid.cube(3, 12, 1.7)
    f = np.full(g.n + (4,), 0.731)
    worst = max(float(np.abs(diff_central(f, g, a)).max()) for a in range(3))
    worst = max(worst, float(np.abs(laplacian_flat(f, g)).max()))
    return worst <= 1e-13, f"max {worst:.1e}"


def check_dirac_symmetric(seed: int = 4) -> tuple[bool, str]:
    g = Grid.cube(3, 12, 2.0)
    rng = np.random.default_rng(seed)
    phi, chi = rng.standard_normal((2,) + g.n + (4,))
    a = float(np.sum(dirac_flat(phi, g) * chi))
    b = float(np.sum(phi * dirac_flat(chi, g)))
    err = abs(a - b) / max(abs(a), 1.0)
    return err <= 1e-12, f"<D phi, chi> - <phi, D chi> rel {err:.1e}"


def check_curvature_translation() -> tuple[bool, str]:
    g = Grid.cube(3, 12, 2 * np.pi)
    x, y, z = g.coords()
    rho = np.exp(0.3 * np.sin(x) * np.cos(2 * y) + 0.1 * np.sin(z))
    shifted = scalar_curvature(np.roll(rho, (3, -2, 5), (0, 1, 2)), g)
    moved = np.roll(scalar_curvature(rho, g), (3, -2, 5), (0, 1, 2))
    const = scalar_curvature(np.full(g.n, 1.7), g)
    ok = np.array_equal(shifted, moved) and not np.any(const)
    return ok, "bit-exact shift equivariance, zero on constants" if ok else "mismatch"


def check_gauge_vanishes_constant_rho() -> tuple[bool, str]:
    cfg_on = FlowConfig(n=(16, 16), length=(2.0, 2.0), gauge=True)
    cfg_off = FlowConfig(n=(16, 16), length=(2.0, 2.0), gauge=False)
    g = cfg_on.grid
    x, y = g.coords()
    psi = np.zeros(g.n + (4,))
    psi[..., 0] = np.cos(np.pi * x)
    psi[..., 1] = np.sin(np.pi * x)
    diff = float(np.abs(rhs(psi, cfg_on) - rhs(psi, cfg_off)).max())
    # |psi| = 1 only up to rounding, so log rho has gradients of order 1e-16
    return diff <= 1e-12, f"gauge contribution {diff:.1e} on |psi| = 1"


def check_weighted_monotone_alpha() -> tuple[bool, str]:
    g = Grid.cube(2, 32, 3.0)
    psi = initial_data("gaussian_bump", g)
    vals = [weighted_norms(psi, g, a) for a in (0.0, 1.0, 2.0, 4.0)]
    l2 = [v[0] for v in vals]
    h1 = [v[1] for v in vals]
    ok = all(a >= b for a, b in zip(l2, l2[1:])) and all(a >= b for a, b in zip(h1, h1[1:]))
    return ok, "weighted_l2 over alpha=0,1,2,4: " + ", ".join(f"{v:.4g}" for v in l2)


def check_constant_preset_no_nodes() -> tuple[bool, str]:
    res = run(FlowConfig(n=(16, 16), length=(2.0, 2.0), init="constant", t_end=1.0), max_steps=5)
    fracs = [r.nodal_fraction for r in res.rows]
    return all(f == 0 for f in fracs), f"nodal_fraction over {len(fracs)} rows"


INVARIANTS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("clifford.structure_table", check_structure_table),
    ("clifford.anticommutators", check_anticommutators),
    ("clifford.reverse_antiautomorphism", check_reverse_antiautomorphism),
    ("clifford.amplitude_identity", check_amplitude_identity),
    ("clifford.sandwich_grade1", check_sandwich_grade),
    ("fieldgrid.constants_annihilated", check_stencils_annihilate_constants),
    ("dirac.flat_symmetric", check_dirac_symmetric),
    ("dirac.curvature_translation", check_curvature_translation),
    ("flow.gauge_vanishes_constant_rho", check_gauge_vanishes_constant_rho),
    ("diagnostics.weighted_monotone_alpha", check_weighted_monotone_alpha),
    ("diagnostics.constant_preset_no_nodes", check_constant_preset_no_nodes),
]


# --- acceptance criteria -----------------------------------------------------

def criterion_clifford_core() -> tuple[bool, str]:
    ok1, d1 = check_structure_table()
    ok2, d2 = check_anticommutators()
    return ok1 and ok2, f"{d1}; {d2}"


def criterion_flat_identity(n: int = 32, seed: int = 5) -> tuple[bool, str]:
    g = Grid.cube(3, n, 2 * np.pi)
    f = np.random.default_rng(seed).standard_normal(g.n + (4,))
    err = float(np.abs(dirac_flat(dirac_flat(f, g), g) - laplacian_wide(f, g)).max())
    return err <= 1e-12, f"{n}^3 random field, max |D0 D0 f - wide Laplacian f| = {err:.2e}"


def covariance_differences(sizes=(32, 64, 128), length: float = 1.0) -> list[float]:
    """L2 norm of (form A - form B) for a smooth non-separable probe on 2D grids."""
    out = []
    for n in sizes:
        g = Grid.cube(2, n, length)
        x, y = g.coords()
        w = 2 * np.pi / length
        rho = 1 + 0.3 * np.sin(w * x)
        phi = np.zeros(g.n + (4,))
        phi[..., 0] = np.cos(w * y) * np.cos(w * x)
        phi[..., 1] = np.sin(w * (x + y))
        a = dirac_conformal(None, phi, g, "A", rho=rho)
        b = dirac_conformal(None, phi, g, "B", rho=rho)
        out.append(norms(a - b, g)[0])
    return out


def criterion_conformal_covariance() -> tuple[bool, str]:
    d = covariance_differences()
    r = _ratios(d)
    return _in_band(r), "||A-B|| = " + ", ".join(f"{v:.3e}" for v in d) + \
        "; ratios " + ", ".join(f"{v:.3f}" for v in r)


def toy_convergence(sizes=(64, 128, 256), t_end: float = 0.5):
    return {n: toy_run(ToyConfig(n=n, L=6.0, t_end=t_end)) for n in sizes}


def criterion_toy_model() -> tuple[bool, str]:
    runs = toy_convergence()
    errs = [runs[n].rows[-1]["linf_err"] for n in sorted(runs)]
    r = _ratios(errs)
    res128 = runs[128]
    g = res128.grid
    c = g.n[0] // 2
    x, y = g.coords(centered=True)
    assert x[c, c] == 0.0 and y[c, c] == 0.0
    center = float(res128.u[c, c])
    mass_err = max(abs(row["mass"] - math.pi) for res in runs.values() for row in res.rows)
    ok = _in_band(r) and abs(center - 1 / 3) <= 1e-3 and mass_err <= 1e-6
    return ok, (f"Linf errs {', '.join(f'{e:.3e}' for e in errs)}; ratios {', '.join(f'{v:.3f}' for v in r)}; "
                f"u(0,0,0.5)={center:.6f}; max |mass - pi| = {mass_err:.1e}")


def symbol_sweep(n: int = 256, ks=(8, 16, 32)) -> list[dict]:
    """Ratio ``||D^2 psi_k|| / ||rho^-2 lambda_h(k) psi_k||`` for plane waves ``sin(k x)``."""
    g = Grid.cube(2, n, 2 * np.pi)
    x, y = g.coords()
    rho = np.exp(0.6 * np.sin(x + 0.3) * np.cos(y))
    rows = []
    for k in ks:
        psi = np.zeros(g.n + (4,))
        psi[..., 0] = np.sin(k * x)
        lam = discrete_symbol(k, g.h[0])
        d2 = dirac_squared(psi, g, rho=rho)
        ratio = norms(d2, g)[0] / norms(psi * (lam / rho ** 2)[..., None], g)[0]
        rows.append(dict(k=k, lambda_h=lam, ratio=ratio, deviation=abs(ratio - 1.0),
                         rho_min=float(rho.min()), rho_max=float(rho.max())))
    return rows


def criterion_principal_symbol() -> tuple[bool, str]:
    rows = symbol_sweep()
    dev = [r["deviation"] for r in rows]
    in_range = 0.5 <= rows[0]["rho_min"] and rows[0]["rho_max"] <= 2.0
    ok = in_range and dev[-1] <= 0.10 and all(a > b for a, b in zip(dev, dev[1:]))
    return ok, "k=" + ", ".join(f"{r['k']}: ratio {r['ratio']:.5f}" for r in rows)


def criterion_parallel_spinor(steps: int = 100) -> tuple[bool, str]:
    worst = 0.0
    for eps in (0.0, 0.25):
        for gauge in (False, True):
            cfg = FlowConfig(n=(16, 16, 16), length=(2.0, 2.0, 2.0), init="constant",
                             init_amp=1.3, epsilon=eps, gauge=gauge, t_end=1e3)
            res = run(cfg, max_steps=steps)
            psi0 = initial_data("constant", cfg.grid, amp=1.3)
            assert res.state.step == steps
            worst = max(worst, float(np.abs(res.state.psi - psi0).max()))
    return worst <= 1e-12, f"16^3, {steps} steps x 4 (epsilon, gauge) combos, max drift {worst:.1e}"


def energy_gap_study(sizes=(16, 32, 64), t_end: float = 0.2) -> list[float]:
    """Largest interior energy-identity gap for frozen ``rho = 1`` under (h, dt ~ h^2) refinement."""
    out = []
    for n in sizes:
        cfg = FlowConfig(n=(n, n), length=(2 * np.pi, 2 * np.pi), t_end=t_end, init="constant")
        x, y = cfg.grid.coords()
        psi = np.zeros(cfg.grid.n + (4,))
        psi[..., 0] = np.sin(x) + 0.5 * np.cos(2 * y)
        res = run(cfg, rho=1.0, psi0=psi)
        out.append(max(abs(r.energy_gap) for r in res.rows[1:-1]))
    return out


def criterion_energy_identity() -> tuple[bool, str]:
    gaps = energy_gap_study()
    orders = [math.log2(r) for r in _ratios(gaps)]
    return all(o >= 2 for o in orders), "gaps " + ", ".join(f"{g:.3e}" for g in gaps) + \
        "; observed orders " + ", ".join(f"{o:.2f}" for o in orders)


def residual_trend(preset: str, sizes=(32, 64), steps: int = 10) -> list[list[float]]:
    series = []
    for n in sizes:
        cfg = FlowConfig(n=(n, n), length=(3.0, 3.0), init=preset, t_end=1.0)
        res = run(cfg, max_steps=steps)
        series.append([r.resA_l2 for r in res.rows])
    return series


def criterion_conformal_factor_residual() -> tuple[bool, str]:
    g = Grid.cube(3, 12, 2.0)
    psi = initial_data("constant", g, amp=0.8)
    cfg = FlowConfig(n=g.n, length=g.length)
    l2, linf = conformal_factor_residual(psi, rhs(psi, cfg), g)
    ok = l2 <= 1e-10 and linf <= 1e-10
    parts = [f"constant residual L2 {l2:.1e}"]
    for preset in ("nodal_ring", "gaussian_bump"):
        coarse, fine = residual_trend(preset)
        finite = all(math.isfinite(v) for v in coarse + fine)
        ok = ok and finite
        parts.append(f"{preset}: mean resA_l2 32^2 {np.mean(coarse):.3e} -> 64^2 {np.mean(fine):.3e}"
                     f" (ratio {np.mean(coarse) / np.mean(fine):.2f}, finite={finite})")
    return ok, "; ".join(parts)


def criterion_nodal_robustness(step_budget: int = 200) -> tuple[bool, str]:
    base = FlowConfig(n=(128, 128), length=(3.0, 3.0), init="nodal_ring", rho_floor=1e-6,
                      t_end=0.05, alpha=2.0)
    psi0 = initial_data("nodal_ring", base.grid)
    dt0 = cfl_dt(psi0, base)
    projection = f"initial CFL dt {dt0:.2e} projects ~{base.t_end / dt0:.1e} steps to t_end={base.t_end}"
    with tempfile.TemporaryDirectory() as tmp:
        cfg = FlowConfig(**{**base.echo(), "outdir": tmp})
        try:
            res = run(cfg, max_steps=step_budget)
        except IntegratorDiverged as exc:
            status = read_manifest(Path(tmp) / "manifest.txt")["status"]
            return False, f"non-finite field at step {exc.step}, node {exc.node} (status {status}); {projection}"
        rows = read_diagnostics_csv(Path(tmp) / "diagnostics.csv")
        complete = csv_is_complete(tmp) and len(rows) == len(res.rows)
    finite = bool(np.all(np.isfinite(res.state.psi)))
    growth = float(np.abs(res.state.psi).max()) / float(np.abs(psi0).max())
    reached = res.state.t >= base.t_end * (1 - 1e-12)
    detail = (f"finite={finite}, max|psi| ratio {growth:.3f}, csv complete={complete}, "
              f"nodal_fraction recorded in {len(res.rows)} rows; reached t={res.state.t:.3e} "
              f"after the {res.state.step}-step budget; {projection}")
    return finite and growth <= 2 and complete and reached, detail


def criterion_weighted_estimates(steps: int = 20) -> tuple[bool, str]:
    ok = True
    parts = []
    for preset in ("constant", "gaussian_bump", "nodal_ring"):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = FlowConfig(n=(48, 48), length=(3.0, 3.0), init=preset, alpha=2.0, t_end=1.0,
                             outdir=tmp)
            res = run(cfg, max_steps=steps)
            c = weighted_growth_constant([r.t for r in res.rows], [r.weighted_l2 for r in res.rows],
                                         [r.weighted_h1 for r in res.rows])
            reported = float(read_manifest(Path(tmp) / "manifest.txt")["sup_growth_constant"])
        finite = bool(np.all(np.isfinite(c))) and math.isfinite(reported)
        ok = ok and finite and len(c) == steps + 1
        parts.append(f"{preset}: sup C = {reported:.4g} (finite at all {len(c)} rows: {finite})")
    return ok, "; ".join(parts)


def _determinism_run(outdir: str, threads: str) -> dict[str, bytes]:
    old = os.environ.get("SPINFLOW_THREADS")
    os.environ["SPINFLOW_THREADS"] = threads
    try:
        cfg = FlowConfig(n=(32, 32), length=(3.0, 3.0), init="random_smooth", seed=12345,
                         epsilon=0.05, gauge=True, t_end=1.0, snapshot_every=5, outdir=outdir)
        run(cfg, max_steps=20)
    finally:
        if old is None:
            os.environ.pop("SPINFLOW_THREADS", None)
        else:
            os.environ["SPINFLOW_THREADS"] = old
    files = sorted(p for p in Path(outdir).iterdir() if p.suffix in (".csv", ".sghf"))
    return {p.name: p.read_bytes() for p in files}


def criterion_determinism() -> tuple[bool, str]:
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        one = _determinism_run(a, "1")
        eight = _determinism_run(b, "8")
    ok = one.keys() == eight.keys() and all(one[k] == eight[k] for k in one) and "diagnostics.csv" in one
    return ok, f"{len(one)} files compared byte-for-byte (threads 1 vs 8)"


CRITERIA: list[tuple[str, Callable[[], tuple[bool, str]], float | None]] = [
    ("C1 clifford core", criterion_clifford_core, 1.0),
    ("C2 discrete flat identity", criterion_flat_identity, 5.0),
    ("C3 conformal covariance order", criterion_conformal_covariance, 30.0),
    ("C4 toy model vs closed form", criterion_toy_model, 120.0),
    ("C5 principal symbol", criterion_principal_symbol, 30.0),
    ("C6 parallel-spinor stationarity", criterion_parallel_spinor, None),
    ("C7 frozen-metric energy identity", criterion_energy_identity, None),
    ("C8 conformal-factor residual", criterion_conformal_factor_residual, None),
    ("C9 nodal robustness", criterion_nodal_robustness, None),
    ("C10 weighted estimates", criterion_weighted_estimates, None),
    ("C11 determinism", criterion_determinism, None),
]


def run_criterion(name: str) -> CheckResult:
    for cname, fn, budget in CRITERIA:
        if cname == name or cname.split()[0] == name:
            return _timed(cname, fn, budget)
    raise KeyError(name)


def verify_suite(stream=None, include_criteria: bool = True) -> int:
    """Run every invariant and acceptance check; exit code 0 iff all pass."""
    stream = stream or sys.stdout
    results = [_timed(name, fn) for name, fn in INVARIANTS]
    for r in results:
        print(r.line(), file=stream, flush=True)
    if include_criteria:
        for name, fn, budget in CRITERIA:
            r = _timed(name, fn, budget)
            results.append(r)
            print(r.line(), file=stream, flush=True)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=stream)
    return 1 if failed else 0
