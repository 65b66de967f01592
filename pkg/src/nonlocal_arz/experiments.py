"""Config-driven experiments, named presets and parameter sweeps.

An experiment is a plain mapping (TOML or JSON on disk) with a ``kind`` and
the sections ``flux``, ``kernel``, ``grid``, ``initial``, ``solver`` and
``options``. :func:`run_experiment` executes it, writes CSV/JSON artifacts
and a versioned ``summary.json`` whose ``checks`` carry a pass/fail verdict
with the measured value and its limit.
"""

from __future__ import annotations

import copy
import json
import math
import os
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import io
from .errors import InvalidParameterError, NonlocalARZError
from .flux import make_pipes_flux
from .kernels import (
    compute_rho_tilde,
    nonlocal_invariants,
    truncated_exponential_kernel,
    uniform_kernel,
    zero_kernel,
)
from .phase_plane import (
    Tracer,
    decay_envelope,
    mediant,
    mediant_lower_bound,
    verify_comparison,
)
from .presets import PRESETS, preset_fields, preset_state, read_initial_csv
from .solver import (
    ModelVariant,
    Snapshot,
    SolverConfig,
    confirm_gradient_blowup,
    effective_kernel,
    normalize_state,
    run,
    stable_dt,
    step,
)
from .state import Grid, compute_F0_G0, state_from_psi, validate_assumptions
from .thresholds import (
    classify_initial_data,
    eta_constant_from_data,
    sigma_closed_form_values,
    solve_threshold_ode,
)

SCHEMA_VERSION = 1
KINDS = (
    "blowup-local", "global-nonlocal", "threshold-figure", "consistency", "custom",
    "sigma-oracle", "eta-ordering", "nonlocal-identity", "max-principles", "mediant",
)
THREADS_ENV = "NONLOCAL_ARZ_THREADS"

# limits of the acceptance checks
MP_RHO_LOW = -1e-6
MP_RHO_HIGH = 1e-3
MP_U = 1e-3
MP_PSI = 1e-3
MASS_DRIFT = 1e-8
BLOWUP_MARGIN = 0.5
GRAD_GROWTH = 5.0
ENVELOPE_SLACK = 5e-2
COMPARISON_TOL = 1e-2
F_SLACK = 5e-2
LATTICE_TOL = 1e-12
CURVE_TOL = 1e-6
IDENTITY_TOL = 1e-5


def blowup_time_bound(u0_prime_min: float) -> float:
    """Riccati bound 1/|min u0'| on the shock formation time of local ARZ."""
    if not u0_prime_min < 0.0:
        raise InvalidParameterError("blowup bound needs a negative velocity slope")
    return 1.0 / abs(u0_prime_min)


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    kind: str
    name: str = "experiment"
    variant: str = "NonlocalARZ"
    flux: Dict[str, Any] = field(default_factory=lambda: {"J": 1.0})
    kernel: Dict[str, Any] = field(default_factory=lambda: {"kind": "uniform"})
    grid: Dict[str, Any] = field(default_factory=lambda: {"x_left": -10.0, "x_right": 30.0, "N": 2000})
    initial: Dict[str, Any] = field(default_factory=lambda: {"preset": "gaussian-bump", "params": {}})
    solver: Dict[str, Any] = field(default_factory=dict)
    seeds: List[float] = field(default_factory=list)
    options: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    resolution_scale: float = 1.0
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown experiment kind {self.kind!r}; have {KINDS}")
        ModelVariant.parse(self.variant)
        preset = self.initial.get("preset")
        if preset is not None and preset not in PRESETS:
            raise InvalidParameterError(f"unknown preset {preset!r}")
        if self.resolution_scale <= 0:
            raise InvalidParameterError("resolution_scale must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise InvalidParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(**copy.deepcopy(d))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        text = path.read_bytes()
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = _toml_loads(text.decode())
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    # builders
    def build_flux(self):
        return make_pipes_flux(float(self.flux.get("J", 1.0)), self.flux.get("rho_M"))

    def build_kernel(self):
        k = dict(self.kernel)
        kind = k.pop("kind", "uniform")
        if kind == "uniform":
            return uniform_kernel()
        if kind == "zero":
            return zero_kernel()
        if kind == "truncated-exponential":
            return truncated_exponential_kernel(float(k.get("eps", 1.0)),
                                                float(k.get("cutoff", math.inf)),
                                                float(k.get("amplitude", 1.0)))
        raise InvalidParameterError(f"unknown kernel kind {kind!r}")

    def build_grid(self, grid: Optional[dict] = None) -> Grid:
        g = grid or self.grid
        N = int(round(int(g["N"]) * self.resolution_scale))
        return Grid(float(g["x_left"]), float(g["x_right"]), N)

    def build_solver(self, grid: Grid, solver: Optional[dict] = None) -> SolverConfig:
        s = dict(self.solver if solver is None else solver)
        coef = s.pop("D_max_dx", None)
        if coef is not None:
            s["D_max"] = float(coef) / grid.dx
        return SolverConfig(**s)

    def build_state(self, grid: Grid, variant=None, initial: Optional[dict] = None):
        flux = self.build_flux()
        variant = ModelVariant.parse(variant or self.variant)
        kern = effective_kernel(variant, self.build_kernel())
        init = initial or self.initial
        if "csv" in init:
            return read_initial_csv(init["csv"], flux, kern)
        return preset_state(init["preset"], grid, flux, kern, **dict(init.get("params", {})))

    def check_domain(self, grid: Grid, t_end: float, initial: Optional[dict] = None):
        """Initial support plus t_end times the maximal speed (1) must stay interior."""
        init = initial or self.initial
        if "preset" not in init:
            return
        p = {k: v for k, v in init.get("params", {}).items() if k != "target_min_du"}
        rho, _ = preset_fields(init["preset"], grid, **p)
        live = np.nonzero(rho > 1e-12)[0]
        if live.size and grid.x[live[-1]] + t_end >= grid.x_right:
            raise InvalidParameterError(
                f"support reaches x={grid.x[live[-1]]:.3g}; with t_end={t_end} the right "
                f"boundary {grid.x_right} is too close")


def _toml_loads(text: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


# ---------------------------------------------------------------- results


def check(passed: bool, value=None, limit=None, **extra) -> dict:
    out = {"passed": bool(passed), "value": value, "limit": limit}
    out.update(extra)
    return out


@dataclass
class ExperimentResult:
    status: int
    summary: dict
    out_dir: Optional[Path]

    @property
    def checks(self) -> dict:
        return self.summary.get("checks", {})

    @property
    def passed(self) -> bool:
        return self.status == 0


class _Artifacts:
    def __init__(self, out_dir: Optional[Path]):
        self.dir = out_dir
        self.files: List[str] = []

    def write(self, fn: Callable, name: str, *args):
        if self.dir is None:
            return
        p = fn(self.dir / name, *args)
        self.files.append(str(Path(p).relative_to(self.dir)))


def _mp_checks(report, rho_M: float, prefix: str = "") -> dict:
    lo, hi = report.rho_range
    ulo, uhi = report.u_range
    return {
        prefix + "rho_bounds": check(lo >= MP_RHO_LOW and hi <= rho_M + MP_RHO_HIGH,
                                     [lo, hi], [MP_RHO_LOW, rho_M + MP_RHO_HIGH]),
        prefix + "u_bounds": check(ulo >= -MP_U and uhi <= 1.0 + MP_U, [ulo, uhi], [-MP_U, 1.0 + MP_U]),
        prefix + "psi_monotone": check(report.min_dpsi >= -MP_PSI, report.min_dpsi, -MP_PSI),
        prefix + "mass_drift": check(report.mass_drift <= MASS_DRIFT, report.mass_drift, MASS_DRIFT),
    }


def _assumptions(state, flux):
    rep = compute_F0_G0(state, rho_M=flux.rho_M)
    summ = validate_assumptions(state, rep)
    return rep, {"passed": summ.passed, "flags": summ.flags, "failed": summ.failed,
                 "sup_F0": rep.sup_F0, "sup_G0": rep.sup_G0, "mass": rep.mass,
                 "notes": summ.notes}


# ---------------------------------------------------------------- kinds


def _kind_sigma_oracle(cfg: ExperimentConfig, art: _Artifacts):
    checks, results = {}, {}
    tol = float(cfg.options.get("tol", CURVE_TOL))
    for J in cfg.options.get("J", [1, 2, 3]):
        model = make_pipes_flux(float(J))
        t0 = time.perf_counter()
        curve = solve_threshold_ode(cfg.options.get("curve", "sigma"), model, 0.0)
        r = np.linspace(0.0, model.rho_c, 5001)
        err = float(np.max(np.abs(curve(r) - sigma_closed_form_values(model, r))))
        checks[f"J={J:g}"] = check(err <= tol, err, tol,
                                   runtime_s=time.perf_counter() - t0,
                                   start_sensitivity=curve.start_sensitivity)
        art.write(io.write_curve, f"{curve.kind}_J{J:g}.csv", curve)
    return checks, results


def _kind_eta_ordering(cfg: ExperimentConfig, art: _Artifacts):
    checks, results = {}, {}
    for J in cfg.options.get("J", [1, 2, 3]):
        model = make_pipes_flux(float(J))
        sigma = solve_threshold_ode("sigma", model)
        r = np.linspace(0.0, model.rho_c, 4001)
        s_vals = sigma(r)
        prev = s_vals
        worst, mono = -math.inf, True
        for C in cfg.options.get("C_eta", [0.0, 0.1, 1.0]):
            eta = solve_threshold_ode("eta", model, float(C))
            e = eta(r)
            ok = np.isfinite(e)
            worst = max(worst, float(np.max(e[ok] - s_vals[ok])))
            mono = mono and bool(np.all(e[ok] <= prev[ok]))
            prev = np.where(ok, e, -np.inf)
        checks[f"eta_below_sigma_J={J:g}"] = check(worst <= 0.0, worst, 0.0)
        checks[f"eta_monotone_in_C_J={J:g}"] = check(mono)
    fx = cfg.options.get("fixture", {"J": 2.0, "C_eta": 3.0})
    model = make_pipes_flux(float(fx["J"]))
    eta = solve_threshold_ode("eta", model, float(fx["C_eta"]))
    rs = eta.rho_star
    checks["rho_star_fixture"] = check(rs is not None and rs < model.rho_c, rs, model.rho_c,
                                       C_eta=float(fx["C_eta"]))
    art.write(io.write_curve, "eta_fixture.csv", eta)
    return checks, results


def _kind_threshold_figure(cfg: ExperimentConfig, art: _Artifacts):
    model = cfg.build_flux()
    sigma = solve_threshold_ode("sigma", model)
    art.write(io.write_curve, "sigma.csv", sigma)
    stars, results = [], {"curves": []}
    r = np.linspace(0.0, model.rho_c, 4001)
    below = True
    for C in cfg.options.get("C_eta", [0.5, 3.0]):
        eta = solve_threshold_ode("eta", model, float(C))
        art.write(io.write_curve, f"eta_C{float(C):g}.csv", eta)
        stars.append(eta.rho_star)
        e = eta(r)
        ok = np.isfinite(e)
        below = below and bool(np.all(e[ok] <= sigma(r)[ok]))
        results["curves"].append(eta.metadata())
    n_star = sum(s is not None for s in stars)
    checks = {
        "one_curve_bounded": check(n_star < len(stars), len(stars) - n_star, ">= 1"),
        "one_curve_with_rho_star": check(n_star >= 1, n_star, ">= 1"),
        "eta_below_sigma": check(below),
    }
    return checks, results


def _kind_nonlocal_identity(cfg: ExperimentConfig, art: _Artifacts):
    """max |d(rho_tilde)/dx + rho| with rho_tilde from the trapezoid suffix.

    The derivative is taken with fourth-order central differences so the
    measured gap is the quadrature error of rho_tilde itself.
    """
    errs = []
    for scale in (1, 2):
        grid = cfg.build_grid()
        grid = Grid(grid.x_left, grid.x_right, grid.N * scale)
        rho, _ = preset_fields(cfg.initial["preset"], grid, **cfg.initial.get("params", {}))
        nl = compute_rho_tilde(rho, uniform_kernel(), grid)
        d = _d4(nl.rho_tilde, grid.dx)
        errs.append(float(np.max(np.abs(d + rho)[2:-2])))
        inv = nonlocal_invariants(nl, rho, uniform_kernel(), grid)
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
    checks = {
        "identity": check(errs[0] <= IDENTITY_TOL, errs[0], IDENTITY_TOL, N=cfg.build_grid().N),
        "refinement_order2": check(ratio >= 2.0, ratio, 2.0, observed_order=math.log2(ratio)),
        "rho_tilde_bounds": check(all(inv.values()), inv),
    }
    return checks, {"errors": errs}


def _d4(q, dx):
    d = np.gradient(q, dx, edge_order=2)
    d[2:-2] = (q[:-4] - 8.0 * q[1:-3] + 8.0 * q[3:-1] - q[4:]) / (12.0 * dx)
    return d


def _kind_max_principles(cfg: ExperimentConfig, art: _Artifacts):
    flux = cfg.build_flux()
    grid = cfg.build_grid()
    solver = cfg.build_solver(grid)
    kernel = cfg.build_kernel()
    cases = cfg.options.get("presets", [cfg.initial])
    variants = cfg.options.get("variants", [v.value for v in ModelVariant])
    jobs = []
    for i, init in enumerate(cases):
        cfg.check_domain(grid, solver.t_end, init)
        for v in variants:
            jobs.append((i, init, v))

    def one(job):
        i, init, v = job
        kern = effective_kernel(ModelVariant.parse(v), kernel)
        st = normalize_state(cfg.build_state(grid, v, init), v, kern, flux)
        rep, assum = _assumptions(st, flux)
        report, _ = run(st, v, kernel, flux, solver)
        return i, v, report, assum

    checks, results = {}, {"runs": []}
    for i, v, report, assum in _pool_map(one, jobs):
        tag = f"{i}:{cfg.options.get('labels', {}).get(str(i), (cases[i].get('preset')))}/{v}/"
        checks[tag + "assumptions"] = check(assum["passed"], assum["failed"], "[]")
        checks[tag + "completed"] = check(report.outcome == "completed", report.outcome, "completed")
        checks.update(_mp_checks(report, flux.rho_M, tag))
        results["runs"].append({"case": i, "variant": v, "report": _brief(report)})
    return checks, results


def _brief(report) -> dict:
    d = report.to_dict()
    d.pop("series", None)
    return d


def _kind_blowup_local(cfg: ExperimentConfig, art: _Artifacts):
    flux = cfg.build_flux()
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    solver = cfg.build_solver(grid)
    variant = ModelVariant.parse(cfg.variant)
    st0 = normalize_state(cfg.build_state(grid), variant, effective_kernel(variant, kernel), flux)
    du = np.gradient(st0.u, grid.dx, edge_order=2)
    i0 = int(np.argmin(du))
    bound = blowup_time_bound(float(du[i0]))
    verdict = confirm_gradient_blowup(lambda g: cfg.build_state(g), grid, variant, kernel, flux,
                                      solver, factor=int(cfg.options.get("refine", 2)),
                                      min_ratio=float(cfg.options.get("min_ratio", 1.5)))
    margin = float(cfg.options.get("margin", BLOWUP_MARGIN))
    td = verdict.t_detect
    checks = {
        "outcome": check(verdict.coarse.outcome == "gradient-blowup", verdict.coarse.outcome,
                         "gradient-blowup"),
        "confirmed": check(verdict.confirmed, verdict.ratio, float(cfg.options.get("min_ratio", 1.5))),
        "t_detect": check(td is not None and td <= bound + margin, td, bound + margin),
    }
    results = {"u0_prime_min": float(du[i0]), "x0": float(grid.x[i0]),
               "rho0_at_x0": float(st0.rho[i0]), "riccati_bound": bound,
               "D_max": solver.D_max, "verdict": verdict.to_dict(),
               "report": _brief(verdict.coarse)}
    art.write(lambda p, r: io.write_json(p, r.to_dict()), "report.json", verdict.coarse)
    if verdict.coarse.pre_blowup_state is not None:
        art.write(io.write_snapshots, "pre_blowup.csv",
                  [Snapshot.of(st0), Snapshot.of(verdict.coarse.pre_blowup_state)])
    return checks, results


def _kind_global(cfg: ExperimentConfig, art: _Artifacts, custom: bool = False):
    flux = cfg.build_flux()
    kernel = cfg.build_kernel()
    grid = cfg.build_grid()
    solver = cfg.build_solver(grid)
    variant = ModelVariant.parse(cfg.variant)
    kern = effective_kernel(variant, kernel)
    cfg.check_domain(grid, solver.t_end)
    st = normalize_state(cfg.build_state(grid), variant, kern, flux)
    rep, assum = _assumptions(st, flux)
    checks = {"assumptions": check(assum["passed"], assum["failed"], "[]")}
    results = {"assumptions": assum}

    curve = None
    if not custom or cfg.options.get("thresholds", False):
        if variant.is_second_order:
            C = float(cfg.options.get("C_eta", eta_constant_from_data(rep, kern)))
        else:
            C = 0.0
        curve = solve_threshold_ode("eta", flux, C)
        cls = classify_initial_data(st, curve)
        results["C_eta"] = C
        results["classification"] = {"subcritical": cls.subcritical, "margin": cls.margin,
                                     "n_supercritical": cls.n_supercritical}
        checks["subcritical"] = check(cls.subcritical, cls.n_supercritical, 0)
        art.write(io.write_curve, "eta.csv", curve)

    tracer = Tracer(cfg.seeds, flux, variant.is_second_order) if cfg.seeds else None
    report, snaps = run(st, variant, kern, flux, solver, callback=tracer)
    checks.update(_mp_checks(report, flux.rho_M))
    checks["completed"] = check(report.outcome == "completed", report.outcome, "completed",
                                t_final=report.t_final)
    results["report"] = _brief(report)
    art.write(lambda p, r: io.write_json(p, r.to_dict()), "report.json", report)
    if solver.snapshot_every:
        art.write(io.write_snapshots, "snapshots.csv", snaps)

    if not custom:
        g0 = report.initial_grad_rho
        checks["gradient_growth"] = check(report.max_grad_rho <= GRAD_GROWTH * g0,
                                          report.max_grad_rho, GRAD_GROWTH * g0)
        rho0 = float(np.max(st.rho))
        env = float(decay_envelope(rho0, report.t_final, flux, st.mass, kern.w0))
        rmax = float(np.max(report.final_state.rho))
        checks["decay_envelope"] = check(rmax <= env + ENVELOPE_SLACK, rmax, env + ENVELOPE_SLACK)
        if variant.is_second_order:
            F0 = float(rep.sup_F0)
            lim = F0 * (1.0 + F_SLACK)
            checks["F_transport"] = check(report.max_F <= lim, report.max_F, lim, sup_F0=F0)

    if tracer is not None:
        traces = tracer.finish(report.outcome)
        results["traces"] = []
        for k, tr in enumerate(traces):
            art.write(io.write_trace, f"trace_{k}.csv", tr, curve)
            entry = {"x0": tr.x0, "reason": tr.reason, "discrepancy": tr.discrepancy}
            if tr.t.size == 0:
                checks[f"seed_{k}_traced"] = check(False, tr.reason, "traced")
                continue
            if curve is not None:
                cmp = verify_comparison(tr, curve, float(cfg.options.get("comparison_tol", COMPARISON_TOL)))
                entry["comparison"] = cmp.to_dict()
                checks[f"seed_{k}_comparison"] = check(cmp.passed, cmp.max_margin, cmp.tol)
            if variant == ModelVariant.NONLOCAL_ARZ and kern.kind == "uniform" and not custom:
                env = decay_envelope(tr.rho[0], tr.t, flux, st.mass, kern.w0)
                gap = float(np.max(tr.rho - env))
                checks[f"seed_{k}_envelope"] = check(gap <= ENVELOPE_SLACK, gap, ENVELOPE_SLACK)
                checks[f"seed_{k}_monotone"] = check(tr.monotone_decay(1e-3))
            results["traces"].append(entry)
        art.write(io.write_phase_plane, "phase_plane.csv", traces)
    return checks, results


def _kind_consistency(cfg: ExperimentConfig, art: _Artifacts):
    """Step degenerate variants side by side and compare the fields."""
    flux = cfg.build_flux()
    grid = cfg.build_grid()
    kernel = cfg.build_kernel()
    n_steps = int(cfg.options.get("steps", 100))
    order = int(cfg.solver.get("order", 2))
    cfl = float(cfg.solver.get("cfl", 0.4))
    init = cfg.initial
    params = dict(init.get("params", {}))
    rho0, psi0 = preset_fields(init["preset"], grid, **params)
    zero_psi = np.zeros_like(psi0)
    pairs = {
        "psi0=0: NonlocalARZ vs FirstOrderNonlocal":
            (("NonlocalARZ", kernel, zero_psi), ("FirstOrderNonlocal", kernel, zero_psi)),
        "slowdown=1: NonlocalARZ(w=0) vs LocalARZ":
            (("NonlocalARZ", zero_kernel(), psi0), ("LocalARZ", kernel, psi0)),
        "both: FirstOrderNonlocal(w=0) vs LWR":
            (("FirstOrderNonlocal", zero_kernel(), zero_psi), ("LWR", kernel, zero_psi)),
    }
    checks, results = {}, {}
    for label, (a, b) in pairs.items():
        sa = state_from_psi(rho0, a[2], flux, effective_kernel(ModelVariant.parse(a[0]), a[1]), grid)
        sb = state_from_psi(rho0, b[2], flux, effective_kernel(ModelVariant.parse(b[0]), b[1]), grid)
        worst = 0.0
        for _ in range(n_steps):
            dt = stable_dt(sa, a[0], a[1], flux, cfl)
            sa = step(sa, a[0], a[1], flux, dt, order)
            sb = step(sb, b[0], b[1], flux, dt, order)
            diff = max(float(np.max(np.abs(sa.rho - sb.rho))),
                       float(np.max(np.abs(sa.u - sb.u))),
                       float(np.max(np.abs(sa.psi - sb.psi))))
            worst = max(worst, diff)
        checks[label] = check(worst <= LATTICE_TOL, worst, LATTICE_TOL, steps=n_steps)
    return checks, results


def _kind_mediant(cfg: ExperimentConfig, art: _Artifacts):
    rng = np.random.default_rng(cfg.seed)
    n = int(cfg.options.get("draws", 10_000))
    A = rng.uniform(-10.0, 10.0, size=(n, 2))
    B = 10.0 ** rng.uniform(-3.0, 3.0, size=(n, 2))
    fails = 0
    for (a0, a1), (b0, b1) in zip(A, B):
        if mediant_lower_bound(a0, a1, b0, b1) > mediant(a0, a1, b0, b1):
            fails += 1
    return {"no_failures": check(fails == 0, fails, 0, draws=n, seed=cfg.seed)}, {}


HANDLERS = {
    "sigma-oracle": _kind_sigma_oracle,
    "eta-ordering": _kind_eta_ordering,
    "threshold-figure": _kind_threshold_figure,
    "nonlocal-identity": _kind_nonlocal_identity,
    "max-principles": _kind_max_principles,
    "blowup-local": _kind_blowup_local,
    "global-nonlocal": _kind_global,
    "custom": lambda cfg, art: _kind_global(cfg, art, custom=True),
    "consistency": _kind_consistency,
    "mediant": _kind_mediant,
}


# ---------------------------------------------------------------- driver


def run_experiment(config, out_dir=None) -> ExperimentResult:
    """Run one experiment; exit status 0 = all checks pass, 1 = a check failed, 2 = error."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    out = Path(out_dir or config.output_dir) if (out_dir or config.output_dir) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    art = _Artifacts(out)
    t0 = time.perf_counter()
    summary = {"schema_version": SCHEMA_VERSION, "name": config.name, "kind": config.kind,
               "config": config.to_dict()}
    try:
        checks, results = HANDLERS[config.kind](config, art)
        status = 0 if all(c["passed"] for c in checks.values()) else 1
        summary.update(status="pass" if status == 0 else "fail", checks=checks, results=results)
    except NonlocalARZError as exc:
        status = 2
        summary.update(status="error", checks={},
                       error={"type": type(exc).__name__, "message": str(exc),
                              **{k: v for k, v in vars(exc).items() if not k.startswith("_")},
                              "traceback": traceback.format_exc(limit=4)})
    summary["runtime_s"] = time.perf_counter() - t0
    summary["artifacts"] = art.files
    if out is not None:
        io.write_json(out / "summary.json", summary)
        summary["artifacts"].append("summary.json")
    return ExperimentResult(status, summary, out)


def max_workers(default: Optional[int] = None) -> int:
    env = os.environ.get(THREADS_ENV)
    cpu = os.cpu_count() or 1
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(f"{THREADS_ENV} must be an integer") from None
    return default or cpu


def _pool_map(fn, items):
    items = list(items)
    n = min(max_workers(), len(items)) or 1
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def run_sweep(configs, out_root=None) -> List[ExperimentResult]:
    """Run independent experiments concurrently, one output directory each."""
    configs = [c if isinstance(c, ExperimentConfig) else ExperimentConfig.from_dict(c) for c in configs]

    def one(ic):
        i, c = ic
        out = Path(out_root) / f"{i:03d}_{c.name}" if out_root else None
        return run_experiment(c, out)

    return _pool_map(one, enumerate(configs))


# ---------------------------------------------------------------- presets

_PLATEAU = {"preset": "smoothed-plateau",
            "params": {"amplitude": 0.4, "left": -1.0, "right": 1.0, "width_left": 1.25,
                       "width_right": 0.5, "psi_slope": 0.1}}

MAX_PRINCIPLE_CASES = [
    {"preset": "gaussian-bump", "params": {"amplitude": 0.5, "width": 1.5, "psi_slope": 0.1}},
    {"preset": "gaussian-bump", "params": {"amplitude": 0.8, "width": 1.0, "psi_slope": 0.0}},
    {"preset": "smoothed-plateau", "params": {"amplitude": 0.6, "width_left": 0.5, "psi_slope": 0.05}},
    {"preset": "riemann-smoothed", "params": {"rho_left": 0.2, "rho_right": 0.5, "psi_slope": 0.05}},
    {"preset": "riemann-smoothed", "params": {"rho_left": 0.6, "rho_right": 0.3, "psi_slope": 0.02,
                                              "psi_jump": 0.05}},
]

NAMED: Dict[str, dict] = {
    "sigma-oracle": {"kind": "sigma-oracle", "options": {"J": [1, 2, 3]}},
    "eta-degeneration": {"kind": "sigma-oracle", "options": {"J": [1, 2, 3], "curve": "eta"}},
    "eta-ordering": {"kind": "eta-ordering",
                     "options": {"J": [1, 2, 3], "C_eta": [0.0, 0.1, 1.0],
                                 "fixture": {"J": 2.0, "C_eta": 3.0}}},
    "threshold-figure": {"kind": "threshold-figure", "flux": {"J": 2.0},
                         "options": {"C_eta": [0.5, 3.0]}},
    "nonlocal-identity": {"kind": "nonlocal-identity",
                          "grid": {"x_left": -10.0, "x_right": 10.0, "N": 4000},
                          "initial": {"preset": "gaussian-bump",
                                      "params": {"amplitude": 0.5, "width": 1.0}}},
    "max-principles": {"kind": "max-principles",
                       "grid": {"x_left": -20.0, "x_right": 30.0, "N": 2000},
                       "solver": {"t_end": 10.0},
                       "options": {"presets": MAX_PRINCIPLE_CASES}},
    "blowup-local": {"kind": "blowup-local", "variant": "LocalARZ",
                     "grid": {"x_left": -10.0, "x_right": 20.0, "N": 2000},
                     "initial": {"preset": "gaussian-bump",
                                 "params": {"amplitude": 0.5, "psi_slope": 0.1,
                                            "target_min_du": -0.5}},
                     "solver": {"t_end": 5.0, "D_max_dx": 0.15}},
    "global-nonlocal": {"kind": "global-nonlocal", "variant": "NonlocalARZ",
                        "grid": {"x_left": -38.0, "x_right": 72.0, "N": 2200},
                        "initial": _PLATEAU, "solver": {"t_end": 50.0},
                        "seeds": [-3.0, -2.25, -1.5, -0.75, 0.0, 0.5, 1.0, 1.5]},
    "comparison": {"kind": "global-nonlocal", "variant": "NonlocalARZ",
                   "grid": {"x_left": -38.0, "x_right": 72.0, "N": 2200},
                   "initial": _PLATEAU, "solver": {"t_end": 50.0},
                   "seeds": [-3.5, -2.5, -1.75, -1.0, -0.25, 0.25, 0.75, 1.25]},
    "comparison-first-order": {"kind": "global-nonlocal", "variant": "FirstOrderNonlocal",
                               "grid": {"x_left": -38.0, "x_right": 42.0, "N": 1600},
                               "initial": {"preset": "smoothed-plateau",
                                           "params": {"amplitude": 0.4}},
                               "solver": {"t_end": 20.0},
                               "seeds": [-3.0, -2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0]},
    "F-transport": {"kind": "global-nonlocal", "variant": "NonlocalARZ",
                    "grid": {"x_left": -38.0, "x_right": 40.0, "N": 1560},
                    "initial": {"preset": "smoothed-plateau",
                                "params": {"amplitude": 0.3, "psi_slope": 0.2}},
                    "solver": {"t_end": 20.0}},
    "consistency": {"kind": "consistency",
                    "grid": {"x_left": -10.0, "x_right": 30.0, "N": 1000},
                    "initial": {"preset": "gaussian-bump",
                                "params": {"amplitude": 0.5, "width": 1.5, "psi_slope": 0.1}},
                    "options": {"steps": 100}},
    "mediant": {"kind": "mediant", "options": {"draws": 10_000}},
}


def named_config(preset: str, /, **overrides) -> ExperimentConfig:
    try:
        d = copy.deepcopy(NAMED[preset])
    except KeyError:
        raise InvalidParameterError(f"unknown named preset {preset!r}; have {sorted(NAMED)}") from None
    d.setdefault("name", preset)
    d.update(overrides)
    return ExperimentConfig.from_dict(d)
