"""Experiment registry: dyadic sweeps, checks and the deterministic runner.

Each experiment kind has a default configuration, a point function that
computes one ``(lhs, rhs, extras)`` record for one sweep scale, and a
finaliser that turns the records into checks. Targets come from
:mod:`displab.harness.exponents`; tolerances come from the configuration.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from displab.harness import exponents as ex
from displab.harness.fitting import fit_loglog

__all__ = [
    "Check",
    "SweepResult",
    "EXPERIMENTS",
    "default_config",
    "fingerprint",
    "run_experiment",
]


@dataclass(frozen=True)
class Check:
    """One asserted tolerance: ``abs`` (|value - target| <= tol), ``le`` or ``ge``."""

    name: str
    value: float
    target: float
    tol: float
    mode: str = "abs"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.mode == "abs":
            return abs(self.value - self.target) <= self.tol
        if self.mode == "le":
            return self.value <= self.target + self.tol
        if self.mode == "ge":
            return self.value >= self.target - self.tol
        raise ValueError(f"unknown check mode {self.mode!r}")

    def line(self) -> str:
        op = {"abs": "~", "le": "<=", "ge": ">="}[self.mode]
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.6g} {op} {self.target:.6g} (tol {self.tol:g})"


@dataclass
class SweepResult:
    kind: str
    config: dict
    seed: int
    records: list[tuple[float, float, float, float]]
    slope: float | None
    stderr: float | None
    r2: float | None
    fingerprint: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    dropped: tuple[float, ...] = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
            "records": [list(r) for r in self.records],
            "slope": self.slope,
            "stderr": self.stderr,
            "r2": self.r2,
            "reliable": None if self.r2 is None else self.r2 >= 0.9,
            "dropped": list(self.dropped),
            "checks": [dict(asdict(c), passed=c.passed) for c in self.checks],
            "passed": self.passed,
            "notes": self.notes,
        }
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _num(v) -> float:
    """Config numbers may be written as ``"inf"``."""
    return math.inf if isinstance(v, str) and v.lower() in ("inf", "infinity") else float(v)


def fingerprint(kind: str, config: dict, seed: int) -> str:
    doc = json.dumps(_jsonable({"kind": kind, "config": config, "seed": seed}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode()).hexdigest()


# --------------------------------------------------------------------------
# point functions: (config, scale, seed, index) -> (lhs, rhs, extras)


def _pt_embedding(cfg, scale, seed, index):
    from displab.fields import lp_norm, make_grid, random_wavepackets
    from displab.modspace import (ModNormSpec, WindowFamily, box_decompose, check_embeddings,
                                  modulation_norm, partition_residual)

    g = make_grid(cfg["d"], cfg["n"], cfg["L"])
    rng = np.random.default_rng([seed, index])
    fields = [random_wavepackets(g, rng, kmax=scale) for _ in range(cfg["fields_per_scale"])]
    rep = check_embeddings(fields, budget=cfg["budget"])
    recon = 0.0
    m22 = []
    for f in fields:
        pieces = box_decompose(f)
        total = sum(p.samples for p in pieces.values())
        recon = max(recon, float(np.max(np.abs(total - f.samples)) / np.max(np.abs(f.samples))))
        m22.append(modulation_norm(f, ModNormSpec(0, 2, 2)) / lp_norm(f, 2))
    worst = max(rep.worst.values())
    extras = {
        "partition_residual": partition_residual(g, WindowFamily(g.d)),
        "reconstruction": recon,
        "m22_min": min(m22),
        "m22_max": max(m22),
        "worst": rep.worst,
        "violations": len(rep.violations),
    }
    return worst, cfg["budget"], extras


def _pt_fixed_time(cfg, scale, seed, index):
    from displab.fields import make_grid
    from displab.propagator import fixed_time_probe, fixed_time_ratio

    g = make_grid(1, cfg["n"], cfg["L"])
    probe = fixed_time_probe(g)
    r = fixed_time_ratio(_num(cfg["p"]), _num(cfg["q"]), cfg["s"], scale, probe)
    return r, 1.0, {}


def _pt_knapp_aniso(global_window: bool):
    def fn(cfg, scale, seed, index):
        from displab.knapp import aniso_unit_grid, tube_lower_bound

        eps = scale
        if global_window:
            T = eps**-2
            g = aniso_unit_grid(eps, cfg["d"], t_max=T)
            interval = (-T, T)
        else:
            g = aniso_unit_grid(eps, cfg["d"])
            interval = (-1.0, 1.0)
        lb = tube_lower_bound(eps, g, _num(cfg["p"]), _num(cfg["q"]), interval, steps=cfg["steps"])
        return lb, 1.0, {"n": g.n, "L": g.L}

    return fn


def _pt_knapp_high(cfg, scale, seed, index):
    from displab.knapp import aniso_high_grid, make_aniso_high
    from displab.modspace import ModNormSpec, modulation_norm, sobolev_lp_norm

    g = aniso_high_grid(scale, cfg["d"])
    f = make_aniso_high(scale, g)
    p = _num(cfg["p"])
    lhs = sobolev_lp_norm(f, cfg["s"], p)
    rhs = modulation_norm(f, ModNormSpec(0.0, p, _num(cfg["q"])))
    return lhs, rhs, {"n": g.n}


def _pt_knapp_iso(cfg, scale, seed, index):
    from displab.fields import lp_norm
    from displab.knapp import isotropic_grid, make_isotropic, refocus_lower_bound

    g = isotropic_grid(scale, cfg["d"])
    lb = refocus_lower_bound(scale, g, _num(cfg["p"]), _num(cfg["q"]), steps=cfg["steps"])
    rhs = 1.0
    if cfg.get("r") is not None:
        rhs = lp_norm(make_isotropic(scale, g), _num(cfg["r"]))
    return lb, rhs, {"n": g.n}


def _pt_strichartz_m41(cfg, scale, seed, index):
    from displab.fields import spacetime_norm
    from displab.knapp import aniso_high_grid, make_aniso_high
    from displab.modspace import ModNormSpec, modulation_norm
    from displab.propagator import evolve_interval

    g = aniso_high_grid(scale, 1)
    f = make_aniso_high(scale, g)
    p = _num(cfg["p"])
    u = evolve_interval(f, -1.0, 1.0, cfg["steps"])
    lhs = spacetime_norm(u, p, p)
    rhs = modulation_norm(f, ModNormSpec(cfg["s"], p, _num(cfg["q"])))
    return lhs, rhs, {}


def windows_to_refocus(lam: float, extra: int = 4) -> list[tuple[float, float]]:
    """Dyadic time windows ``[1 - 2^{-j}, 1 - 2^{-j-1}]`` accumulating at ``t = 1``.

    The last window has length below ``lam^{-2} 2^{-extra}``, well inside
    the refocusing time scale.
    """
    J = int(math.ceil(math.log2(lam**2))) + extra
    edges = [0.0] + [1 - 2.0**-j for j in range(1, J + 1)] + [1.0]
    return list(zip(edges[:-1], edges[1:]))


def windowed_spacetime_norm(f, windows, steps: int, p: float, q: float) -> float:
    """``||U(t) f||_{L^p_t L^q_x}`` over a union of windows, one slice in memory at a time."""
    from displab.fields import lp_norm
    from displab.propagator import evolve_free

    acc = 0.0
    for a, b in windows:
        ts = np.linspace(a, b, steps)
        vals = np.array([lp_norm(evolve_free(f, t), q) ** p for t in ts])
        acc += float(np.trapezoid(vals, ts))
    return acc ** (1.0 / p)


def _pt_strichartz_mod(cfg, scale, seed, index):
    from displab.knapp import isotropic_grid, make_isotropic
    from displab.modspace import ModNormSpec, modulation_norm

    g = isotropic_grid(scale, 1)
    f = make_isotropic(scale, g)
    p = _num(cfg["p"])
    lhs = windowed_spacetime_norm(f, windows_to_refocus(scale), cfg["steps"], p, p)
    rhs = modulation_norm(f, ModNormSpec(cfg["s"], p, _num(cfg["q"])))
    return lhs, rhs, {"n": g.n}


def _pt_mp1(cfg, scale, seed, index):
    from displab.fields import Field, lp_norm, make_grid, spacetime_norm
    from displab.modspace import WindowFamily
    from displab.propagator import evolve_interval

    k = int(cfg["ks"][index])
    g = make_grid(1, cfg["n"], cfg["L"])
    win = WindowFamily(1).window(g, (k,))
    box = Field.from_fourier(g, win.astype(complex))
    p = _num(cfg["p"])
    lhs = spacetime_norm(evolve_interval(box, -1.0, 1.0, cfg["steps"]), p, p)
    return lhs, lp_norm(box, p), {"k": k}


def _pt_kernel(cfg, scale, seed, index):
    from displab.propagator import kernel_l1_profile

    d = cfg["d"]
    centre = [cfg["box_center"]] * d
    times = [c * scale**2 for c in cfg["time_factors"]]
    prof = kernel_l1_profile(scale, centre, times, cfg["n_per_lambda"])
    worst = max(prof, key=lambda s: s.ratio)
    return worst.l1, worst.bound, {
        "ratios": [s.ratio for s in prof],
        "stable": all(s.stable for s in prof),
    }


def _decoupling_setup(cfg, R):
    from displab.decoupling import DecouplingSetup, builtin_phase

    phase = None
    lam = None
    if cfg.get("phase"):
        phase = builtin_phase(cfg["phase"], cfg["d"], **cfg.get("phase_params", {}))
        lam = cfg["lam_factor"] * R
    return DecouplingSetup(
        p=_num(cfg["p"]), d=cfg["d"], phase=phase, lam=lam, N_w=cfg["N_w"],
        spacing=cfg["spacing"], tail=cfg["tail"], refine_check=cfg["refine_check"],
    )


def _pt_decouple(cfg, scale, seed, index):
    from displab.decoupling import CapSet, cap_density, decoupling_ratio, random_density, unit_density

    R = scale
    setup = _decoupling_setup(cfg, R)
    kind = cfg["density"]
    if kind == "random":
        vals = []
        for j in range(cfg["draws"]):
            rng = np.random.default_rng([seed, index, j])
            vals.append(decoupling_ratio(setup, random_density(R, rng, cfg["d"]), R))
        res = vals
    elif kind == "unit":
        res = [decoupling_ratio(setup, unit_density(cfg["d"]), R)]
    elif kind == "cap":
        caps = CapSet(R, cfg["d"])
        idx = caps.indices()[len(caps.indices()) // 2]
        res = [decoupling_ratio(setup, cap_density(caps, idx), R)]
    else:
        raise ValueError(f"unknown density {kind!r}")
    D = float(np.mean([r.D for r in res]))
    plain = float(np.mean([r.plain for r in res]))
    dec = float(np.mean([r.decoupled for r in res]))
    changes = [r.refinement_change for r in res if r.refinement_change is not None]
    return plain, dec, {
        "D": D,
        "alpha": res[0].alpha,
        "n_caps": res[0].n_caps,
        "refinement_change": max(changes) if changes else None,
        "single_cap_defect": abs(D * R ** res[0].alpha - 1) if kind == "cap" else None,
    }


def _pt_rescale(cfg, scale, seed, index):
    from displab.decoupling import builtin_phase, parabolic_rescale, sample_domain, verify_phase_conditions

    d = cfg["d"]
    ph = builtin_phase(cfg["phase"], d, **cfg.get("phase_params", {}))
    rho = scale
    xi0 = np.asarray(cfg["xi0"], dtype=float)[:d]
    new = parabolic_rescale(ph, xi0, rho)
    t, x, xi = sample_domain(d, cfg["samples"], seed)
    gx = (0, 1) + (0,) * (d - 1)
    b2 = (2,) + (0,) * (d - 1)
    before = float(np.max(np.abs(ph.deriv(gx, b2)(t, x, xi))))
    after = float(np.max(np.abs(new.deriv(gx, b2)(t, x, xi))))
    old_rep = verify_phase_conditions(ph, cfg["c_par"], cfg["A"], cfg["N"], n_samples=cfg["samples"], seed=seed)
    new_rep = verify_phase_conditions(new, cfg["c_par"], cfg["A"], cfg["N"], n_samples=cfg["samples"], seed=seed)
    # quadratic phases are fixed points of the rescaling
    fixed = 0.0
    for name in ("par",) + (("hyp",) if d == 2 else ()):
        q = builtin_phase(name, d)
        fixed = max(fixed, float(np.max(np.abs(parabolic_rescale(q, np.zeros(d), rho)(t, x, xi) - q(t, x, xi)))))
    return after, before, {
        "C": rho * after / before if before else 0.0,
        "old": old_rep.deviations(),
        "new": new_rep.deviations(),
        "new_passed": new_rep.all_passed,
        "fixed_point_error": fixed,
    }


def _pt_approx(cfg, scale, seed, index):
    from displab.decoupling import approximation_error, builtin_phase

    ph = builtin_phase(cfg["phase"], 1, **cfg.get("phase_params", {}))
    lam = scale
    K = lam ** cfg["K_exponent"]
    zbar = [c * lam for c in cfg["zbar_over_lam"]]
    r = approximation_error(ph, lam, K, zbar, p=_num(cfg["p"]), N_w=cfg["N_w"], delta=cfg["delta"])
    return r.error, 1.0, {"K": K, "eig_min": r.eig_min, "eig_max": r.eig_max}


def _nls_datum(cfg, amplitude):
    from displab.fields import gaussian, make_grid

    g = make_grid(1, cfg["n"], cfg["L"])
    return gaussian(g, cfg["width"]).scale(amplitude)


def _pt_nls_picard(cfg, scale, seed, index):
    from displab.nls import NlsRun, homogeneity_error, picard_series, splitstep_solve, sup_l2_distance

    f = _nls_datum(cfg, scale)
    T, steps, M = cfg["T"], cfg["steps"], cfg["M_max"]
    stack = picard_series(f, M, T, steps, cfg["sign"])
    k = cfg["split_refine"]
    u = splitstep_solve(NlsRun(f, cfg["sign"], T, T / ((steps - 1) * k), record_every=k))
    partial = stack.picard_sum(M)
    lhs = sup_l2_distance(u, partial)
    rhs = sup_l2_distance(u, np.zeros_like(partial))
    even = max(float(np.max(np.abs(a.array()))) for m, a in stack.A.items() if m % 2 == 0) if M > 1 else 0.0
    hom = homogeneity_error(f, 3, 0.5, T, steps, cfg["sign"]) if M >= 3 else 0.0
    return lhs, rhs, {"homogeneity": hom, "even_max": even, "flags": stack.flags}


def _pt_nls_identity(cfg, scale, seed, index):
    from displab.nls import NlsRun, higher_iterates, identity_residual, solve_v, splitstep_solve, sup_l2_distance

    f = _nls_datum(cfg, scale)
    T, steps, n, sign = cfg["T"], cfg["steps"], cfg["n_iterates"], cfg["sign"]
    stack = higher_iterates(f, n, T, steps, sign)
    residuals = [identity_residual(stack, j, sign) for j in range(2, n + 1)]
    u = splitstep_solve(NlsRun(f, sign, T, T / ((steps - 1) * cfg["split_refine"]), record_every=cfg["split_refine"]))
    lead = sum(s.array() for s in stack.u[: cfg["leading"]])
    lhs = sup_l2_distance(u, lead)
    rhs = sup_l2_distance(u, np.zeros_like(lead))
    sol, stack = solve_v(f, n, T, steps, sign, stack=stack)
    full = sum(s.array() for s in stack.u) + sol.v.array()
    split_gap = sup_l2_distance(u, full)
    sol2, st2 = solve_v(f, n - 1, T, steps, sign)
    alt = sum(s.array() for s in st2.u[: n - 1]) + sol2.v.array()
    consistency = sup_l2_distance(sol.v, alt - sum(s.array() for s in stack.u)) / rhs
    return lhs, rhs, {
        "identity_residuals": residuals,
        "split_gap": split_gap,
        "consistency": consistency,
        "small_data": sol.small_data and sol2.small_data,
        "converged": sol.converged and sol2.converged,
    }


def _pt_nls_monitor(cfg, scale, seed, index):
    from displab.nls import NlsRun, energy_monitors, splitstep_solve, sup_l2_distance
    from displab.propagator import evolve_interval

    f = _nls_datum(cfg, cfg["amplitude"])
    T, sign = cfg["T"], cfg["sign"]
    ref_every = cfg["reference_refine"]
    steps = int(scale)
    ratio = ref_every // steps
    ref = splitstep_solve(NlsRun(f, sign, T, T / ref_every, record_every=ratio))
    u = splitstep_solve(NlsRun(f, sign, T, T / steps))
    err = sup_l2_distance(u, ref)
    mon = energy_monitors(u)
    mass_dev = float(np.max(np.abs(mon.mass - mon.mass[0])) / mon.mass[0])
    e_tot = mon.E
    energy_dev = float(np.max(np.abs(e_tot - e_tot[0])) / e_tot[0])
    w = evolve_interval(f, 0.0, T, u.nt)
    dm = energy_monitors(u, w)
    return err, 1.0, {
        "mass_dev": mass_dev,
        "energy_dev": energy_dev,
        "finite": dm.finite,
        "gronwall_C": dm.gronwall_constant,
        "sup_M_plus_E": float(np.max(dm.M + dm.E)),
    }


# --------------------------------------------------------------------------
# finalisers: (cfg, records, extras, fit) -> (checks, notes)


def _slope_checks(cfg, fit, target, name="slope", mode="abs"):
    return [Check(name, fit.slope if fit else math.nan, target, cfg["tolerance"], mode)]


def _fin_embedding(cfg, recs, extras, fit):
    checks = [
        Check("partition residual", max(e["partition_residual"] for e in extras), 0.0, 1e-12, "le"),
        Check("reconstruction", max(e["reconstruction"] for e in extras), 0.0, 1e-10, "le"),
        Check("M22/L2 upper", max(e["m22_max"] for e in extras), cfg["m22_factor"], 0.0, "le"),
        Check("M22/L2 lower", min(e["m22_min"] for e in extras), 1 / cfg["m22_factor"], 0.0, "ge"),
        Check("embedding violations", sum(e["violations"] for e in extras), 0, 0, "le"),
    ]
    worst: dict[str, float] = {}
    for e in extras:
        for k, v in e["worst"].items():
            worst[k] = max(worst.get(k, 0.0), v)
    notes = [f"worst constant {k}: {v:.4f}" for k, v in sorted(worst.items())]
    return checks, notes


def _fin_fixed_time(cfg, recs, extras, fit):
    target = ex.fixed_time_exponent(_num(cfg["p"]), 1)
    return _slope_checks(cfg, fit, target), []


def _fin_knapp(key):
    def fin(cfg, recs, extras, fit):
        b = ex.theoretical_exponents(max(2.0, _num(cfg["p"])), _num(cfg["q"]), _num(cfg.get("r") or 2), cfg["d"])
        target = b.knapp[key]
        # slopes are measured in eps itself: the tube norm decays like eps^slope
        return _slope_checks(cfg, fit, target), []

    return fin


def _fin_knapp_high(cfg, recs, extras, fit):
    return _slope_checks(cfg, fit, cfg["s"]), ["target is the derivative weight of the Sobolev norm"]


def _fin_knapp_iso(cfg, recs, extras, fit):
    p, q, d = _num(cfg["p"]), _num(cfg["q"]), cfg["d"]
    if cfg.get("r") is None:
        target = ex.theoretical_exponents(p, q, 2.0, d).knapp["isotropic"]
        return _slope_checks(cfg, fit, target), []
    b = ex.theoretical_exponents(p, q, _num(cfg["r"]), d)
    checks = [Check("unboundedness slope", fit.slope, cfg["min_slope"], 0.0, "ge")]
    notes = [f"admissible pair: {b.admissible}", f"predicted slope {b.knapp['corollary']:.4f}"]
    return checks, notes


def _fin_squeeze(cfg, recs, extras, fit):
    lo, hi = ex.smoothing_window(_num(cfg["p"]), _num(cfg["q"]), 1)
    lo, hi = lo - cfg["s"], hi - cfg["s"]
    checks = [
        Check("slope above necessary exponent", fit.slope, lo, cfg["tolerance"], "ge"),
        Check("slope below sufficient exponent", fit.slope, hi, cfg["tolerance"], "le"),
    ]
    return checks, [f"squeeze window [{lo:.4f}, {hi:.4f}]"]


def _fin_mp1(cfg, recs, extras, fit):
    ratios = [r[3] for r in recs]
    spread = max(ratios) / min(ratios)
    return [Check("max/min per-window ratio", spread, cfg["max_spread"], 0.0, "le")], []


def _fin_kernel(cfg, recs, extras, fit):
    worst = max(max(e["ratios"]) for e in extras)
    checks = [
        Check("kernel L1 / bound", worst, cfg["bound_factor"] * 2 ** cfg["d"], 0.0, "le"),
        Check("refinement stable", float(all(e["stable"] for e in extras)), 1.0, 0.0, "ge"),
    ]
    return checks, []


def _fin_decouple(cfg, recs, extras, fit):
    Ds = [e["D"] for e in extras]
    Rs = [r[0] for r in recs]
    dfit = fit_loglog(Rs, Ds, min_points=3, drop_outlier=False) if len(Rs) >= 3 else None
    checks = []
    notes = [f"D(R) = {', '.join(f'{d:.4f}' for d in Ds)}"]
    if dfit is not None:
        notes.append(f"slope of D(R): {dfit.slope:.4f} (r2 {dfit.r2:.3f})")
        checks.append(Check("D(R) growth slope", dfit.slope, 0.0, cfg["tolerance"], "le"))
        if cfg["density"] == "unit" and fit is not None:
            alpha = extras[0]["alpha"]
            checks.append(Check("plain/decoupled slope vs alpha", fit.slope, alpha, cfg["tolerance"], "abs"))
    if cfg["density"] == "cap":
        checks.append(Check("single-cap defect", max(e["single_cap_defect"] for e in extras), 0.0, 1e-10, "le"))
    ch = [e["refinement_change"] for e in extras if e["refinement_change"] is not None]
    if ch:
        checks.append(Check("lattice refinement change", max(ch), 0.0, 0.05, "le"))
    return checks, notes


def _fin_rescale(cfg, recs, extras, fit):
    C = max(e["C"] for e in extras)
    checks = [
        Check("contraction constant C", C, cfg["max_C"], 0.0, "le"),
        Check("quadratic fixed point", max(e["fixed_point_error"] for e in extras), 0.0, 1e-10, "le"),
    ]
    worst_growth = -math.inf
    for rec, e in zip(recs, extras):
        rho = rec[0]
        for k, v in e["new"].items():
            if k in ("margin", "grad_t"):
                continue
            worst_growth = max(worst_growth, v - (e["old"][k] + cfg["max_C"] / rho))
    checks.append(Check("deviation <= previous + C/rho", worst_growth, 0.0, 0.0, "le"))
    if fit is not None:
        checks.append(Check("contraction slope", fit.slope, ex.RESCALING_GAIN, cfg["tolerance"], "abs"))
    return checks, []


def _fin_approx(cfg, recs, extras, fit):
    errs = [r[3] for r in recs]
    dec = all(b < a for a, b in zip(errs, errs[1:]))
    lo = min(e["eig_min"] for e in extras)
    hi = max(e["eig_max"] for e in extras)
    C = cfg["eig_C"]
    checks = [
        Check("error strictly decreasing", float(dec), 1.0, 0.0, "ge"),
        Check("eigenvalue lower", lo, 1 / C, 0.0, "ge"),
        Check("eigenvalue upper", hi, C, 0.0, "le"),
    ]
    return checks, [f"errors {', '.join(f'{e:.3e}' for e in errs)}"]


def _fin_nls_picard(cfg, recs, extras, fit):
    target = ex.picard_remainder_exponent(cfg["M_max"])
    checks = _slope_checks(cfg, fit, target, "series remainder slope")
    checks.append(Check("homogeneity A_3(f/2) = A_3(f)/8", max(e["homogeneity"] for e in extras), 0.0, 1e-8, "le"))
    checks.append(Check("even terms vanish", max(e["even_max"] for e in extras), 0.0, 0.0, "le"))
    notes = sorted({f for e in extras for f in e["flags"]})
    return checks, notes


def _fin_nls_identity(cfg, recs, extras, fit):
    target = ex.iterate_remainder_exponent(cfg["leading"])
    checks = _slope_checks(cfg, fit, target, "leading-order remainder slope")
    checks += [
        Check("identity residual", max(max(e["identity_residuals"]) for e in extras), 0.0, 1e-6, "le"),
        Check("splitstep = sum u^j + v", max(e["split_gap"] for e in extras), 0.0, 1e-4, "le"),
        Check("n vs n-1 consistency", max(e["consistency"] for e in extras), 0.0, 1e-6, "le"),
        Check("small data", float(all(e["small_data"] and e["converged"] for e in extras)), 1.0, 0.0, "ge"),
    ]
    return checks, []


def _fin_nls_monitor(cfg, recs, extras, fit):
    checks = _slope_checks(cfg, fit, -ex.STRANG_ORDER, "Strang error slope")
    finest = extras[-1]
    sups = [e["sup_M_plus_E"] for e in extras]
    checks += [
        Check("mass conservation", finest["mass_dev"], 0.0, 1e-8, "le"),
        Check("energy conservation", finest["energy_dev"], 0.0, 1e-6, "le"),
        Check("monitors finite", float(all(e["finite"] for e in extras)), 1.0, 0.0, "ge"),
        Check("sup(M+E) stable under refinement", (max(sups) - min(sups)) / max(sups), 0.0, 1e-2, "le"),
    ]
    notes = [f"Gronwall constant C(T) = {max(e['gronwall_C'] for e in extras):.4f}"]
    return checks, notes


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Experiment:
    defaults: dict
    point: Callable
    finalize: Callable
    fit: bool | str = True  # "auto": fit only when there are enough scales
    fit_value: str = "ratio"  # which column is fitted


_TOL_LOCAL = 0.1
_TOL_LOWER = 0.15

EXPERIMENTS: dict[str, Experiment] = {
    "embedding": Experiment(
        dict(d=1, n=1024, L=64.0, scales=[2, 4, 8, 16], fields_per_scale=5, budget=10.0, m22_factor=1.5),
        _pt_embedding, _fin_embedding, fit=False,
    ),
    "fixed_time": Experiment(
        dict(p=4, q=2, s=0.0, n=4096, L=2048.0, scales=[4, 8, 16, 32, 64, 128], tolerance=0.05),
        _pt_fixed_time, _fin_fixed_time,
    ),
    "knapp_aniso_local": Experiment(
        dict(d=1, p=4, q=4, steps=65, scales=[2.0**-k for k in range(3, 8)], tolerance=_TOL_LOCAL),
        _pt_knapp_aniso(False), _fin_knapp("aniso_local"),
    ),
    "knapp_aniso_global": Experiment(
        dict(d=1, p=4, q=4, steps=65, scales=[2.0**-k for k in range(3, 8)], tolerance=_TOL_LOCAL),
        _pt_knapp_aniso(True), _fin_knapp("aniso_global"),
    ),
    "knapp_high": Experiment(
        dict(d=1, p=4, q=2, s=1.0, scales=[16, 32, 64, 128, 256], tolerance=_TOL_LOCAL),
        _pt_knapp_high, _fin_knapp_high,
    ),
    "knapp_iso": Experiment(
        dict(d=1, p=4, q=4, r=None, min_slope=0.35, steps=17, scales=[8, 16, 32, 64], tolerance=_TOL_LOWER),
        _pt_knapp_iso, _fin_knapp_iso,
    ),
    "strichartz_mod": Experiment(
        dict(p=8, q=2, s=0.0, steps=9, scales=[8, 16, 32, 64], tolerance=_TOL_LOCAL),
        _pt_strichartz_mod, _fin_squeeze,
    ),
    "strichartz_m41": Experiment(
        dict(p=4, q=2, s=0.0, steps=129, scales=[16, 32, 64, 128, 256], tolerance=_TOL_LOCAL),
        _pt_strichartz_m41, _fin_squeeze,
    ),
    "mp1": Experiment(
        dict(p=4, n=2048, L=64.0, steps=65, ks=list(range(65)), max_spread=3.0),
        _pt_mp1, _fin_mp1, fit=False,
    ),
    "kernel": Experiment(
        dict(d=1, box_center=1.0, time_factors=[0.0, 0.25, 1.0, 4.0], n_per_lambda=16,
             scales=[8, 16, 32], bound_factor=10.0),
        _pt_kernel, _fin_kernel, fit=False,
    ),
    "decouple_const": Experiment(
        dict(d=1, p=4, density="random", draws=2, N_w=20, spacing=0.25, tail=1.5, refine_check=False,
             phase=None, scales=[16, 32, 64, 128, 256], tolerance=_TOL_LOCAL),
        _pt_decouple, _fin_decouple,
    ),
    "decouple_var": Experiment(
        dict(d=1, p=4, density="random", draws=1, N_w=20, spacing=0.25, tail=1.5, refine_check=False,
             phase="perturbed", phase_params={"eps": 1e-4}, lam_factor=4, scales=[16, 32, 64],
             tolerance=_TOL_LOCAL),
        _pt_decouple, _fin_decouple, fit="auto",
    ),
    "rescale_check": Experiment(
        dict(d=1, phase="perturbed", phase_params={"eps": 0.05}, xi0=[0.0, 0.0], c_par=0.1, A=1.0, N=4,
             samples=512, max_C=4.0, scales=[4, 8, 16, 32], tolerance=_TOL_LOCAL),
        _pt_rescale, _fin_rescale, fit_value="lhs",
    ),
    "approx_lemma": Experiment(
        dict(phase="perturbed", phase_params={"eps": 0.05}, p=4, N_w=20, delta=0.1, K_exponent=0.4,
             zbar_over_lam=[0.2, 0.1], eig_C=3.0, scales=[256, 1024, 4096]),
        _pt_approx, _fin_approx, fit=False,
    ),
    "nls_picard": Experiment(
        dict(n=512, L=64.0, width=1.5, sign=1, T=1.0, steps=801, M_max=3, split_refine=4,
             scales=[1 / 16, 1 / 8, 1 / 4, 1 / 2], tolerance=_TOL_LOWER),
        _pt_nls_picard, _fin_nls_picard,
    ),
    "nls_identity": Experiment(
        dict(n=512, L=64.0, width=1.5, sign=1, T=1.0, steps=401, n_iterates=3, leading=2, split_refine=4,
             scales=[1 / 16, 1 / 8, 1 / 4, 1 / 2], tolerance=_TOL_LOWER),
        _pt_nls_identity, _fin_nls_identity,
    ),
    "nls_monitor": Experiment(
        dict(n=512, L=64.0, width=2.0, amplitude=1.0, sign=1, T=1.0, reference_refine=4096,
             scales=[64, 128, 256, 512], tolerance=0.2),
        _pt_nls_monitor, _fin_nls_monitor,
    ),
}


# the square-function case of the smoothing estimate is the m41 sweep
EXPERIMENTS["sqfn"] = EXPERIMENTS["strichartz_m41"]


def default_config(kind: str) -> dict:
    if kind not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {kind!r}; choose from {sorted(EXPERIMENTS)}")
    return copy.deepcopy(EXPERIMENTS[kind].defaults)


def _merge(kind: str, config: dict | None) -> dict:
    cfg = default_config(kind)
    for k, v in (config or {}).items():
        if k not in cfg and k not in ("tolerance", "grid"):
            raise ValueError(f"{kind}: unknown config key {k!r}")
        cfg[k] = v
    if "grid" in cfg:
        grid = cfg.pop("grid")
        for k in ("d", "n", "L"):
            if k in grid:
                cfg[k] = grid[k]
    if kind == "mp1":
        cfg["scales"] = [float(math.sqrt(1 + k * k)) for k in cfg["ks"]]
    return cfg


def _validate(kind: str, cfg: dict) -> None:
    scales = cfg["scales"]
    if len(scales) < 1 or any(not s > 0 for s in scales):
        raise ValueError(f"{kind}: scales must be positive")
    if EXPERIMENTS[kind].fit is True and len(scales) < 4:
        raise ValueError(f"{kind}: a fitted sweep needs at least 4 scales, got {len(scales)}")


def _run_point(args):
    kind, cfg, scale, seed, index = args
    try:
        lhs, rhs, extras = EXPERIMENTS[kind].point(cfg, scale, seed, index)
    except Exception as exc:  # add experiment context and re-raise
        raise RuntimeError(f"{kind} at scale {scale}: {exc}") from exc
    return float(lhs), float(rhs), extras


def run_experiment(kind: str, config: dict | None = None, seed: int = 0, workers: int = 1) -> SweepResult:
    """Run one sweep and evaluate its checks.

    Points are independent and may run in a process pool; results are
    gathered in scale order, so the output does not depend on ``workers``.
    """
    exp = EXPERIMENTS.get(kind)
    if exp is None:
        raise KeyError(f"unknown experiment {kind!r}; choose from {sorted(EXPERIMENTS)}")
    cfg = _merge(kind, config)
    _validate(kind, cfg)
    fp = fingerprint(kind, cfg, seed)
    jobs = [(kind, cfg, float(s), seed, i) for i, s in enumerate(cfg["scales"])]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_run_point, jobs))
    else:
        outs = [_run_point(j) for j in jobs]
    order = sorted(range(len(jobs)), key=lambda i: (jobs[i][2], i))
    records, extras = [], []
    for i in order:
        lhs, rhs, extra = outs[i]
        records.append((jobs[i][2], lhs, rhs, lhs / rhs if rhs else math.nan))
        extras.append(extra)
    fit = None
    if exp.fit is True or (exp.fit == "auto" and len(records) >= 4):
        col = 3 if exp.fit_value == "ratio" else 1
        fit = fit_loglog([r[0] for r in records], [r[col] for r in records])
    checks, notes = exp.finalize(cfg, records, extras, fit)
    if fit is not None and fit.dropped:
        notes.append(f"dropped smallest scale {fit.dropped[0]:g} as a resolution outlier")
    if fit is not None and not fit.reliable:
        notes.append(f"fit unreliable (r2 = {fit.r2:.3f})")
    return SweepResult(
        kind, cfg, seed, records,
        None if fit is None else fit.slope,
        None if fit is None else fit.stderr,
        None if fit is None else fit.r2,
        fp, checks, notes, () if fit is None else fit.dropped,
    )
