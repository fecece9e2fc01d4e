"""Command-line entry point.

Option precedence: explicit flags > ``--config`` file > preset > defaults.
Exit status 0 on success, 1 on numerical failure (diagnostic JSON on
stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report
from .cavity import CODATA_2018, CavityConfig, Constants, derive_mode_constants, tomllib
from .classical import (
    STATE_NAMES, Branch, SystemParams, dressed_field, energy_of_branch, equilibrium_state,
    equations_of_motion, evolve, fit_frequency, omega_branches,
)
from .errors import NumericalError, TrajectoryTerminated, UsageError
from .gaussian import (
    QUOTED_DETUNING, TABLE2, QuadraticParams, perturbation_series, scaled_residual_norm,
    solve_ground_state,
)
from .observables import covariance_from_a, moment_report, squeezing_metrics, wigner_slice
from .presets import OPTIMAL_Q, PRESETS, preset
from .stability import R0_UNIT_BOHR, UNDEFINED, classify, stability_map

COMMANDS = ("cavity", "equilibrium", "branches", "trajectory", "stability-map",
            "ground-state", "moments", "wigner", "energy-curve")

DEFAULTS = {
    "format": "json",
    "tol_ode": 1e-10,
    "tol_newton": 1e-12,
    "kappa_mode": "consistent",
    "branch": "trojan",
    "phi": 0.0,
    # branches
    "u_min": 0.8, "u_max": 1.2, "n": 201,
    # trajectory
    "momentum_offset": "0,0,0", "t_end": 100.0, "t_start": 0.0, "dt": 0.05,
    # stability-map
    "R_min": "0.28cm", "R_max": "0.40cm", "nR": 100, "nu": 100, "workers": 1, "refine": 0,
    # ground state / moments / wigner
    "method": "newton", "order": 2, "a_source": "solve", "plane": "Qm_Pm", "width": 6.0,
    # energy curve
    "delta_min": -2e-6, "delta_max": 2e-6,
}

_LENGTH_UNITS = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}
_LITERAL = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z0-9]*)\s*$")


def parse_length(text, *, natural_ok: bool = True) -> tuple[float, str]:
    """Split a suffixed literal into ``(value, kind)``.

    ``kind`` is ``"m"`` (value converted to meters), ``"a0"`` (Bohr radii) or
    ``"natural"``.  A bare number is rejected: the unit must be explicit.
    """
    if isinstance(text, (int, float)):
        raise UsageError(f"length {text!r} needs a unit suffix (m, cm, mm, a0, natural)")
    m = _LITERAL.match(str(text))
    if not m or not m.group(2):
        raise UsageError(f"cannot parse length {text!r}; use e.g. 0.32cm, 3600a0, 7.8natural")
    value, unit = float(m.group(1)), m.group(2)
    if unit in _LENGTH_UNITS:
        return value * _LENGTH_UNITS[unit], "m"
    if unit == "a0":
        return value, "a0"
    if unit == "natural" and natural_ok:
        return value, "natural"
    raise UsageError(f"unknown length unit {unit!r} in {text!r}")


def _meters(text, constants: Constants) -> float:
    value, kind = parse_length(text, natural_ok=False)
    out = value * constants.a0 if kind == "a0" else value
    if not out > 0:
        raise UsageError(f"length {text!r} must be positive")
    return out


def _to_natural_length(text, modes) -> float:
    value, kind = parse_length(text)
    if kind == "natural":
        out = value
    elif kind == "a0":
        out = value * modes.config.constants.a0 / modes.length_unit
    else:
        out = value / modes.length_unit
    if not out > 0:
        raise UsageError(f"length {text!r} must be positive")
    return out


def _triple(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}")
    return np.array(vals)


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON/TOML file with cavity geometry and option values")
    g.add_argument("--out", help="output path (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--tol-ode", type=float, dest="tol_ode")
    g.add_argument("--tol-newton", type=float, dest="tol_newton")
    g.add_argument("--kappa-mode", choices=("consistent", "quoted", "detuning"), dest="kappa_mode",
                   help="consistent: detuning from (q, gamma); quoted: kappa-1 = 1e-7; "
                        "detuning: kappa-1 from --kappa-minus-one, gamma from (q, kappa)")
    g.add_argument("--kappa-minus-one", type=float, dest="kappa_minus_one")
    g.add_argument("--preset", help="take defaults from a named preset")
    p = common.add_argument_group("parameters")
    p.add_argument("--R", help="cavity radius with unit, e.g. 0.32cm")
    p.add_argument("--L", help="cavity length with unit, e.g. 1cm")
    p.add_argument("--r0", help="orbit radius with unit, e.g. 3600a0 or 7.83natural")
    p.add_argument("--q", type=float, help="Coulomb-to-centrifugal force ratio")
    p.add_argument("--gamma", type=float, help="dimensionless coupling (replaces geometry)")
    p.add_argument("--q-tilde", type=float, dest="q_tilde", help="Coulomb strength (with --gamma)")
    p.add_argument("--branch", choices=("trojan", "anti_trojan"))
    p.add_argument("--phi", type=float, help="orbital angle of the equilibrium (rad)")

    parser = _Parser(prog="trojancavity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("cavity", parents=[common], help="mode constants of the cavity")
    sub.add_parser("equilibrium", parents=[common], help="classical equilibrium and its stability")
    b = sub.add_parser("branches", parents=[common], help="Omega(r0) on both branches")
    b.add_argument("--u-min", type=float, dest="u_min")
    b.add_argument("--u-max", type=float, dest="u_max")
    b.add_argument("--n", type=int)
    t = sub.add_parser("trajectory", parents=[common], help="integrate from a perturbed equilibrium")
    t.add_argument("--momentum-offset", dest="momentum_offset",
                   help="added to the equilibrium momenta, units m*omega*r0, e.g. 0.02,0.07,0.02")
    t.add_argument("--t-end", type=float, dest="t_end", help="units of T = 1/omega")
    t.add_argument("--t-start", type=float, dest="t_start", help="first sampled time")
    t.add_argument("--dt", type=float, help="sampling stride")
    s = sub.add_parser("stability-map", parents=[common], help="stable region in the R-r0 plane")
    s.add_argument("--R-min", dest="R_min")
    s.add_argument("--R-max", dest="R_max")
    s.add_argument("--u-min", type=float, dest="u_min", help="r0 / (3600 a0)")
    s.add_argument("--u-max", type=float, dest="u_max")
    s.add_argument("--nR", type=int)
    s.add_argument("--nu", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--refine", type=int, help="bisection steps per boundary point")
    s.add_argument("--boundary-out", dest="boundary_out")
    gs = sub.add_parser("ground-state", parents=[common], help="Gaussian fundamental state")
    gs.add_argument("--method", choices=("newton", "series"))
    gs.add_argument("--order", type=int, choices=(0, 1, 2))
    for name in ("moments", "wigner"):
        m = sub.add_parser(name, parents=[common], help={
            "moments": "second moments, uncertainty products and squeezing",
            "wigner": "reduced Wigner function of one field mode"}[name])
        m.add_argument("--a-source", choices=("solve", "table2"), dest="a_source",
                       help="coefficients from the solver or the printed table")
        if name == "wigner":
            m.add_argument("--plane", choices=("Qp_Pp", "Qm_Pm"))
            m.add_argument("--n", type=int)
            m.add_argument("--width", type=float, help="half-width in standard deviations")
    e = sub.add_parser("energy-curve", parents=[common], help="E(kappa) near resonance")
    e.add_argument("--delta-min", type=float, dest="delta_min")
    e.add_argument("--delta-max", type=float, dest="delta_max")
    e.add_argument("--n", type=int)
    pr = sub.add_parser("preset", parents=[common], help="run a figure/table preset")
    pr.add_argument("name", help=", ".join(PRESETS))
    return parser


def _resolve(ns: argparse.Namespace) -> tuple[str, dict]:
    cli = {k: v for k, v in vars(ns).items() if v is not None}
    command = cli.pop("command")
    base: dict = {}
    name = cli.pop("name", None) if command == "preset" else None
    name = name or cli.pop("preset", None)
    cli.pop("preset", None)
    if name:
        base = preset(name)
        pcmd = base.pop("command")
        if command == "preset":
            command = pcmd
        elif pcmd != command:
            raise UsageError(f"preset {name} belongs to '{pcmd}', not '{command}'")
        base["preset"] = name
    file_opts: dict = {}
    if "config" in cli:
        path = Path(cli["config"])
        try:
            text = path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        try:
            data = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
        except (ValueError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot parse config {path}: {exc}") from None
        file_opts = {k.replace("-", "_"): v for k, v in data.items()
                     if k not in ("R_m", "L_m", "constants")}
        if {"R_m", "L_m", "constants"} & set(data):
            file_opts["_cavity"] = _cavity_from_dict({"R_m": 0.32e-2, "L_m": 1e-2, **data})
    opts = {**DEFAULTS, **base, **file_opts, **cli}
    return command, opts


def _cavity_from_dict(data: dict) -> CavityConfig:
    overrides = data.get("constants", {})
    unknown = set(overrides) - set(CODATA_2018)
    if unknown:
        raise UsageError(f"unknown constants in config: {sorted(unknown)}")
    consts = replace(Constants(), **{k: float(v) for k, v in overrides.items()})
    return CavityConfig(float(data["R_m"]), float(data["L_m"]), consts)


# -- parameter assembly ----------------------------------------------------------

def _modes(opts):
    cfg = opts.get("_cavity") or CavityConfig(0.32e-2, 1e-2)
    c = cfg.constants
    R = _meters(opts["R"], c) if "R" in opts else cfg.R
    L = _meters(opts["L"], c) if "L" in opts else cfg.L
    return derive_mode_constants(CavityConfig(R, L, c))


def _couplings(opts, modes) -> tuple[float, float]:
    has_geometry = "R" in opts or "L" in opts
    if "gamma" in opts or "q_tilde" in opts:
        if has_geometry:
            raise UsageError("give either cavity geometry (--R/--L) or dimensionless --gamma/--q-tilde")
        return opts.get("q_tilde", modes.q_tilde), opts.get("gamma", modes.gamma)
    return modes.q_tilde, modes.gamma


def _operating_point(opts, modes) -> tuple[SystemParams, QuadraticParams | None]:
    """Classical parameters plus, on the Trojan branch, the ground-state parameters."""
    q_tilde, gamma = _couplings(opts, modes)
    mode = opts["kappa_mode"]
    branch = Branch(opts["branch"])
    if "r0" in opts and "q" in opts:
        raise UsageError("give either --r0 or --q, not both")
    if mode == "consistent":
        if "r0" in opts:
            sp = SystemParams.from_r0(q_tilde, gamma, _to_natural_length(opts["r0"], modes), branch)
        else:
            q = opts.get("q", OPTIMAL_Q)
            sp = SystemParams.from_q(q_tilde, gamma, q)
        qp = QuadraticParams.from_system(sp) if sp.branch is Branch.TROJAN and sp.q < 1 else None
        return sp, qp
    if mode == "quoted":
        delta = QUOTED_DETUNING
    else:
        if "kappa_minus_one" not in opts:
            raise UsageError("--kappa-mode detuning needs --kappa-minus-one")
        delta = float(opts["kappa_minus_one"])
    if mode == "detuning" and "r0" not in opts:
        qp = QuadraticParams.from_detuning(opts.get("q", OPTIMAL_Q), delta)
        kappa = qp.kappa
        r0 = (q_tilde / (qp.q * kappa**2)) ** (1 / 3)
        return SystemParams(q_tilde, qp.gamma, delta, r0), qp
    sp = SystemParams.from_delta(q_tilde, gamma, delta)
    if mode == "quoted":
        qp = QuadraticParams.quoted(opts.get("q", OPTIMAL_Q), gamma, delta)
    else:
        qp = QuadraticParams(sp.q, delta, gamma, "custom") if 0 < sp.q < 1 else None
    return sp, qp


def _system_json(sp: SystemParams) -> dict:
    return {"q_tilde": sp.q_tilde, "gamma": sp.gamma, "kappa": sp.kappa,
            "kappa_minus_one": sp.delta, "q": sp.q, "q_r": sp.q_r, "r0_natural": sp.r0,
            "branch": sp.branch.value}


# -- subcommands ----------------------------------------------------------------

def cmd_cavity(opts):
    modes = _modes(opts)
    rep = modes.report()
    r0 = R0_UNIT_BOHR * modes.config.constants.a0 / modes.length_unit
    rep["r0_3600a0_natural"] = {"value": r0, "unit": "length_unit"}
    rep["q_tilde_over_r0cubed_at_3600a0"] = {"value": modes.q_tilde / r0**3, "unit": "1"}
    rows = [(k, v["value"], v["unit"]) for k, v in rep.items() if isinstance(v, dict)]
    rows += [("R_m", rep["R_m"], "m"), ("L_m", rep["L_m"], "m")]
    return rep, (("name", "value", "unit"), rows), []


def cmd_equilibrium(opts):
    modes = _modes(opts)
    sp, _ = _operating_point(opts, modes)
    eq = equilibrium_state(sp, opts["phi"])
    state = eq.state.as_array()
    resid = float(np.max(np.abs(equations_of_motion(state, sp))))
    v = classify(sp, opts["phi"])
    field = dressed_field(sp, opts["phi"], modes.field_amp)
    out = {
        "params": _system_json(sp),
        "phi": opts["phi"],
        "state": dict(zip(STATE_NAMES, state)),
        "max_derivative": resid,
        "abs_Pm": abs(state[-1]),
        "dressed_field_V_per_m": field,
        "stability": {"stable": v.stable, "max_real_part": v.max_real_part,
                      "zero_modes": v.zero_modes, "z_mode_freq": v.z_mode_freq,
                      "sqrt_q_r": math.sqrt(sp.q_r),
                      "coupled_eigenvalues": [[z.real, z.imag] for z in v.coupled]},
    }
    rows = [(k, val) for k, val in zip(STATE_NAMES, state)]
    rows += [("kappa_minus_one", sp.delta), ("r0", sp.r0), ("q", sp.q),
             ("max_derivative", resid), ("stable", v.stable)]
    return out, (("name", "value"), rows), []


def cmd_branches(opts):
    modes = _modes(opts)
    q_tilde, gamma = _couplings(opts, modes)
    u = np.linspace(opts["u_min"], opts["u_max"], int(opts["n"]))
    rows = []
    for ui in u:
        r0 = ui * R0_UNIT_BOHR * modes.config.constants.a0 / modes.length_unit
        up, lo = omega_branches(r0, q_tilde, gamma, modes.omega)
        try:
            d_up = SystemParams.from_r0(q_tilde, gamma, r0, Branch.TROJAN).delta
        except NumericalError:
            d_up = float("nan")
        try:
            d_lo = SystemParams.from_r0(q_tilde, gamma, r0, Branch.ANTI_TROJAN).delta
        except NumericalError:
            d_lo = float("nan")
        rows.append((ui, r0, up, lo, d_up, d_lo))
    header = ("r0_over_3600a0", "r0_natural", "Omega_gt_rad_s", "Omega_lt_rad_s",
              "kappa_gt_minus_one", "kappa_lt_minus_one")
    return {"rows": [dict(zip(header, r)) for r in rows]}, (header, rows), []


def cmd_trajectory(opts):
    modes = _modes(opts)
    sp, _ = _operating_point(opts, modes)
    eq = equilibrium_state(sp, opts["phi"])
    s0 = eq.state.as_array().copy()
    s0[3:6] += sp.r0 * _triple(opts["momentum_offset"])
    partial = None
    try:
        traj = evolve(s0, sp, float(opts["t_end"]), rtol=float(opts["tol_ode"]),
                      sample_dt=float(opts["dt"]), t_sample_start=float(opts["t_start"]))
    except TrajectoryTerminated as exc:
        partial = exc
        traj = exc.partial
    st = traj.states
    r0 = sp.r0
    scaled = st.copy()
    scaled[:, :6] /= r0
    rows = [(t, *s, h) for t, s, h in zip(traj.t, scaled, traj.energy)]
    header = ("t", *STATE_NAMES, "H")
    radius = np.sqrt((st[:, :3] ** 2).sum(axis=1)) / r0
    summary = {
        "params": _system_json(sp),
        "initial_state": dict(zip(STATE_NAMES, s0)),
        "samples": len(traj.t),
        "H_relative_drift": float(np.max(np.abs(traj.energy / traj.energy[0] - 1))) if len(traj.t) else None,
        "max_abs_r_over_r0_minus_1": float(np.max(np.abs(radius - 1))) if len(traj.t) else None,
        "units": {"t": "1/omega", "positions": "r0", "momenta": "m*omega*r0",
                  "field": "dimensionless", "H": "hbar*omega"},
    }
    if len(traj.t) > 16 and np.std(st[:, 2]) > 0:
        summary["z_frequency_fit"] = fit_frequency(traj.t, st[:, 2])
        summary["sqrt_q_r"] = math.sqrt(sp.q_r)
    if partial is not None:
        summary["terminated"] = str(partial)
    return summary, (header, rows), [], partial


def cmd_stability_map(opts):
    modes = _modes(opts)
    c = modes.config.constants
    R = np.linspace(_meters(opts["R_min"], c), _meters(opts["R_max"], c), int(opts["nR"]))
    u = np.linspace(float(opts["u_min"]), float(opts["u_max"]), int(opts["nu"]))
    sm = stability_map(R, u, modes.config.L, constants=c, branch=opts["branch"],
                       refine=int(opts["refine"]), workers=int(opts["workers"]))
    rows = [(Ri, ui, "undefined" if s == UNDEFINED else s, mr) for Ri, ui, s, mr in sm.rows()]
    header = ("R_m", "r0_over_3600a0", "stable", "max_real_part")
    bheader = ("R_m", "r0_over_3600a0")
    out = {"R_m": sm.R, "r0_over_3600a0": sm.u, "status": sm.status,
           "max_real_part": sm.max_real_part, "boundary": sm.boundary, "L_m": sm.L,
           "status_codes": {"1": "stable", "0": "unstable", "-1": "undefined"}}
    extra = []
    if opts.get("out") and opts.get("format") == "csv":
        bpath = opts.get("boundary_out") or str(Path(opts["out"]).with_suffix("")) + ".boundary.csv"
        extra.append((bpath, (bheader, [tuple(p) for p in sm.boundary])))
    return out, (header, rows), extra


def _ground_state(opts, modes):
    sp, qp = _operating_point(opts, modes)
    if qp is None:
        raise UsageError("the ground state is defined on the Trojan branch with 0 < q < 1")
    return sp, qp


def cmd_ground_state(opts):
    modes = _modes(opts)
    sp, qp = _ground_state(opts, modes)
    if opts["method"] == "series":
        a = perturbation_series(qp, int(opts["order"]))
        out = {"method": f"perturbation series, order {opts['order']}",
               "coefficients": a.to_dict(), "scaled_residual_norm": scaled_residual_norm(a, qp),
               "q": qp.q, "kappa_minus_one": qp.delta, "gamma": qp.gamma,
               "gamma_bar": qp.gamma_bar, "kappa_mode": qp.mode}
    else:
        rep = solve_ground_state(qp, tol=float(opts["tol_newton"]))
        out = {"method": "damped Newton with continuation in gamma_bar", **rep.to_json()}
        a = rep.a
    rows = list(a.to_dict().items())
    return out, (("name", "value"), rows), []


def _a_for_moments(opts, modes):
    sp, qp = _ground_state(opts, modes)
    if opts["a_source"] == "table2":
        return sp, qp, TABLE2, None
    rep = solve_ground_state(qp, tol=float(opts["tol_newton"]))
    return sp, qp, rep.a, rep


def cmd_moments(opts):
    modes = _modes(opts)
    sp, qp, a, rep = _a_for_moments(opts, modes)
    cov = covariance_from_a(a)
    mr = moment_report(cov, sp.r0, sp.kappa)
    out = {"a_source": opts["a_source"], "coefficients": a.to_dict(), **mr.to_json(),
           "physicality_margin": cov.physicality_margin()}
    if rep is not None:
        out["solve"] = rep.to_json()
    rows = [(k, v, "r0/m*Omega*r0") for k, v in mr.electron.items()]
    rows += [(k, v, "1") for k, v in mr.field.items()]
    return out, (("name", "value", "unit"), rows), []


def cmd_wigner(opts):
    modes = _modes(opts)
    sp, qp, a, _ = _a_for_moments(opts, modes)
    cov = covariance_from_a(a)
    eq = equilibrium_state(sp, opts["phi"]).state
    center = (eq.Qp, eq.Pp) if opts["plane"] == "Qp_Pp" else (eq.Qm, eq.Pm)
    ws = wigner_slice(cov, opts["plane"], n=int(opts["n"]), width=float(opts["width"]),
                      center=center)
    rows = [(qv, pv, ws.grid[i, j]) for i, pv in enumerate(ws.p) for j, qv in enumerate(ws.q)]
    side = {**ws.sidecar(), "a_source": opts["a_source"],
            "squeezing": dict(squeezing_metrics(cov).__dict__)}
    extra = []
    if opts.get("out") and opts.get("format") == "csv":
        extra.append((str(Path(opts["out"]).with_suffix("")) + ".json", side))
    return side, (("q", "p", "W"), rows), extra


def cmd_energy_curve(opts):
    modes = _modes(opts)
    q_tilde, gamma = _couplings(opts, modes)
    n = int(opts["n"])
    lo, hi = float(opts["delta_min"]), float(opts["delta_max"])
    deltas = np.linspace(lo, hi, n)
    rows = []
    for d in deltas:
        if d == 0.0:
            continue
        try:
            e = energy_of_branch(float(d), q_tilde, gamma, modes.energy_unit)
        except NumericalError:
            rows.append((d, float("nan"), float("nan"), float("nan"), float("nan")))
            continue
        rows.append((d, e.r0, e.natural, e.joules, e.lab_check))
    header = ("kappa_minus_one", "r0_natural", "E_hbar_omega", "E_joule", "H_lab_check")
    return {"rows": [dict(zip(header, r)) for r in rows]}, (header, rows), []


HANDLERS = {
    "cavity": cmd_cavity,
    "equilibrium": cmd_equilibrium,
    "branches": cmd_branches,
    "trajectory": cmd_trajectory,
    "stability-map": cmd_stability_map,
    "ground-state": cmd_ground_state,
    "moments": cmd_moments,
    "wigner": cmd_wigner,
    "energy-curve": cmd_energy_curve,
}

_TOL_KEYS = ("tol_ode", "tol_newton")
_COMMON_KEYS = ("format", "kappa_mode", "kappa_minus_one", "R", "L", "r0", "q", "gamma",
                "q_tilde", "branch", "phi", "preset", "config")
# Options that influence each command's output; everything else stays out of the hash.
_COMMAND_KEYS = {
    "cavity": (),
    "equilibrium": (),
    "branches": ("u_min", "u_max", "n"),
    "trajectory": ("momentum_offset", "t_end", "t_start", "dt"),
    "stability-map": ("R_min", "R_max", "u_min", "u_max", "nR", "nu", "refine"),
    "ground-state": ("method", "order"),
    "moments": ("a_source",),
    "wigner": ("a_source", "plane", "n", "width"),
    "energy-curve": ("delta_min", "delta_max", "n"),
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = build_parser().parse_args(argv)
        command, opts = _resolve(ns)
        for k in _TOL_KEYS:
            if not float(opts[k]) > 0:
                raise UsageError(f"{k.replace('_', '-')} must be positive")
        result = HANDLERS[command](opts)
        partial = result[3] if len(result) > 3 else None
        payload, (header, rows), extra = result[:3]
        keys = _COMMON_KEYS + _COMMAND_KEYS[command]
        config = {k: opts[k] for k in keys if k in opts}
        if "_cavity" in opts:
            cav = opts["_cavity"]
            config["cavity_file"] = {"R_m": cav.R, "L_m": cav.L, "constants": vars(cav.constants)}
        tols = {k: opts[k] for k in _TOL_KEYS}
        prov = report.provenance(command, config, tols)
        if opts["format"] == "csv":
            text = report.render_csv(header, rows, prov)
        else:
            text = report.render_json(payload, prov)
        report.write_text(text, opts.get("out"), stdout)
        for path, content in extra:
            if isinstance(content, dict):
                report.write_text(report.render_json(content, prov), path, stdout)
            else:
                report.write_text(report.render_csv(*content, prov), path, stdout)
        if partial is not None:
            raise partial
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return 2
    except NumericalError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        best = getattr(exc, "best", None)
        if best is not None and hasattr(best, "to_dict"):
            diag["best"] = best.to_dict()
        stderr.write(json.dumps(diag) + "\n")
        return 1
    return 0


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
