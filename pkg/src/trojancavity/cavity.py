"""Cylindrical-cavity TE11 mode constants and the dimensionless couplings.

Everything in SI lives here.  Downstream modules only ever see the
dimensionless set (q_tilde, gamma, kappa, r0) expressed in the natural units
built from the mode frequency: energy hbar*omega, length sqrt(hbar/(m*omega)),
momentum sqrt(hbar*m*omega), time 1/omega.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ParameterDomainError, UsageError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


# CODATA 2018.
CODATA_2018 = {
    "m": 9.1093837015e-31,  # electron mass, kg
    "e": 1.602176634e-19,  # elementary charge, C
    "eps0": 8.8541878128e-12,  # vacuum permittivity, F/m
    "hbar": 1.054571817e-34,  # J s
    "c": 299792458.0,  # m/s
    "a0": 5.29177210903e-11,  # Bohr radius, m
}

# J1 power series is used up to here; Miller backward recurrence beyond.
SERIES_SWITCH = 8.0


@dataclass(frozen=True)
class Constants:
    m: float = CODATA_2018["m"]
    e: float = CODATA_2018["e"]
    eps0: float = CODATA_2018["eps0"]
    hbar: float = CODATA_2018["hbar"]
    c: float = CODATA_2018["c"]
    a0: float = CODATA_2018["a0"]

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ParameterDomainError(f"constant {name} must be positive, got {value}")
        a0 = 4 * math.pi * self.eps0 * self.hbar**2 / (self.m * self.e**2)
        if abs(a0 / self.a0 - 1) > 1e-6:
            raise ParameterDomainError(
                f"Bohr radius {self.a0} inconsistent with m, e, eps0, hbar (expected {a0})"
            )


@dataclass(frozen=True)
class CavityConfig:
    """Cavity radius ``R`` and length ``L`` in meters plus the constants table."""

    R: float
    L: float
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self):
        if not (math.isfinite(self.R) and self.R > 0):
            raise ParameterDomainError(f"cavity radius must be positive, got {self.R}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ParameterDomainError(f"cavity length must be positive, got {self.L}")


REFERENCE_CAVITY = CavityConfig(R=0.32e-2, L=1.0e-2)


@dataclass(frozen=True)
class ModeConstants:
    """Derived constants of the two degenerate TE11 modes.

    ``omega`` is an angular frequency (rad/s).  ``norm`` is the mode
    normalization constant and ``field_amp`` the field amplitude (V/m) at the
    cavity center.
    """

    x11: float
    omega: float
    k: float
    norm: float
    field_amp: float
    q_tilde: float
    gamma: float
    length_unit: float
    momentum_unit: float
    energy_unit: float
    config: CavityConfig

    @property
    def time_unit(self) -> float:
        return 1.0 / self.omega

    def report(self) -> dict:
        """JSON-ready report with units spelled out."""
        return {
            "x11": {"value": self.x11, "unit": "1"},
            "omega": {"value": self.omega, "unit": "rad/s", "note": "angular frequency"},
            "k": {"value": self.k, "unit": "1/m"},
            "norm": {"value": self.norm, "unit": "V s"},
            "field_amp": {"value": self.field_amp, "unit": "V/m"},
            "q_tilde": {"value": self.q_tilde, "unit": "1"},
            "gamma": {"value": self.gamma, "unit": "1"},
            "length_unit": {"value": self.length_unit, "unit": "m"},
            "momentum_unit": {"value": self.momentum_unit, "unit": "kg m/s"},
            "energy_unit": {"value": self.energy_unit, "unit": "J"},
            "time_unit": {"value": self.time_unit, "unit": "s"},
            "R_m": self.config.R,
            "L_m": self.config.L,
        }


def _j_series(n: int, x: float) -> float:
    half = 0.5 * x
    term = half**n / math.factorial(n)
    total = term
    k = 0
    while True:
        k += 1
        term *= -half * half / (k * (k + n))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) and k > 2:
            return total
        if k > 200:  # pragma: no cover
            return total


def _j_miller(x: float) -> tuple[float, float, float]:
    """J0, J1, J2 by backward recurrence normalized with J0 + 2*sum(J_2k) = 1."""
    start = 2 * (int(abs(x)) + 30)
    j_next, j_cur = 0.0, 1e-30
    values = {}
    norm = 0.0
    for n in range(start, 0, -1):
        j_prev = 2 * n / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if n - 1 <= 2:
            values[n - 1] = j_cur
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2 * j_cur
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
            values = {m: v * 1e-250 for m, v in values.items()}
    norm += values[0]
    return values[0] / norm, values[1] / norm, values[2] / norm


def _bessel_012(x: float) -> tuple[float, float, float]:
    if abs(x) <= SERIES_SWITCH:
        return _j_series(0, x), _j_series(1, x), _j_series(2, x)
    j0, j1, j2 = _j_miller(abs(x))
    return j0, (j1 if x > 0 else -j1), j2


def bessel_j1(x: float) -> float:
    """Bessel function of the first kind of order one.

    Power series for ``|x| <= 8``; normalized Miller backward recurrence above.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ParameterDomainError(f"bessel_j1 needs a finite argument, got {x}")
    if x == 0.0:
        return 0.0
    return _bessel_012(x)[1]


def bessel_j1_prime(x: float) -> float:
    """dJ1/dx = (J0 - J2) / 2."""
    x = float(x)
    if x == 0.0:
        return 0.5
    j0, _, j2 = _bessel_012(x)
    return 0.5 * (j0 - j2)


def find_x11(tol: float = 1e-15) -> float:
    """Smallest positive zero of dJ1/dx, by bisection on (1, 3)."""
    lo, hi = 1.0, 3.0
    f_lo = bessel_j1_prime(lo)
    if f_lo * bessel_j1_prime(hi) >= 0:  # pragma: no cover
        raise RuntimeError("J1' does not change sign on (1, 3)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j1_prime(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def derive_mode_constants(cfg: CavityConfig = REFERENCE_CAVITY) -> ModeConstants:
    c = cfg.constants
    R, L = cfg.R, cfg.L
    x11 = find_x11()
    omega = c.c / R * math.sqrt(x11**2 + (math.pi * R / L) ** 2)
    k = math.sqrt((omega / c.c) ** 2 + (math.pi / L) ** 2)
    j1 = bessel_j1(x11)
    norm = x11 / (k**2 * R**2) * math.sqrt(
        c.hbar / (2 * math.pi * c.eps0 * L * omega * (1 - 1 / x11**2) * j1**2)
    )
    field_amp = norm * omega * x11 / (R * math.sqrt(2))
    length_unit = math.sqrt(c.hbar / (c.m * omega))
    momentum_unit = math.sqrt(c.hbar * c.m * omega)
    energy_unit = c.hbar * omega
    q_tilde = c.e**2 / (4 * math.pi * c.eps0 * energy_unit) / length_unit
    gamma = c.e * field_amp / energy_unit * length_unit
    values = (omega, k, norm, field_amp, q_tilde, gamma)
    if not all(math.isfinite(v) and v > 0 for v in values):
        raise ParameterDomainError(f"non-finite or non-positive mode constant for {cfg}")
    return ModeConstants(
        x11=x11,
        omega=omega,
        k=k,
        norm=norm,
        field_amp=field_amp,
        q_tilde=q_tilde,
        gamma=gamma,
        length_unit=length_unit,
        momentum_unit=momentum_unit,
        energy_unit=energy_unit,
        config=cfg,
    )


_KINDS = ("length", "momentum", "energy", "time")


def _unit(modes: ModeConstants, kind: str) -> float:
    if kind == "length":
        return modes.length_unit
    if kind == "momentum":
        return modes.momentum_unit
    if kind == "energy":
        return modes.energy_unit
    if kind == "time":
        return modes.time_unit
    raise UsageError(f"unknown quantity kind {kind!r}; expected one of {_KINDS}")


def to_natural(value: float, kind: str, modes: ModeConstants) -> float:
    """SI value -> natural units of the mode."""
    return value / _unit(modes, kind)


def from_natural(value: float, kind: str, modes: ModeConstants) -> float:
    return value * _unit(modes, kind)


def load_cavity_config(path: str | Path) -> CavityConfig:
    """Read ``R_m``, ``L_m`` and optional ``constants`` overrides from JSON or TOML."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    try:
        R, L = float(data["R_m"]), float(data["L_m"])
    except KeyError as exc:
        raise UsageError(f"config {path} is missing key {exc.args[0]!r}") from None
    overrides = data.get("constants", {})
    unknown = set(overrides) - set(CODATA_2018)
    if unknown:
        raise UsageError(f"unknown constants in {path}: {sorted(unknown)}")
    constants = replace(Constants(), **{k: float(v) for k, v in overrides.items()})
    return CavityConfig(R=R, L=L, constants=constants)
