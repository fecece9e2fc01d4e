"""Rotating-frame dynamics of the electron coupled to the two circular modes.

State vectors are length-10 arrays ordered
``(x, y, z, px, py, pz, Qp, Qm, Pp, Pm)`` in natural units of the mode.
``Qp, Pp`` are the counter-rotating quadratures and ``Qm, Pm`` the
co-rotating ones.

The detuning ``delta = kappa - 1`` is carried as a primary quantity.  Near
resonance it is ~1e-12, so recovering it as ``kappa - 1`` from a stored
``kappa`` would lose four or more significant digits, enough to break the
equilibrium condition at the 1e-10 level.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    BranchDomainError,
    CloseApproachError,
    ParameterDomainError,
    ResonanceError,
    SingularityError,
    StiffnessError,
)

SQRT2 = math.sqrt(2.0)
STATE_NAMES = ("x", "y", "z", "px", "py", "pz", "Qp", "Qm", "Pp", "Pm")
X, Y, Z, PX, PY, PZ, QP, QM, PP, PM = range(10)


class Branch(str, enum.Enum):
    TROJAN = "trojan"
    ANTI_TROJAN = "anti_trojan"


def _kappa(delta: float) -> float:
    return 1.0 + delta


def _delta_from_kappa_sq_minus_one(s: float) -> float:
    # kappa - 1 = (kappa^2 - 1) / (kappa + 1), without cancellation.
    return s / (1.0 + math.sqrt(1.0 + s))


def _kappa_sq_minus_one(q_r: float, gamma: float, branch: Branch) -> float:
    disc = math.hypot(1.0 - q_r, 2.0 * gamma)
    if branch is Branch.TROJAN:
        if q_r < 1.0:
            return 2.0 * gamma**2 / (disc + (1.0 - q_r))
        return 0.5 * (q_r - 1.0 + disc)
    if q_r > 1.0:
        return -2.0 * gamma**2 / (disc + (q_r - 1.0))
    return 0.5 * (q_r - 1.0 - disc)


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless parameter set of the rotating-frame problem.

    Attributes
    ----------
    q_tilde : float
        Coulomb strength.
    gamma : float
        Atom-field coupling.
    delta : float
        Detuning ``kappa - 1`` with ``kappa = Omega / omega``.
    r0 : float
        Equilibrium radius in natural length units.
    """

    q_tilde: float
    gamma: float
    delta: float
    r0: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ParameterDomainError(f"{f.name} must be finite")
        if self.q_tilde <= 0 or self.r0 <= 0 or self.gamma < 0:
            raise ParameterDomainError("need q_tilde > 0, r0 > 0, gamma >= 0")
        if self.delta == 0.0:
            raise ResonanceError("kappa = 1 admits only the collapsed equilibrium")
        if self.delta <= -1.0:
            raise ParameterDomainError("kappa must be positive")
        lhs = self.q_r
        rhs = self.kappa**2 - self.gamma**2 / self.kappa_sq_minus_one
        if abs(lhs - rhs) > 1e-10 * abs(lhs):
            raise ParameterDomainError(
                f"equilibrium condition violated: q_tilde/r0^3 = {lhs!r}, "
                f"kappa^2 - gamma^2/(kappa^2-1) = {rhs!r}"
            )

    @property
    def kappa(self) -> float:
        return _kappa(self.delta)

    @property
    def kappa_sq_minus_one(self) -> float:
        return self.delta * (2.0 + self.delta)

    @property
    def q_r(self) -> float:
        """q_tilde / r0^3."""
        return self.q_tilde / self.r0**3

    @property
    def q(self) -> float:
        """Ratio of Coulomb to centrifugal force, q_tilde / (r0^3 kappa^2)."""
        return self.q_r / self.kappa**2

    @property
    def branch(self) -> Branch:
        return Branch.TROJAN if self.delta > 0 else Branch.ANTI_TROJAN

    @classmethod
    def from_q(cls, q_tilde: float, gamma: float, q: float) -> SystemParams:
        """Fix the force ratio ``q`` and derive the detuning and radius.

        ``gamma^2 = kappa^2 (1 - q)(kappa^2 - 1)``; ``q < 1`` selects the
        Trojan branch (kappa > 1), ``q > 1`` the anti-Trojan one.
        """
        if gamma <= 0:
            raise ParameterDomainError("from_q needs gamma > 0")
        if q == 1.0 or q <= 0:
            raise ParameterDomainError(f"q must be positive and != 1, got {q}")
        delta = detuning_from_q(gamma, q)
        kappa = _kappa(delta)
        r0 = (q_tilde / (q * kappa**2)) ** (1.0 / 3.0)
        return cls(q_tilde=q_tilde, gamma=gamma, delta=delta, r0=r0)

    @classmethod
    def from_r0(cls, q_tilde: float, gamma: float, r0: float,
                branch: Branch | str = Branch.TROJAN) -> SystemParams:
        """Rotation frequency from the radius on the requested branch."""
        branch = Branch(branch)
        s = _kappa_sq_minus_one(q_tilde / r0**3, gamma, branch)
        if s == 0.0:
            raise ResonanceError("gamma = 0 at q_tilde/r0^3 = 1 is exactly resonant")
        if s <= -1.0:
            raise BranchDomainError(f"no real {branch.value} rotation frequency at r0 = {r0:.6g}")
        return cls(q_tilde=q_tilde, gamma=gamma, delta=_delta_from_kappa_sq_minus_one(s), r0=r0)

    @classmethod
    def from_delta(cls, q_tilde: float, gamma: float, delta: float) -> SystemParams:
        kappa = _kappa(delta)
        return cls(q_tilde=q_tilde, gamma=gamma, delta=delta,
                   r0=solve_r0(kappa, q_tilde, gamma, delta=delta))


def detuning_from_q(gamma: float, q: float) -> float:
    """Root of ``delta (2 + delta) (1 + delta)^2 (1 - q) = gamma^2``.

    The positive root for ``q < 1``; the root in (-1, 0) for ``q > 1``.
    """
    if q == 1.0:
        raise ResonanceError("q = 1 forces kappa = 1")

    def f(d):
        return d * (2.0 + d) * (1.0 + d) ** 2 * (1.0 - q) - gamma**2

    if gamma == 0.0:
        raise ParameterDomainError("gamma = 0 leaves the detuning undetermined")
    if q < 1.0:
        guess = gamma**2 / (2.0 * (1.0 - q))
        hi = 2.0 * guess
        while f(hi) < 0:
            hi *= 2.0
        return brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # kappa^2 (kappa^2 - 1) is not monotone on (0, 1); take the root nearest resonance.
    guess = -gamma**2 / (2.0 * (q - 1.0))
    lo = 2.0 * guess
    if lo <= -0.5 or f(lo) < 0:
        lo = -0.5
        if f(lo) < 0:
            raise BranchDomainError(f"no anti-Trojan detuning for gamma={gamma}, q={q}")
    return brentq(f, lo, 0.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    z: float
    px: float
    py: float
    pz: float
    Qp: float
    Qm: float
    Pp: float
    Pm: float

    def __array__(self, dtype=None, copy=None):
        return np.array([getattr(self, n) for n in STATE_NAMES], dtype=dtype or float)

    def as_array(self) -> np.ndarray:
        return np.asarray(self)

    @classmethod
    def from_array(cls, arr) -> PhaseState:
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (10,):
            raise ValueError(f"expected 10 state components, got shape {arr.shape}")
        return cls(*map(float, arr))


@dataclass(frozen=True)
class Equilibrium:
    state: PhaseState
    phi: float
    branch: Branch
    params: SystemParams


def _as_state(s) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if arr.shape != (10,):
        raise ValueError(f"expected 10 state components, got shape {arr.shape}")
    return arr


def _radius(s: np.ndarray) -> float:
    r = math.sqrt(s[X] ** 2 + s[Y] ** 2 + s[Z] ** 2)
    if r == 0.0:
        raise SingularityError("Coulomb singularity at r = 0")
    return r


def hamiltonian_rotating(s, p: SystemParams) -> float:
    s = _as_state(s)
    r = _radius(s)
    d = p.delta
    kinetic = 0.5 * (s[PX] ** 2 + s[PY] ** 2 + s[PZ] ** 2)
    coupling = p.gamma / SQRT2 * (s[X] * (s[PP] + s[PM]) + s[Y] * (s[QM] - s[QP]))
    field = 0.5 * (2.0 + d) * (s[PP] ** 2 + s[QP] ** 2) - 0.5 * d * (s[PM] ** 2 + s[QM] ** 2)
    return kinetic - p.q_tilde / r - coupling + field - p.kappa * atom_angular_momentum(s)


def atom_angular_momentum(s) -> float:
    """M_z^A = x p_y - y p_x."""
    s = _as_state(s)
    return s[X] * s[PY] - s[Y] * s[PX]


def lab_quadratures(s) -> tuple[float, float, float, float]:
    """Linear-polarization quadratures ``(Qx, Qy, Px, Py)`` from the circular ones."""
    s = _as_state(s)
    Qx = (s[QP] + s[QM]) / SQRT2
    Py = (s[QM] - s[QP]) / SQRT2
    Px = (s[PP] + s[PM]) / SQRT2
    Qy = (s[PP] - s[PM]) / SQRT2
    return Qx, Qy, Px, Py


def field_angular_momentum(s) -> float:
    """M_z^F = Qx Py - Qy Px."""
    Qx, Qy, Px, Py = lab_quadratures(s)
    return Qx * Py - Qy * Px


def lab_energy(s, p: SystemParams) -> float:
    """Laboratory-frame energy H_L (natural units) of a state."""
    s = _as_state(s)
    r = _radius(s)
    Qx, Qy, Px, Py = lab_quadratures(s)
    kinetic = 0.5 * (s[PX] ** 2 + s[PY] ** 2 + s[PZ] ** 2)
    return (kinetic - p.q_tilde / r - p.gamma * (s[X] * Px + s[Y] * Py)
            + 0.5 * (Px**2 + Py**2 + Qx**2 + Qy**2))


def _rhs(s: np.ndarray, q_tilde: float, gamma: float, delta: float) -> np.ndarray:
    x, y, z, px, py, pz, Qp, Qm, Pp, Pm = s
    r2 = x * x + y * y + z * z
    coul = q_tilde / (r2 * math.sqrt(r2))
    kappa = 1.0 + delta
    g = gamma / SQRT2
    return np.array([
        px + kappa * y,
        py - kappa * x,
        pz,
        -coul * x + g * (Pp + Pm) + kappa * py,
        -coul * y + g * (Qm - Qp) - kappa * px,
        -coul * z,
        (2.0 + delta) * Pp - g * x,
        -delta * Pm - g * x,
        -(2.0 + delta) * Qp - g * y,
        delta * Qm + g * y,
    ])


def equations_of_motion(s, p: SystemParams) -> np.ndarray:
    """Time derivatives of all ten state components."""
    s = _as_state(s)
    _radius(s)
    return _rhs(s, p.q_tilde, p.gamma, p.delta)


def jacobian(s, p: SystemParams) -> np.ndarray:
    """Analytic d(equations_of_motion)/d(state), rows and columns in state order."""
    s = _as_state(s)
    r = _radius(s)
    kappa = p.kappa
    g = p.gamma / SQRT2
    J = np.zeros((10, 10))
    J[X, PX] = 1.0
    J[X, Y] = kappa
    J[Y, PY] = 1.0
    J[Y, X] = -kappa
    J[Z, PZ] = 1.0
    # Hessian of q_tilde / r enters the momentum rows.
    pos = s[:3]
    hess = p.q_tilde * (3.0 * np.outer(pos, pos) / r**5 - np.eye(3) / r**3)
    J[PX:PZ + 1, X:Z + 1] = hess
    J[PX, PY] = kappa
    J[PX, PP] = g
    J[PX, PM] = g
    J[PY, PX] = -kappa
    J[PY, QM] = g
    J[PY, QP] = -g
    J[QP, PP] = 2.0 + p.delta
    J[QP, X] = -g
    J[QM, PM] = -p.delta
    J[QM, X] = -g
    J[PP, QP] = -(2.0 + p.delta)
    J[PP, Y] = -g
    J[PM, QM] = p.delta
    J[PM, Y] = g
    return J


def equilibrium_state(p: SystemParams, phi: float = 0.0,
                      branch: Branch | str | None = None) -> Equilibrium:
    """Time-independent solution at orbital angle ``phi``.

    ``branch`` is checked against the sign of the detuning carried by ``p``.
    """
    if branch is not None and Branch(branch) is not p.branch:
        raise BranchDomainError(
            f"parameters describe the {p.branch.value} branch, not {Branch(branch).value}"
        )
    r0, kappa, gamma, d = p.r0, p.kappa, p.gamma, p.delta
    c, s = math.cos(phi), math.sin(phi)
    plus = gamma * r0 / ((2.0 + d) * SQRT2)
    minus = gamma * r0 / (d * SQRT2)
    state = PhaseState(
        x=r0 * c, y=r0 * s, z=0.0,
        px=-kappa * r0 * s, py=kappa * r0 * c, pz=0.0,
        Qp=-plus * s, Qm=-minus * s,
        Pp=plus * c, Pm=-minus * c,
    )
    return Equilibrium(state=state, phi=phi, branch=p.branch, params=p)


def rotate_state(s, angle: float) -> np.ndarray:
    """Apply the rotational symmetry: turn the orbit and both field modes by ``angle``.

    The counter-rotating pair turns as ``Pp - i Qp`` and the co-rotating pair as
    ``Pm + i Qm``, which maps the equilibrium at ``phi`` onto the one at
    ``phi + angle``.
    """
    s = _as_state(s).copy()
    c, sn = math.cos(angle), math.sin(angle)
    out = s.copy()
    out[X], out[Y] = c * s[X] - sn * s[Y], sn * s[X] + c * s[Y]
    out[PX], out[PY] = c * s[PX] - sn * s[PY], sn * s[PX] + c * s[PY]
    out[PP], out[QP] = c * s[PP] + sn * s[QP], c * s[QP] - sn * s[PP]
    out[PM], out[QM] = c * s[PM] - sn * s[QM], sn * s[PM] + c * s[QM]
    return out


def omega_branches(r0: float, q_tilde: float, gamma: float,
                   omega: float = 1.0) -> tuple[float, float]:
    """Trojan and anti-Trojan rotation frequencies ``(Omega_gt, Omega_lt)`` at radius r0."""
    if r0 <= 0:
        raise ParameterDomainError("r0 must be positive")
    q_r = q_tilde / r0**3
    disc = math.hypot(1.0 - q_r, 2.0 * gamma)
    upper = omega / SQRT2 * math.sqrt(1.0 + q_r + disc)
    lower = omega / SQRT2 * math.sqrt(max(1.0 + q_r - disc, 0.0))
    return upper, lower


def solve_r0(Omega: float, q_tilde: float, gamma: float, omega: float = 1.0,
             *, delta: float | None = None) -> float:
    """Equilibrium radius at rotation frequency ``Omega``.

    Pass ``delta`` (= Omega/omega - 1) directly when the detuning is below
    float resolution of ``Omega / omega``.
    """
    if delta is None:
        kappa = Omega / omega
        delta = kappa - 1.0
    else:
        kappa = 1.0 + delta
    if delta == 0.0:
        raise ResonanceError("Omega = omega: only the collapsed solution exists")
    bracket = kappa**2 - gamma**2 / (delta * (2.0 + delta))
    if bracket <= 0:
        raise BranchDomainError(
            f"no equilibrium radius at kappa-1={delta:.6g}: "
            f"kappa^2 - gamma^2/(kappa^2-1) = {bracket:.6g} <= 0"
        )
    return (q_tilde / bracket) ** (1.0 / 3.0)


def dressed_field(p: SystemParams, phi: float, field_amp: float) -> np.ndarray:
    """Classical electric field (V/m) at the atom for the equilibrium at ``phi``.

    Uses the prefactor ``-field_amp*sqrt(2)/(kappa^2-1) * gamma*r0``, where
    ``gamma * r0`` (natural units) equals ``e*field_amp*r0/(hbar*omega)`` in SI.
    """
    amp = -field_amp * SQRT2 / p.kappa_sq_minus_one * p.gamma * p.r0
    return amp * np.array([math.cos(phi), math.sin(phi)])


@dataclass(frozen=True)
class BranchEnergy:
    kappa: float
    delta: float
    r0: float
    natural: float
    joules: float | None
    lab_check: float


def energy_of_branch(delta: float, q_tilde: float, gamma: float,
                     energy_unit: float | None = None) -> BranchEnergy:
    """Lab-frame energy of the circulating solution with detuning ``delta = kappa - 1``.

    Closed form ``(r0^2/2) (gamma^2 (5 kappa^2 - 3)/(kappa^2 - 1)^2 - kappa^2)``
    in units of hbar*omega; ``lab_check`` is H_L evaluated on the explicit
    equilibrium state.
    """
    if delta == 0.0:
        raise ResonanceError("energy diverges at kappa = 1")
    kappa = 1.0 + delta
    p = SystemParams.from_delta(q_tilde, gamma, delta)
    s = delta * (2.0 + delta)
    natural = 0.5 * p.r0**2 * (gamma**2 * (5 * kappa**2 - 3) / s**2 - kappa**2)
    check = lab_energy(equilibrium_state(p).state, p)
    joules = None if energy_unit is None else natural * energy_unit
    return BranchEnergy(kappa=kappa, delta=delta, r0=p.r0, natural=natural,
                        joules=joules, lab_check=check)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    params: SystemParams
    nfev: int = 0

    def column(self, name: str) -> np.ndarray:
        return self.states[:, STATE_NAMES.index(name)]


def evolve(s0, p: SystemParams, t_end: float, *, rtol: float = 1e-10,
           atol=None, sample_dt: float | None = None, t_sample_start: float = 0.0,
           r_min_factor: float = 1e-6, max_step: float = 0.5) -> Trajectory:
    """Integrate the equations of motion with Dormand-Prince 5(4).

    Samples are taken every ``sample_dt`` (natural time, T = 1/omega) from
    ``t_sample_start`` to ``t_end``.  Integration stops on close approach
    ``r < r_min_factor * r0`` with :class:`CloseApproachError`; a collapsing
    step size raises :class:`StiffnessError`.  Both carry the partial
    trajectory.

    ``max_step`` keeps the fastest free field mode (frequency ~2) well
    inside the stability region of the integrator; without it the step
    size grows near an equilibrium until the controller sits at the
    stability edge and round-off noise is amplified.
    """
    y0 = _as_state(s0)
    _radius(y0)
    if sample_dt is None:
        sample_dt = min(0.1, t_end / 100.0)
    n = int(math.floor((t_end - t_sample_start) / sample_dt + 1e-9)) + 1
    t_eval = t_sample_start + sample_dt * np.arange(n)
    t_eval = t_eval[t_eval <= t_end]
    if atol is None:
        scale = np.maximum(np.abs(y0), 1.0)
        scale[:6] = np.maximum(scale[:6], p.r0 * p.kappa)
        atol = rtol * scale
    r_min = r_min_factor * p.r0
    args = (p.q_tilde, p.gamma, p.delta)

    def close(t, y, *a):
        return y[0] ** 2 + y[1] ** 2 + y[2] ** 2 - r_min**2

    close.terminal = True
    close.direction = -1

    sol = solve_ivp(_rhs_ivp, (0.0, t_end), y0, method="RK45", t_eval=t_eval,
                    rtol=rtol, atol=atol, args=args, events=close, max_step=max_step)
    states = sol.y.T
    traj = Trajectory(t=sol.t, states=states,
                      energy=np.array([hamiltonian_rotating(s, p) for s in states]),
                      params=p, nfev=sol.nfev)
    if sol.status == 1:
        raise CloseApproachError(
            f"close approach r < {r_min:.3g} at t = {sol.t_events[0][0]:.6g}", partial=traj)
    if sol.status != 0:
        raise StiffnessError(f"integration failed: {sol.message}", partial=traj)
    return traj


def _rhs_ivp(t, s, q_tilde, gamma, delta):
    return _rhs(s, q_tilde, gamma, delta)


def fit_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Angular frequency of a near-harmonic signal.

    The FFT peak seeds a least-squares fit of ``A cos(w t) + B sin(w t) + C``.
    """
    from scipy.optimize import curve_fit

    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 8:
        raise ValueError("need at least 8 samples")
    dt = float(np.mean(np.diff(t)))
    yc = y - y.mean()
    n = 8 * len(yc)
    spec = np.abs(np.fft.rfft(yc * np.hanning(len(yc)), n))
    freqs = 2 * math.pi * np.fft.rfftfreq(n, dt)
    w0 = freqs[int(np.argmax(spec[1:])) + 1]

    def model(tt, w, a, b, c):
        return a * np.cos(w * tt) + b * np.sin(w * tt) + c

    amp = float(np.std(yc)) * SQRT2
    popt, _ = curve_fit(model, t - t[0], y, p0=(w0, amp, 0.0, float(y.mean())))
    return abs(float(popt[0]))
