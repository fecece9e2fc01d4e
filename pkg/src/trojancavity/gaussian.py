"""Gaussian fundamental state of the quadratic atom-field Hamiltonian.

The trial state is ``psi ~ exp(-X^T A X / 2)`` with ``X = (x, y, Qp, Qm)``
and the complex symmetric matrix

    [[a11,   i a12, i a13, i a14],
     [i a12, a22,   a23,   a24  ],
     [i a13, a23,   a33,   a34  ],
     [i a14, a24,   a34,   a44  ]]

Substituting it into the stationary Schroedinger equation gives ten
polynomial equations (a)-(j) for the real coefficients.  In those equations
the atom-field coupling enters as ``g = gamma / sqrt(2)``, the prefactor of the
coupling terms in the Hamiltonian; ``gamma`` itself is the classical coupling
of :mod:`trojancavity.classical`.

The unknowns span many orders of magnitude: the cross terms a13..a24 scale
with g (~1e-6), a34 with g^2, and equation (j) has the detuning ~1e-11 as
its natural size.  Newton therefore runs on rows and unknowns rescaled by
those sizes, and ``residual_norm`` refers to the rescaled system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .classical import SQRT2, SystemParams, detuning_from_q
from .errors import (
    NonNormalizableError,
    ParameterDomainError,
    ResonanceError,
    SolverError,
)

COEFFS = ("a11", "a12", "a13", "a14", "a22", "a23", "a24", "a33", "a34", "a44")
EQUATIONS = tuple("abcdefghij")
# kappa = 1.0000001 as quoted alongside q = 0.95625.
QUOTED_DETUNING = 1e-7
GAMMA_BAR_WARN = 0.5

_CROSS = ("a13", "a14", "a23", "a24")
_IDX = {name: i for i, name in enumerate(COEFFS)}


@dataclass(frozen=True)
class QuadraticParams:
    """Parameters of the ten ground-state equations.

    Attributes
    ----------
    q : float
        Coulomb-to-centrifugal force ratio, in (0, 1).
    delta : float
        Detuning ``kappa - 1`` (> 0 on the Trojan branch).
    gamma : float
        Classical atom-field coupling; the equations use ``g = gamma/sqrt(2)``.
    mode : str
        How the triple was obtained: ``consistent`` when it satisfies the
        classical equilibrium relation ``gamma^2 = kappa^2 (1-q)(kappa^2-1)``,
        otherwise ``quoted`` or ``custom``.
    """

    q: float
    delta: float
    gamma: float
    mode: str = "custom"

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.q, self.delta, self.gamma)):
            raise ParameterDomainError("q, delta and gamma must be finite")
        if not 0.0 < self.q < 1.0:
            raise ParameterDomainError(f"q must lie in (0, 1), got {self.q}")
        if self.gamma < 0:
            raise ParameterDomainError("gamma must be non-negative")
        if self.delta == 0.0:
            raise ResonanceError("kappa = 1 is excluded")
        if self.delta < 0:
            raise ParameterDomainError("the ground-state solver covers the Trojan branch (kappa > 1)")

    @property
    def kappa(self) -> float:
        return 1.0 + self.delta

    @property
    def g(self) -> float:
        return self.gamma / SQRT2

    @property
    def gamma_bar(self) -> float:
        """Expansion parameter ``gamma / sqrt(kappa - 1)``."""
        return self.gamma / math.sqrt(self.delta)

    @property
    def consistency_defect(self) -> float:
        """``gamma^2 / (kappa^2 (1-q)(kappa^2-1)) - 1``; zero on the classical equilibrium."""
        d = self.delta
        return self.gamma**2 / (self.kappa**2 * (1 - self.q) * d * (2 + d)) - 1.0

    def with_gamma_bar(self, gamma_bar: float) -> QuadraticParams:
        return QuadraticParams(self.q, self.delta, gamma_bar * math.sqrt(self.delta), "custom")

    @classmethod
    def consistent(cls, q: float, gamma: float) -> QuadraticParams:
        """Detuning derived from ``(q, gamma)`` through the equilibrium relation."""
        return cls(q, detuning_from_q(gamma, q), gamma, "consistent")

    @classmethod
    def from_detuning(cls, q: float, delta: float) -> QuadraticParams:
        """Coupling derived from ``(q, delta)`` through the equilibrium relation."""
        kappa = 1.0 + delta
        gamma = math.sqrt(delta * (2 + delta) * kappa**2 * (1 - q))
        return cls(q, delta, gamma, "consistent")

    @classmethod
    def quoted(cls, q: float, gamma: float, delta: float = QUOTED_DETUNING) -> QuadraticParams:
        """Take the detuning as given, without the equilibrium relation."""
        return cls(q, delta, gamma, "quoted")

    @classmethod
    def from_system(cls, p: SystemParams) -> QuadraticParams:
        out = cls(p.q, p.delta, p.gamma, "consistent")
        if abs(out.consistency_defect) > 1e-8:
            raise ParameterDomainError(
                f"system parameters violate gamma^2 = kappa^2(1-q)(kappa^2-1) "
                f"(defect {out.consistency_defect:.3g})"
            )
        return out


@dataclass(frozen=True)
class AMatrix:
    a11: float
    a12: float
    a13: float
    a14: float
    a22: float
    a23: float
    a24: float
    a33: float
    a34: float
    a44: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in COEFFS], dtype=float)

    @classmethod
    def from_array(cls, arr) -> AMatrix:
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (10,):
            raise ValueError(f"expected 10 coefficients, got shape {arr.shape}")
        return cls(*map(float, arr))

    @classmethod
    def from_dict(cls, d: dict) -> AMatrix:
        return cls(**{n: float(d[n]) for n in COEFFS})

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def real_part(self) -> np.ndarray:
        """Real part of A; the electron x row only couples through the imaginary part."""
        return np.array([
            [self.a11, 0.0, 0.0, 0.0],
            [0.0, self.a22, self.a23, self.a24],
            [0.0, self.a23, self.a33, self.a34],
            [0.0, self.a24, self.a34, self.a44],
        ])

    @property
    def imag_part(self) -> np.ndarray:
        S = np.zeros((4, 4))
        S[0, 1:] = S[1:, 0] = (self.a12, self.a13, self.a14)
        return S

    @property
    def matrix(self) -> np.ndarray:
        return self.real_part + 1j * self.imag_part

    def min_real_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.real_part)[0])

    def is_normalizable(self) -> bool:
        return self.min_real_eigenvalue() > 0


# -- the ten equations ---------------------------------------------------------

def _residuals(a: np.ndarray, q: float, d: float, g: float) -> np.ndarray:
    a11, a12, a13, a14, a22, a23, a24, a33, a34, a44 = a
    k = 1.0 + d
    kp = 2.0 + d  # 1 + kappa; 1 - kappa is written -d
    return np.array([
        -2 * k**2 * q - a11**2 + 2 * k * a12 + a12**2 - 2 * g * a13 + a13**2 * kp
        - 2 * g * a14 - a14**2 * d,
        a11 * a12 + a12 * a22 - g * a23 + a13 * a23 - g * a24 + a14 * a24
        + k * (-a11 + a22 + a13 * a23 - a14 * a24),
        a11 * a13 + a12 * a23 - g * a33 + a13 * a33 - g * a34 + a14 * a34
        + k * (a23 + a13 * a33 - a14 * a34),
        a11 * a14 + a12 * a24 - g * a34 + a13 * a34 - g * a44 + a14 * a44
        + k * (a24 + a13 * a34 - a14 * a44),
        k**2 * q - 2 * k * a12 + a12**2 - a22**2 - a23**2 * kp + a24**2 * d,
        -g - k * a13 + a12 * a13 - a22 * a23 - a23 * a33 - k * a23 * a33
        - a24 * a34 + k * a24 * a34,
        g - k * a14 + a12 * a14 - a22 * a24 - a23 * a34 - k * a23 * a34
        - a24 * a44 + k * a24 * a44,
        kp + a13**2 - a23**2 - a33**2 * kp + a34**2 * d,
        a13 * a14 - a23 * a24 - a34 * (kp * a33 - d * a44),
        -d + a14**2 - a24**2 + a44**2 * d - a34**2 * kp,
    ])


def _jacobian(a: np.ndarray, q: float, d: float, g: float) -> np.ndarray:
    a11, a12, a13, a14, a22, a23, a24, a33, a34, a44 = a
    k = 1.0 + d
    kp = 2.0 + d
    i = _IDX
    J = np.zeros((10, 10))
    # (a)
    J[0, i["a11"]] = -2 * a11
    J[0, i["a12"]] = 2 * k + 2 * a12
    J[0, i["a13"]] = -2 * g + 2 * kp * a13
    J[0, i["a14"]] = -2 * g - 2 * d * a14
    # (b)
    J[1, i["a11"]] = a12 - k
    J[1, i["a12"]] = a11 + a22
    J[1, i["a22"]] = a12 + k
    J[1, i["a13"]] = kp * a23
    J[1, i["a23"]] = -g + kp * a13
    J[1, i["a14"]] = -d * a24
    J[1, i["a24"]] = -g - d * a14
    # (c)
    J[2, i["a11"]] = a13
    J[2, i["a12"]] = a23
    J[2, i["a13"]] = a11 + kp * a33
    J[2, i["a14"]] = -d * a34
    J[2, i["a23"]] = a12 + k
    J[2, i["a33"]] = -g + kp * a13
    J[2, i["a34"]] = -g - d * a14
    # (d)
    J[3, i["a11"]] = a14
    J[3, i["a12"]] = a24
    J[3, i["a13"]] = kp * a34
    J[3, i["a14"]] = a11 - d * a44
    J[3, i["a24"]] = a12 + k
    J[3, i["a34"]] = -g + kp * a13
    J[3, i["a44"]] = -g - d * a14
    # (e)
    J[4, i["a12"]] = 2 * a12 - 2 * k
    J[4, i["a22"]] = -2 * a22
    J[4, i["a23"]] = -2 * kp * a23
    J[4, i["a24"]] = 2 * d * a24
    # (f)
    J[5, i["a12"]] = a13
    J[5, i["a13"]] = a12 - k
    J[5, i["a22"]] = -a23
    J[5, i["a23"]] = -a22 - kp * a33
    J[5, i["a33"]] = -kp * a23
    J[5, i["a24"]] = d * a34
    J[5, i["a34"]] = d * a24
    # (g)
    J[6, i["a12"]] = a14
    J[6, i["a14"]] = a12 - k
    J[6, i["a22"]] = -a24
    J[6, i["a24"]] = -a22 + d * a44
    J[6, i["a23"]] = -kp * a34
    J[6, i["a34"]] = -kp * a23
    J[6, i["a44"]] = d * a24
    # (h)
    J[7, i["a13"]] = 2 * a13
    J[7, i["a23"]] = -2 * a23
    J[7, i["a33"]] = -2 * kp * a33
    J[7, i["a34"]] = 2 * d * a34
    # (i)
    J[8, i["a13"]] = a14
    J[8, i["a14"]] = a13
    J[8, i["a23"]] = -a24
    J[8, i["a24"]] = -a23
    J[8, i["a33"]] = -kp * a34
    J[8, i["a34"]] = -(kp * a33 - d * a44)
    J[8, i["a44"]] = d * a34
    # (j)
    J[9, i["a14"]] = 2 * a14
    J[9, i["a24"]] = -2 * a24
    J[9, i["a34"]] = -2 * kp * a34
    J[9, i["a44"]] = 2 * d * a44
    return J


def _dg(a: np.ndarray) -> np.ndarray:
    a11, a12, a13, a14, a22, a23, a24, a33, a34, a44 = a
    return np.array([-2 * a13 - 2 * a14, -a23 - a24, -a33 - a34, -a34 - a44,
                     0.0, -1.0, 1.0, 0.0, 0.0, 0.0])


def residuals(a: AMatrix, p: QuadraticParams) -> np.ndarray:
    """Left-hand sides of equations (a)-(j), unscaled."""
    return _residuals(a.to_array(), p.q, p.delta, p.g)


def residual_jacobian(a: AMatrix, p: QuadraticParams) -> np.ndarray:
    """Analytic d(residuals)/d(coefficients), columns in ``COEFFS`` order."""
    return _jacobian(a.to_array(), p.q, p.delta, p.g)


def residual_dg(a: AMatrix) -> np.ndarray:
    """d(residuals)/dg at fixed coefficients."""
    return _dg(a.to_array())


def row_scales(p: QuadraticParams) -> np.ndarray:
    g = p.g if p.g > 0 else 1.0
    return np.array([1.0, 1.0, g, g, 1.0, g, g, 1.0, g * g, p.delta])


def unknown_scales(p: QuadraticParams) -> np.ndarray:
    g = p.g if p.g > 0 else 1.0
    return np.array([1.0, 1.0, g, g, 1.0, g, g, 1.0, g * g, 1.0])


def scaled_residual_norm(a: AMatrix, p: QuadraticParams) -> float:
    return float(np.linalg.norm(residuals(a, p) / row_scales(p)))


# -- zeroth order ----------------------------------------------------------------

def _electronic_closed_form(q: float) -> tuple[float, float, float]:
    """(a11, a12, a22) at kappa = 1; the solution scales linearly with kappa."""
    s = math.sqrt(1 + q - 2 * q * q)
    a12 = (2 + q - 2 * s) / (3 * q)
    r11 = a12 * a12 + 2 * a12 - 2 * q
    r22 = a12 * a12 - 2 * a12 + q
    if r11 <= 0 or r22 <= 0:
        raise ParameterDomainError(
            f"no normalizable electronic packet at q={q}; it exists for 8/9 < q < 1"
        )
    return math.sqrt(r11), a12, math.sqrt(r22)


def zeroth_order_seed(q: float, kappa: float = 1.0) -> AMatrix:
    """Decoupled solution: externally driven electron packet times field vacuum.

    The electronic triple is polished by Newton on the reduced equations
    (a), (b), (e) at zero coupling, starting from the closed form.
    """
    if not 0.0 < q < 1.0:
        raise ParameterDomainError(f"q must lie in (0, 1), got {q}")
    k = kappa
    x = np.array(_electronic_closed_form(q)) * k

    def f(v):
        a11, a12, a22 = v
        return np.array([
            -2 * k**2 * q - a11**2 + 2 * k * a12 + a12**2,
            a11 * a12 + a12 * a22 + k * (-a11 + a22),
            k**2 * q - 2 * k * a12 + a12**2 - a22**2,
        ])

    def jac(v):
        a11, a12, a22 = v
        return np.array([
            [-2 * a11, 2 * k + 2 * a12, 0.0],
            [a12 - k, a11 + a22, a12 + k],
            [0.0, 2 * a12 - 2 * k, -2 * a22],
        ])

    for _ in range(20):
        step = np.linalg.solve(jac(x), -f(x))
        x = x + step
        if np.max(np.abs(step)) < 1e-16 * max(1.0, np.max(np.abs(x))):
            break
    if np.any(x <= 0):
        raise ParameterDomainError(f"reduced equations lost positivity at q={q}")
    a11, a12, a22 = map(float, x)
    return AMatrix(a11=a11, a12=a12, a13=0.0, a14=0.0, a22=a22, a23=0.0, a24=0.0,
                   a33=1.0, a34=0.0, a44=1.0)


# -- perturbation series ---------------------------------------------------------

def _solve_scaled(J: np.ndarray, rhs: np.ndarray, p: QuadraticParams) -> np.ndarray:
    S, D = row_scales(p), unknown_scales(p)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        Js = J / S[:, None] * D[None, :]
        cond = np.linalg.cond(Js) if np.all(np.isfinite(Js)) else math.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise ResonanceError(f"correction system is singular (cond {cond:.3g}); too close to resonance")
    return D * np.linalg.solve(Js, rhs / S)


def perturbation_series(p: QuadraticParams, order: int = 2) -> AMatrix:
    """Expansion ``a = a0 + gamma_bar a1 + gamma_bar^2 a2`` at fixed q and detuning.

    The corrections solve the linearized equations around the decoupled
    solution.  The residuals are quadratic in (a, g), so the second
    derivative along the first-order direction is exact from a symmetric
    difference.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    gb = p.gamma_bar
    if gb > GAMMA_BAR_WARN:
        warnings.warn(f"gamma_bar = {gb:.3g} is not small; the series may be poor", stacklevel=2)
    a0 = zeroth_order_seed(p.q, p.kappa).to_array()
    if order == 0:
        return AMatrix.from_array(a0)
    q, d = p.q, p.delta
    c = math.sqrt(d) / SQRT2  # dg/dgamma_bar
    J0 = _jacobian(a0, q, d, 0.0)
    a1 = _solve_scaled(J0, -_dg(a0) * c, p)
    out = a0 + gb * a1
    if order == 2:
        v = np.append(a1, c)
        t = 1.0 / np.max(np.abs(v))

        def F(z):
            return _residuals(z[:10], q, d, z[10])

        z0 = np.append(a0, 0.0)
        d2 = (F(z0 + t * v) + F(z0 - t * v) - 2 * F(z0)) / t**2
        a2 = _solve_scaled(J0, -d2, p)
        out = out + 0.5 * gb**2 * a2
    return AMatrix.from_array(out)


# -- Newton solve ------------------------------------------------------------

@dataclass
class ContinuationStep:
    gamma_bar: float
    iterations: int
    residual_norm: float


@dataclass
class SolveReport:
    a: AMatrix
    residual_norm: float
    iterations: int
    seed_path: list[ContinuationStep] = field(default_factory=list)
    params: QuadraticParams | None = None

    def to_json(self) -> dict:
        p = self.params
        out = {
            "coefficients": self.a.to_dict(),
            "residual_norm": self.residual_norm,
            "residual_norm_scaling": "rows divided by (1,1,g,g,1,g,g,1,g^2,kappa-1)",
            "iterations": self.iterations,
            "continuation": [asdict(s) for s in self.seed_path],
            "min_eig_real_part": self.a.min_real_eigenvalue(),
        }
        if p is not None:
            out.update(q=p.q, kappa_minus_one=p.delta, gamma=p.gamma, g=p.g,
                       gamma_bar=p.gamma_bar, kappa_mode=p.mode,
                       consistency_defect=p.consistency_defect)
        return out


def _newton(u: np.ndarray, p: QuadraticParams, tol: float, max_iter: int):
    """Damped Newton with Armijo backtracking on the scaled residual 2-norm."""
    S, D = row_scales(p), unknown_scales(p)
    q, d, g = p.q, p.delta, p.g

    def r(u):
        return _residuals(D * u, q, d, g) / S

    ru = r(u)
    norm = np.linalg.norm(ru)
    best = (norm, u.copy())
    for it in range(1, max_iter + 1):
        if norm < tol:
            return u, norm, it - 1
        Js = _jacobian(D * u, q, d, g) / S[:, None] * D[None, :]
        try:
            step = np.linalg.solve(Js, -ru)
        except np.linalg.LinAlgError:
            step = sla.lstsq(Js, -ru)[0]
        lam = 1.0
        while lam > 2.0**-40:
            trial = u + lam * step
            rt = r(trial)
            nt = np.linalg.norm(rt)
            if np.isfinite(nt) and nt <= (1 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
        else:
            raise SolverError(f"line search stalled at residual {norm:.3g}",
                              best=AMatrix.from_array(D * best[1]))
        u, ru, norm = trial, rt, nt
        if norm < best[0]:
            best = (norm, u.copy())
    if norm < tol:
        return u, norm, max_iter
    raise SolverError(f"no convergence in {max_iter} iterations (residual {norm:.3g})",
                      best=AMatrix.from_array(D * best[1]))


def solve_ground_state(p: QuadraticParams, seed: AMatrix | None = None, *,
                       tol: float = 1e-12, max_iter: int = 200,
                       steps: int = 16) -> SolveReport:
    """Solve the ten equations by damped Newton.

    With no ``seed``, start from the decoupled solution and continue in
    ``gamma_bar`` over ``steps`` geometric stages (ratio 2) up to the target.
    A given seed is used directly at the target.  Raises
    :class:`NonNormalizableError` if the converged Re A is not positive
    definite.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    path: list[ContinuationStep] = []
    total = 0
    if seed is not None:
        stages = [p]
        a = seed.to_array()
    elif p.gamma == 0.0:
        stages = [p]
        a = zeroth_order_seed(p.q, p.kappa).to_array()
    else:
        n = max(1, steps)
        gbs = [p.gamma_bar * 2.0 ** (j - n) for j in range(1, n)]
        stages = [p.with_gamma_bar(gb) for gb in gbs] + [p]
        a = zeroth_order_seed(p.q, p.kappa).to_array()
    prev = None
    for stage in stages:
        # Secant predictor in gamma_bar from the last two stages.
        guess = a
        if prev is not None:
            (gb0, a_old), gb1 = prev, path[-1].gamma_bar
            guess = a + (a - a_old) * (stage.gamma_bar - gb1) / (gb1 - gb0)
        u0 = guess / unknown_scales(stage)
        try:
            u, norm, its = _newton(u0, stage, tol, max_iter)
        except SolverError:
            if guess is a:
                raise
            u, norm, its = _newton(a / unknown_scales(stage), stage, tol, max_iter)
        total += its
        a_new = u * unknown_scales(stage)
        if path:
            prev = (path[-1].gamma_bar, a)
        path.append(ContinuationStep(stage.gamma_bar, its, float(norm)))
        a = a_new
    am = AMatrix.from_array(a)
    if not am.is_normalizable():
        raise NonNormalizableError(
            f"Re A is not positive definite (min eigenvalue {am.min_real_eigenvalue():.3g})"
        )
    return SolveReport(a=am, residual_norm=path[-1].residual_norm, iterations=total,
                       seed_path=path, params=p)


TABLE1 = AMatrix(a11=0.51160, a12=0.78164, a13=7.50e-7, a14=4.50e-6, a22=0.06270,
                 a23=-5.33e-7, a24=-7.68e-7, a33=1.0, a34=1.49e-12, a44=0.50751)
TABLE2 = AMatrix(a11=0.51160, a12=0.78164, a13=7.50e-7, a14=4.668e-6, a22=0.06270,
                 a23=-5.33e-7, a24=-1.34e-6, a33=1.0, a34=1.40e-12, a44=0.00532)
