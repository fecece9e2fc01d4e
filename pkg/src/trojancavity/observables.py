"""Second moments, uncertainty products, squeezing and Wigner cross-sections.

For ``psi ~ exp(-X^T A X / 2)`` with ``A = R + iS`` the moments are

    <X X^T>                 = R^-1 / 2
    <P P^T>                 = (R + S R^-1 S) / 2
    <(X_k P_j + P_j X_k)/2> = -(R^-1 S)_kj / 2

with ``X = (x, y, Qp, Qm)`` and conjugate momenta ``(px, py, Pp, Pm)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStateError, NonNormalizableError
from .gaussian import AMatrix

VARIABLES = ("x", "y", "Qp", "Qm", "px", "py", "Pp", "Pm")
_POS = {n: i for i, n in enumerate(VARIABLES)}
# Symplectic form for the (positions, momenta) ordering above.
OMEGA = np.block([[np.zeros((4, 4)), np.eye(4)], [-np.eye(4), np.zeros((4, 4))]])

PLANES = {"Qp_Pp": ("Qp", "Pp"), "Qm_Pm": ("Qm", "Pm")}


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetrized second moments over ``VARIABLES`` in natural units."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.shape != (8, 8):
            raise ValueError(f"covariance must be 8x8, got {s.shape}")
        if not np.allclose(s, s.T, rtol=1e-12, atol=0):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "sigma", 0.5 * (s + s.T))

    def __getitem__(self, names: tuple[str, str]) -> float:
        a, b = names
        return float(self.sigma[_POS[a], _POS[b]])

    def anticommutator(self, a: str, b: str) -> float:
        """``<ab + ba>``."""
        return 2.0 * self[a, b]

    def physicality_margin(self) -> float:
        """Smallest eigenvalue of ``sigma + i Omega / 2`` relative to ``max(1, |sigma|)``."""
        ev = np.linalg.eigvalsh(self.sigma + 0.5j * OMEGA)
        return float(ev[0] / max(1.0, np.linalg.norm(self.sigma, 2)))

    def is_physical(self, tol: float = 1e-10) -> bool:
        return self.physicality_margin() >= -tol

    def mode_block(self, plane: str) -> np.ndarray:
        """Marginal 2x2 covariance of one field mode, ``(Q, P)`` order."""
        if plane not in PLANES:
            raise ValueError(f"plane must be one of {sorted(PLANES)}")
        idx = [_POS[n] for n in PLANES[plane]]
        return self.sigma[np.ix_(idx, idx)]

    @classmethod
    def vacuum(cls) -> CovarianceMatrix:
        return cls(0.5 * np.eye(8))


def covariance_from_a(a: AMatrix | np.ndarray) -> CovarianceMatrix:
    """Moments of the Gaussian state with complex symmetric matrix ``A``."""
    if isinstance(a, AMatrix):
        R, S = a.real_part, a.imag_part
    else:
        A = np.asarray(a)
        R, S = A.real, A.imag
    if np.linalg.eigvalsh(R)[0] <= 0:
        raise NonNormalizableError("Re A is not positive definite")
    Rinv = np.linalg.inv(R)
    pos = 0.5 * Rinv
    mom = 0.5 * (R + S @ Rinv @ S)
    cross = -0.5 * Rinv @ S
    sigma = np.block([[pos, cross], [cross.T, mom]])
    return CovarianceMatrix(0.5 * (sigma + sigma.T))


# -- tables --------------------------------------------------------------------

ELECTRON_KEYS = ("<xx>", "<yy>", "<pxpx>", "<pypy>", "<xy>", "<pxpy>",
                 "<xpx+pxx>", "<ypy+pyy>", "<xpy+pyx>", "<ypx+pxy>")
FIELD_KEYS = ("<QpQp>", "<QmQm>", "<PpPp>", "<PmPm>", "<QpQm>", "<PpPm>",
              "<QpPp+PpQp>", "<QmPm+PmQm>", "<QpPm+PmQp>", "<QmPp+PpQm>")


def electron_moments(cov: CovarianceMatrix, r0: float = 1.0, kappa: float = 1.0) -> dict:
    """Electron moments with lengths in ``r0`` and momenta in ``kappa * r0``.

    ``r0 = kappa = 1`` leaves them in natural units.
    """
    lx, lp = r0, kappa * r0
    return {
        "<xx>": cov["x", "x"] / lx**2,
        "<yy>": cov["y", "y"] / lx**2,
        "<pxpx>": cov["px", "px"] / lp**2,
        "<pypy>": cov["py", "py"] / lp**2,
        "<xy>": cov["x", "y"] / lx**2,
        "<pxpy>": cov["px", "py"] / lp**2,
        "<xpx+pxx>": cov.anticommutator("x", "px") / (lx * lp),
        "<ypy+pyy>": cov.anticommutator("y", "py") / (lx * lp),
        "<xpy+pyx>": cov.anticommutator("x", "py") / (lx * lp),
        "<ypx+pxy>": cov.anticommutator("y", "px") / (lx * lp),
    }


def field_moments(cov: CovarianceMatrix) -> dict:
    return {
        "<QpQp>": cov["Qp", "Qp"],
        "<QmQm>": cov["Qm", "Qm"],
        "<PpPp>": cov["Pp", "Pp"],
        "<PmPm>": cov["Pm", "Pm"],
        "<QpQm>": cov["Qp", "Qm"],
        "<PpPm>": cov["Pp", "Pm"],
        "<QpPp+PpQp>": cov.anticommutator("Qp", "Pp"),
        "<QmPm+PmQm>": cov.anticommutator("Qm", "Pm"),
        "<QpPm+PmQp>": cov.anticommutator("Qp", "Pm"),
        "<QmPp+PpQm>": cov.anticommutator("Qm", "Pp"),
    }


@dataclass(frozen=True)
class UncertaintyCheck:
    lhs_x: float
    lhs_y: float
    bound: float

    @property
    def saturation_x(self) -> float:
        return self.lhs_x / self.bound

    @property
    def saturation_y(self) -> float:
        return self.lhs_y / self.bound


def uncertainty_from_moments(m: dict, bound: float) -> UncertaintyCheck:
    """Two-dimensional uncertainty products from an :func:`electron_moments` table."""
    lhs_x = (m["<xx>"] * m["<pxpx>"] + m["<xy>"] * m["<pxpy>"]
             - 0.25 * (m["<xpx+pxx>"] ** 2 + m["<xpy+pyx>"] * m["<ypx+pxy>"]))
    lhs_y = (m["<yy>"] * m["<pypy>"] + m["<xy>"] * m["<pxpy>"]
             - 0.25 * (m["<ypy+pyy>"] ** 2 + m["<ypx+pxy>"] * m["<xpy+pyx>"]))
    return UncertaintyCheck(lhs_x=lhs_x, lhs_y=lhs_y, bound=bound)


def uncertainty_check(cov: CovarianceMatrix, r0: float = 1.0, kappa: float = 1.0) -> UncertaintyCheck:
    """Evaluate both products in the ``(r0, kappa r0)`` unit system.

    The bound hbar^2/4 becomes ``(1 / (kappa r0^2))^2 / 4`` there.
    """
    bound = 0.25 / (kappa * r0 * r0) ** 2
    return uncertainty_from_moments(electron_moments(cov, r0, kappa), bound)


@dataclass(frozen=True)
class SqueezingReport:
    ratio_minus: float
    ratio_plus: float
    min_variance_minus: float
    min_variance_plus: float
    det_minus: float
    det_plus: float
    coupling_QpQm: float
    coupling_PpPm: float


def squeezing_metrics(cov: CovarianceMatrix) -> SqueezingReport:
    bm, bp = cov.mode_block("Qm_Pm"), cov.mode_block("Qp_Pp")
    return SqueezingReport(
        ratio_minus=bm[0, 0] / bm[1, 1],
        ratio_plus=bp[0, 0] / bp[1, 1],
        min_variance_minus=float(np.linalg.eigvalsh(bm)[0]),
        min_variance_plus=float(np.linalg.eigvalsh(bp)[0]),
        det_minus=float(np.linalg.det(bm)),
        det_plus=float(np.linalg.det(bp)),
        coupling_QpQm=abs(cov["Qp", "Qm"]),
        coupling_PpPm=abs(cov["Pp", "Pm"]),
    )


@dataclass(frozen=True)
class MomentReport:
    electron: dict
    field: dict
    uncertainty: UncertaintyCheck
    squeezing: SqueezingReport
    r0: float
    kappa: float

    @property
    def squeezing_ratio(self) -> float:
        return self.squeezing.ratio_minus

    def to_json(self) -> dict:
        u, s = self.uncertainty, self.squeezing
        return {
            "electron": self.electron,
            "electron_units": {"length": "r0", "momentum": "m*Omega*r0", "r0_natural": self.r0,
                               "kappa": self.kappa},
            "field": self.field,
            "field_units": "dimensionless quadratures",
            "uncertainty": {"lhs_x": u.lhs_x, "lhs_y": u.lhs_y, "bound": u.bound,
                            "saturation_x": u.saturation_x, "saturation_y": u.saturation_y},
            "squeezing": dict(s.__dict__),
        }


def moment_report(cov: CovarianceMatrix, r0: float, kappa: float) -> MomentReport:
    return MomentReport(
        electron=electron_moments(cov, r0, kappa),
        field=field_moments(cov),
        uncertainty=uncertainty_check(cov, r0, kappa),
        squeezing=squeezing_metrics(cov),
        r0=r0,
        kappa=kappa,
    )


# -- Wigner cross-sections --------------------------------------------------------

@dataclass(frozen=True)
class WignerSlice:
    """Reduced single-mode Wigner function on a grid of offsets from ``center``.

    ``grid[i, j]`` is W at ``(q[j], p[i])``; ``q`` and ``p`` are offsets
    from the classical quadratures ``center = (Q_eq, P_eq)``.
    """

    plane: str
    q: np.ndarray
    p: np.ndarray
    grid: np.ndarray
    center: tuple[float, float]
    sigma2: np.ndarray
    semantics: str = "marginal"
    extents: tuple[float, float, float, float] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "extents",
                           (float(self.q[0]), float(self.q[-1]), float(self.p[0]), float(self.p[-1])))

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.grid, self.q, axis=1), self.p))

    def sidecar(self) -> dict:
        return {
            "plane": self.plane,
            "center": {"Q": self.center[0], "P": self.center[1]},
            "axes": "offsets from center, dimensionless quadratures",
            "semantics": "marginal over all other variables (reduced single-mode Wigner function)",
            "sigma2": self.sigma2.tolist(),
            "extents": list(self.extents),
            "grid_integral": self.integral(),
        }


def wigner_slice(cov: CovarianceMatrix, plane: str, n: int = 201, width: float = 6.0,
                 center: tuple[float, float] = (0.0, 0.0)) -> WignerSlice:
    """Evaluate the reduced Wigner function of one mode.

    The grid spans ``+-width`` marginal standard deviations in each quadrature.
    """
    s2 = cov.mode_block(plane)
    det = float(np.linalg.det(s2))
    if not det > 0 or not np.all(np.isfinite(s2)):
        raise DegenerateStateError(f"reduced covariance of {plane} is singular (det {det:.3g})")
    inv = np.linalg.inv(s2)
    q = np.linspace(-width, width, n) * math.sqrt(s2[0, 0])
    p = np.linspace(-width, width, n) * math.sqrt(s2[1, 1])
    Q, P = np.meshgrid(q, p)
    quad = inv[0, 0] * Q**2 + 2 * inv[0, 1] * Q * P + inv[1, 1] * P**2
    W = np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(det))
    return WignerSlice(plane=plane, q=q, p=p, grid=W, center=tuple(map(float, center)), sigma2=s2)
