"""Linear stability of the rotating-frame equilibria and the R-r0 stability map.

The spectrum of the 10x10 Jacobian always holds two structural pieces: a
zero mode from the rotational symmetry (a 2x2 Jordan block, since turning the
orbit is free while changing its angular momentum is not) and the decoupled
z oscillation at +-i sqrt(q_r).  Both are known exactly, so the verdict is
taken on the remaining three pairs only.  The Jordan pair is removed
analytically before eigen-solving: a defective double zero perturbed by
rounding splits into +-sqrt(eps) ~ 1e-8, right at the classification
tolerance, which would otherwise speckle the map wherever q is close to 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cavity import CavityConfig, Constants, derive_mode_constants
from .classical import (
    PM, PP, PX, PY, PZ, QM, QP, SQRT2, X, Y, Z,
    Branch, Equilibrium, SystemParams, equilibrium_state, jacobian,
)
from .errors import NumericalError, TrojanCavityError

DEFAULT_TOL = 1e-8
PLANAR = (X, Y, PX, PY, QP, QM, PP, PM)

# Canonical pairs (coordinate, momentum) in the full state order.
_PAIRS = ((X, PX), (Y, PY), (Z, PZ), (QP, PP), (QM, PM))


def symplectic_form(pairs=_PAIRS, n: int = 10) -> np.ndarray:
    om = np.zeros((n, n))
    for q, p in pairs:
        om[q, p] = 1.0
        om[p, q] = -1.0
    return om


OMEGA_SYMP = symplectic_form()


@dataclass(frozen=True)
class LinearizedSystem:
    """Jacobian at an equilibrium together with its raw spectrum."""

    jacobian: np.ndarray
    eigenvalues: np.ndarray
    q_r: float
    equilibrium: Equilibrium


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of one equilibrium.

    ``max_real_part`` is taken over the three coupled electron-field pairs,
    after the rotational zero mode and the z mode have been split off.
    ``spectrum`` lists all ten eigenvalues with the structural ones exact.
    """

    stable: bool
    max_real_part: float
    zero_modes: int
    z_mode_freq: float
    coupled: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)
    jordan_residual: float = 0.0


def linearize(eq: Equilibrium) -> LinearizedSystem:
    J = jacobian(eq.state, eq.params)
    try:
        ev = sla.eigvals(J)
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
        raise NumericalError(f"eigensolver failed (cond ~ {np.linalg.cond(J):.3g}): {exc}")
    return LinearizedSystem(jacobian=J, eigenvalues=ev, q_r=eq.params.q_r, equilibrium=eq)


def rotation_tangent(p: SystemParams, phi: float) -> np.ndarray:
    """d(equilibrium state)/d(phi): the null vector of the Jacobian."""
    r0, kappa, gamma, d = p.r0, p.kappa, p.gamma, p.delta
    c, s = math.cos(phi), math.sin(phi)
    plus = gamma * r0 / ((2.0 + d) * SQRT2)
    minus = gamma * r0 / (d * SQRT2)
    v = np.zeros(10)
    v[X], v[Y] = -r0 * s, r0 * c
    v[PX], v[PY] = -kappa * r0 * c, -kappa * r0 * s
    v[QP], v[QM] = -plus * c, -minus * c
    v[PP], v[PM] = -plus * s, minus * s
    return v


def _eigvals_balanced(M: np.ndarray) -> np.ndarray:
    try:
        Mb, _ = sla.matrix_balance(M, permute=False)
        return sla.eigvals(Mb)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(
            f"eigensolver failed (cond ~ {np.linalg.cond(M):.3g}): {exc}"
        ) from None


def coupled_block(lin: LinearizedSystem) -> tuple[np.ndarray, float]:
    """6x6 restriction of the planar dynamics to the symplectic complement of the zero mode.

    Returns the matrix and the residual of the Jordan chain
    ``J v0 = 0, J w = v0`` used for the deflation, relative to ``|J| |w|``.
    """
    eq = lin.equilibrium
    idx = np.array(PLANAR)
    J = lin.jacobian[np.ix_(idx, idx)]
    v0 = rotation_tangent(eq.params, eq.phi)[idx]
    w = sla.lstsq(J, v0)[0]
    scale = np.linalg.norm(J, 2) * np.linalg.norm(w) + np.linalg.norm(v0)
    resid = max(np.linalg.norm(J @ v0), np.linalg.norm(J @ w - v0)) / scale
    om = OMEGA_SYMP[np.ix_(idx, idx)]
    B = sla.null_space(np.vstack([v0 @ om, w @ om]))
    return B.T @ J @ B, resid


def eigenfrequencies(lin: LinearizedSystem, tol: float = DEFAULT_TOL) -> StabilityVerdict:
    """Split off the zero and z modes and classify the rest.

    Stable when every remaining eigenvalue has ``|Re| < tol``.
    """
    M, resid = coupled_block(lin)
    coupled = _eigvals_balanced(M)
    zz = lin.jacobian[PZ, Z]
    z_freq = math.sqrt(-zz) if zz < 0 else float("nan")
    max_re = float(np.max(np.abs(coupled.real)))
    spectrum = np.concatenate([[0.0, 0.0], [1j * z_freq, -1j * z_freq], coupled])
    zero = int(np.sum(np.abs(spectrum) < tol))
    return StabilityVerdict(
        stable=bool(max_re < tol) and math.isfinite(z_freq),
        max_real_part=max_re,
        zero_modes=zero,
        z_mode_freq=z_freq,
        coupled=coupled,
        spectrum=spectrum,
        jordan_residual=float(resid),
    )


def classify(p: SystemParams, phi: float = 0.0, tol: float = DEFAULT_TOL) -> StabilityVerdict:
    return eigenfrequencies(linearize(equilibrium_state(p, phi)), tol)


# -- R-r0 map ---------------------------------------------------------------

UNDEFINED, UNSTABLE, STABLE = -1, 0, 1
R0_UNIT_BOHR = 3600.0


@dataclass
class StabilityMap:
    """Grid of verdicts over cavity radius ``R`` (m) and ``u = r0 / (3600 a0)``.

    ``status[i, j]`` refers to ``R[i]``, ``u[j]``: 1 stable, 0 unstable,
    -1 undefined (no equilibrium on the branch).  ``boundary`` is an (n, 2)
    array of (R, u) points on the stable/unstable interface.
    """

    R: np.ndarray
    u: np.ndarray
    status: np.ndarray
    max_real_part: np.ndarray
    boundary: np.ndarray
    L: float
    branch: Branch

    def rows(self):
        for i, R in enumerate(self.R):
            for j, u in enumerate(self.u):
                yield R, u, int(self.status[i, j]), float(self.max_real_part[i, j])


def _cell(modes, u: float, branch: Branch, tol: float) -> tuple[int, float]:
    r0 = u * R0_UNIT_BOHR * modes.config.constants.a0 / modes.length_unit
    try:
        p = SystemParams.from_r0(modes.q_tilde, modes.gamma, r0, branch)
        v = classify(p, tol=tol)
    except TrojanCavityError:
        return UNDEFINED, float("nan")
    return (STABLE if v.stable else UNSTABLE), v.max_real_part


def _refine(modes, lo: float, hi: float, s_lo: int, branch: Branch, tol: float,
            steps: int) -> float:
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if _cell(modes, mid, branch, tol)[0] == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _column(args):
    R, L, constants, u_values, branch, tol, refine = args
    modes = derive_mode_constants(CavityConfig(R, L, constants))
    cells = [_cell(modes, u, branch, tol) for u in u_values]
    status = np.array([c[0] for c in cells], dtype=int)
    mrp = np.array([c[1] for c in cells])
    points = []
    for j in range(len(u_values) - 1):
        a, b = status[j], status[j + 1]
        if {a, b} == {STABLE, UNSTABLE}:
            lo, hi = u_values[j], u_values[j + 1]
            ub = _refine(modes, lo, hi, a, branch, tol, refine) if refine else 0.5 * (lo + hi)
            points.append((R, ub))
    return status, mrp, points


def stability_map(R_values, u_values, L: float = 1e-2, *,
                  constants: Constants | None = None,
                  branch: Branch | str = Branch.TROJAN,
                  tol: float = DEFAULT_TOL, refine: int = 0,
                  workers: int = 1) -> StabilityMap:
    """Scan the ``(R, r0)`` plane at fixed cavity length ``L``.

    Each cell derives the mode constants for its ``R`` and the rotation
    frequency on ``branch`` before linearizing.  Boundary points sit on
    grid edges where the verdict flips along ``u``; with ``refine > 0``
    each is bisected that many times.  Columns are independent, so
    ``workers > 1`` fans them out to a process pool; results are merged by
    index and do not depend on the worker count.
    """
    R_values = np.asarray(R_values, dtype=float)
    u_values = np.asarray(u_values, dtype=float)
    if np.any(R_values <= 0) or np.any(u_values <= 0) or L <= 0:
        raise ValueError("R, r0 and L must be positive")
    constants = constants or Constants()
    branch = Branch(branch)
    jobs = [(R, L, constants, u_values, branch, tol, refine) for R in R_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_column, jobs))
    else:
        results = [_column(j) for j in jobs]
    status = np.vstack([r[0] for r in results])
    mrp = np.vstack([r[1] for r in results])
    pts = [pt for r in results for pt in r[2]]
    boundary = np.array(pts, dtype=float).reshape(-1, 2)
    return StabilityMap(R=R_values, u=u_values, status=status, max_real_part=mrp,
                        boundary=boundary, L=L, branch=branch)


def boundary_u(smap: StabilityMap, R: float) -> np.ndarray:
    """Boundary ``u`` values recorded for grid radius ``R``."""
    sel = np.isclose(smap.boundary[:, 0], R, rtol=0, atol=1e-15)
    return smap.boundary[sel, 1]
