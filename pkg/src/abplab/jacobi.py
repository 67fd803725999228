"""Jacobi matrix ODE along geodesics and the weighted determinant functional.

The matrix system J'' + R(t) J = 0 is integrated with classical fixed-step
fourth-order Runge-Kutta in a parallel frame aligned with the initial
velocity.  On the constant-curvature models that frame makes R literally
constant: diag(0, k |v|^2) on the sphere, diag(0, -k |v|^2) on the
hyperboloid, zero on the flat charts.

The per-time diagnostics feed the concavity comparisons: with

    D_N(t) = (weight_ratio(t) * det J(t))^(1/N),     N < inf
    D_inf(t) = log(weight_ratio(t) * det J(t)),

centered second differences are tested against the curvature form along the
geodesic, and against the radius-uniform bound 4 (K/N) r^2 D_N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fields import hess_form
from .geometry import ModelSpace
from .report import CheckReport, check_le

__all__ = [
    "JacobiState",
    "curvature_matrix",
    "integrate_jacobi",
    "hessian_frame_components",
    "dn_functional",
    "verify_comparison",
    "verify_ode_structure",
    "solve_jacobi_pair",
]


@dataclass
class JacobiState:
    model: ModelSpace
    base: np.ndarray
    v: np.ndarray              # initial velocity (gamma'(0))
    times: np.ndarray          # (T,)
    J: np.ndarray              # (T, 2, 2)
    Jdot: np.ndarray           # (T, 2, 2)
    weight_ratio: np.ndarray   # exp(-V(gamma)) / exp(-V(base)) per time
    gamma: np.ndarray          # geodesic samples (T, embedding_dim)
    frame: tuple               # parallel frame (e1, e2) at the base

    def det(self) -> np.ndarray:
        return np.linalg.det(self.J)

    def wronskian_drift(self) -> float:
        """Max drift of J^T Jdot - Jdot^T J, conserved when R is symmetric."""
        W = np.einsum("tij,tik->tjk", self.J, self.Jdot) \
            - np.einsum("tij,tik->tjk", self.Jdot, self.J)
        return float(np.max(np.abs(W - W[0])))


def curvature_matrix(m: ModelSpace, v_norm_sq: float) -> np.ndarray:
    """Constant R in the frame (velocity direction, normal)."""
    sec = m.sectional()
    return np.diag([0.0, sec * v_norm_sq])


def hessian_frame_components(m: ModelSpace, H, base, frame) -> np.ndarray:
    """2x2 symmetric components of an embedding Hessian in the given frame."""
    e1, e2 = frame
    out = np.array([
        [hess_form(m, H, e1, e1), hess_form(m, H, e1, e2)],
        [hess_form(m, H, e2, e1), hess_form(m, H, e2, e2)],
    ])
    return 0.5 * (out + out.T)


def _rk4_linear(Rfun: Callable, J0, Jd0, n_steps: int, t_max: float = 1.0):
    """Classical RK4 for J'' = -R(t) J on [0, t_max] with fixed steps."""
    h = t_max / n_steps
    T = n_steps + 1
    J = np.empty((T, 2, 2))
    Jd = np.empty((T, 2, 2))
    J[0], Jd[0] = J0, Jd0
    for i in range(n_steps):
        t = i * h
        j, jd = J[i], Jd[i]
        k1j, k1d = jd, -Rfun(t) @ j
        k2j, k2d = jd + 0.5 * h * k1d, -Rfun(t + 0.5 * h) @ (j + 0.5 * h * k1j)
        k3j, k3d = jd + 0.5 * h * k2d, -Rfun(t + 0.5 * h) @ (j + 0.5 * h * k2j)
        k4j, k4d = jd + h * k3d, -Rfun(t + h) @ (j + h * k3j)
        J[i + 1] = j + (h / 6.0) * (k1j + 2 * k2j + 2 * k3j + k4j)
        Jd[i + 1] = jd + (h / 6.0) * (k1d + 2 * k2d + 2 * k3d + k4d)
    return J, Jd


def integrate_jacobi(m: ModelSpace, x, initial_hessian, v, n_steps: int = 256) -> JacobiState:
    """Jacobi flow data for the geodesic t -> exp_x(t v).

    initial_hessian: 2x2 symmetric matrix (frame components of Hess u at x,
    in the frame returned with the state: e1 along v, e2 normal).
    """
    if n_steps < 64:
        raise ValueError("n_steps must be at least 64")
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    H0 = np.asarray(initial_hessian, float)
    if np.max(np.abs(H0 - H0.T)) > 1e-12:
        raise ValueError("initial Hessian must be symmetric")
    L = float(m.tangent_norm(x, v))
    if L >= m.cut_radius:
        raise ValueError("initial speed exceeds the cut radius")
    if L > 0:
        e1 = v / L
        e2 = m.rotate90(x, e1)
    else:
        e1, e2 = m.tangent_frame(x)
    R = curvature_matrix(m, L * L)
    J, Jd = _rk4_linear(lambda t: R, np.eye(2), H0, n_steps)
    times = np.linspace(0.0, 1.0, n_steps + 1)
    gamma = m.exp(x, times[:, None] * v[None, :])
    wr = np.exp(-(m.weight_V(gamma) - m.weight_V(x)))
    return JacobiState(m, x, v, times, J, Jd, wr, gamma, (e1, e2))


def dn_functional(state: JacobiState, N) -> np.ndarray:
    """D_N(t) samples, truncated at the first nonpositive determinant.

    Raises with the crossing time when det J dips nonpositive before t = 1,
    reporting only the valid prefix is the caller's job via the mask below.
    """
    det = state.det() * state.weight_ratio
    bad = np.flatnonzero(det <= 0.0)
    if bad.size and bad[0] == 0:
        raise ValueError("determinant nonpositive at t = 0")
    ok = det > 0
    if bad.size:
        ok[bad[0]:] = False  # the first zero ends the valid sample window
    out = np.full_like(det, np.nan)
    if math.isinf(N):
        out[ok] = np.log(det[ok])
    else:
        out[ok] = det[ok] ** (1.0 / N)
    return out


def first_nonpositive_time(state: JacobiState) -> Optional[float]:
    det = state.det() * state.weight_ratio
    bad = np.flatnonzero(det <= 0.0)
    return float(state.times[bad[0]]) if bad.size else None


def verify_comparison(state: JacobiState, m: ModelSpace, N, ledger_K: float,
                      r: Optional[float] = None, slack: float = 1e-5) -> CheckReport:
    """Concavity comparison for D_N along the geodesic.

    Checks, at interior sample times with valid determinant,

        D_N'' <= -(1/N) Ric_{N,nu}(gamma') D_N     (N < inf)
        D_inf'' <= -Ric_{inf,nu}(gamma')           (N = inf)

    by centered second differences, plus the radius-uniform form
    D_N'' <= 4 (K/N) r^2 D_N  with |gamma'| <= 2r.
    """
    D = dn_functional(state, N)
    t = state.times
    h = t[1] - t[0]
    ok = np.isfinite(D)
    interior = ok[:-2] & ok[1:-1] & ok[2:]
    if interior.sum() < 8:
        raise ValueError("sampling too coarse: too few valid interior times")
    idx = np.flatnonzero(interior) + 1
    d2 = (D[idx + 1] - 2.0 * D[idx] + D[idx - 1]) / (h * h)
    ric = m.ricci_nu_quadratic(state.gamma[idx], _velocity(state, idx), N)
    if math.isinf(N):
        rhs = -ric
        rhs_uniform = None if r is None else np.full_like(rhs, 4.0 * ledger_K * r * r)
    else:
        rhs = -(ric / N) * D[idx]
        rhs_uniform = None if r is None else 4.0 * (ledger_K / N) * r * r * D[idx]
    scale = max(1.0, float(np.max(np.abs(d2))), float(np.max(np.abs(rhs))))
    gap = float(np.max(d2 - rhs))
    rep = check_le("jacobi-concavity", "determinant-comparison",
                   gap, 0.0, abs_tol=slack * scale,
                   n_interior=int(interior.sum()), fd_scale=scale)
    if rhs_uniform is not None:
        gap_u = float(np.max(d2 - rhs_uniform))
        rep.diagnostics["uniform_form_gap"] = gap_u
        rep.passed = rep.passed and gap_u <= slack * scale
    return rep


def _velocity(state: JacobiState, idx) -> np.ndarray:
    """gamma'(t) in embedding coordinates (exact for the model geodesics)."""
    m = state.model
    x, v = state.base, state.v
    t = state.times[idx]
    if m.is_flat_chart:
        return np.broadcast_to(v, (len(idx), v.shape[-1])).copy()
    L = float(m.tangent_norm(x, v))
    if L == 0.0:
        return np.zeros((len(idx), v.shape[-1]))
    sk = math.sqrt(m.k)
    s = sk * L * t
    if m.kind == "sphere":
        return (-sk * L * np.sin(s))[:, None] * x[None, :] + np.cos(s)[:, None] * v[None, :]
    return (sk * L * np.sinh(s))[:, None] * x[None, :] + np.cosh(s)[:, None] * v[None, :]


def solve_jacobi_pair(Rfun: Callable, n_steps: int = 512):
    """The two normalized Jacobi matrices: J10 (J=I, J'=0) and J01 (J=0, J'=I)."""
    J10, J10d = _rk4_linear(Rfun, np.eye(2), np.zeros((2, 2)), n_steps)
    J01, J01d = _rk4_linear(Rfun, np.zeros((2, 2)), np.eye(2), n_steps)
    return J10, J01


def verify_ode_structure(Rfun: Callable, rng=None, n_steps: int = 512,
                         n_random: int = 32, t_min: float = 0.05) -> CheckReport:
    """Structural facts about S(t) = J01(t)^{-1} J10(t).

    Asserts symmetry and monotone decrease of the eigenvalues of S on a time
    grid, and the equivalence, for random symmetric initial slopes B:

        B + S(1) >= 0   <=>   det J(t) > 0 on [0, 1)

    with J(0) = I, J'(0) = B.  Slopes within 0.05 of the spectral boundary
    are resampled to keep the equivalence numerically decidable.
    """
    J10, J01 = solve_jacobi_pair(Rfun, n_steps)
    times = np.linspace(0.0, 1.0, n_steps + 1)
    use = times >= t_min
    dets = np.linalg.det(J01[use])
    if np.any(np.abs(dets) < 1e-12):
        raise ValueError("J01 singular on (0,1]: conjugate-point configuration")
    S = np.linalg.solve(J01[use], J10[use])
    sym = float(np.max(np.abs(S - np.transpose(S, (0, 2, 1)))))
    eigs = np.linalg.eigvalsh(0.5 * (S + np.transpose(S, (0, 2, 1))))
    increase = float(np.max(np.diff(eigs, axis=0)))
    rep = check_le("jacobi-slope-matrix", "normalized-slope-structure",
                   max(sym - 1e-8, increase - 1e-8), 0.0,
                   symmetry_defect=sym, worst_eig_increase=increase)
    if rng is None:
        return rep
    S1 = S[-1]
    mism = 0
    tested = 0
    while tested < n_random:
        B = rng.normal(size=(2, 2)) * 1.5
        B = 0.5 * (B + B.T)
        margin = float(np.min(np.linalg.eigvalsh(B + S1)))
        if abs(margin) < 0.05:
            continue
        tested += 1
        J, _ = _rk4_linear(Rfun, np.eye(2), B, n_steps)
        detJ = np.linalg.det(J[:-1])  # [0, 1) open at the right end
        positive = bool(np.all(detJ > 0.0))
        if positive != (margin > 0.0):
            mism += 1
    rep.diagnostics["good_slope_equivalence_mismatches"] = mism
    rep.diagnostics["good_slope_equivalence_samples"] = tested
    rep.passed = rep.passed and mism == 0
    return rep
