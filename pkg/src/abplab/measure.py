"""Doubling bounds, the scaled L^p integral, tail-sum bracketing, Vitali covers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import CurvatureParams, _log_doubling
from .fields import ScalarField
from .geometry import GeodesicBallGrid, ModelSpace
from .report import CheckReport, check_le

__all__ = ["BallFamily", "doubling_check", "integral_I", "lp_distribution_check",
           "vitali_cover", "vitali_verify"]


@dataclass
class BallFamily:
    model: ModelSpace
    centers: np.ndarray   # (n, embedding_dim)
    radii: np.ndarray     # (n,)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, float)
        self.radii = np.asarray(self.radii, float)
        if len(self.centers) != len(self.radii):
            raise ValueError("centers and radii must align")
        if np.any(self.radii <= 0):
            raise ValueError("radii must be positive")
        if not np.all(np.isfinite(self.radii)):
            raise ValueError("the family needs bounded radii")


def doubling_check(m: ModelSpace, params: CurvatureParams, center,
                   r1: float, r2: float) -> CheckReport:
    """nu[B_r1] / nu[B_r2] <= D_{K,N,R} (r1/r2)^{N eta} for nested balls.

    Also checks the plain two-ball form nu[B_{2 r2}] <= D nu[B_{r2}].
    """
    if not (0 < r2 < r1 <= params.R):
        raise ValueError("need 0 < r2 < r1 <= R")
    if r1 >= m.cut_radius:
        raise ValueError("outer ball exceeds the cut radius")
    K, N, R = params.K, params.N, params.R
    D = math.exp(_log_doubling(K, N, R))
    # the iteration pairing: the exponent is log2 of the same doubling
    # constant that appears as the prefactor
    eta = _log_doubling(K, N, R) / (N * math.log(2.0))
    big = m.ball_measure(center, r1).value
    small = m.ball_measure(center, r2).value
    lhs = big / small
    rhs = D * (r1 / r2) ** (N * eta)
    rep = check_le("doubling-ratio", "doubling-estimate", lhs, rhs, rel_tol=1e-9,
                   r1=r1, r2=r2, doubling_constant=D, eta=eta)
    if 2 * r2 < m.cut_radius:
        two = m.ball_measure(center, 2 * r2).value / small
        rep.diagnostics["two_ball_ratio"] = two
        rep.passed = rep.passed and two <= D * (1 + 1e-9)
    return rep


def integral_I(m: ModelSpace, params: CurvatureParams, f: ScalarField,
               ball_radius: float, q: float, center=None) -> float:
    """r^2 (avg over B_r of |f|^{N q})^{1/(N q)} with grid quadrature.

    The average runs over the sub-ball of f's grid of the given radius
    (centered at the grid center unless told otherwise); exact for constants.
    """
    if q < 1.0:
        raise ValueError("exponent q must be >= 1")
    grid = f.grid
    c = grid.center if center is None else center
    mask = grid.mask_within(c, ball_radius)
    if not np.any(mask):
        raise ValueError("no grid nodes inside the requested ball")
    w = grid.weights[mask]
    v = np.abs(f.values[mask])
    p = params.N * q
    if math.isinf(p):
        raise ValueError("integral_I needs finite N")
    avg = _power_mean(v, w, p)
    return ball_radius**2 * avg


def _power_mean(v, w, p):
    """(sum w v^p / sum w)^(1/p), evaluated through logs for robustness."""
    v = np.asarray(v, float)
    if np.all(v == 0.0):
        return 0.0
    logs = np.full_like(v, -np.inf)
    pos = v > 0
    logs[pos] = np.log(v[pos])
    mlog = float(np.max(logs))
    s = float(np.sum(w * np.exp(p * (logs - mlog))))
    return math.exp(mlog + (math.log(s) - math.log(float(np.sum(w)))) / p)


def lp_distribution_check(f_values, weights, C: float, p: float,
                          k_cap: int = 10_000) -> CheckReport:
    """Bracket the p-th moment by the geometric tail sums.

    With lam(t) = relative measure of {f > t} (the upper tail) and
    S = sum_{k>=0} C^{pk} lam(C^k):

        (1 - C^{-p}) S + C^{-p} lam(1)  <=  avg f^p  <=  1 + (C^p - 1) S.

    The sum terminates exactly once C^k clears max f; a cap guards runaway
    growth and triggers a divergent-sum report.
    """
    if C <= 1.0:
        raise ValueError("C must exceed 1")
    if p <= 0:
        raise ValueError("p must be positive")
    f = np.asarray(f_values, float).reshape(-1)
    w = np.asarray(weights, float).reshape(-1)
    if np.any(f < 0):
        raise ValueError("distribution bracketing needs f >= 0")
    W = float(np.sum(w))
    fmax = float(np.max(f))
    S = 0.0
    k = 0
    terms = 0
    while True:
        t = C**k
        if t > fmax:
            break
        if k > k_cap:
            rep = check_le("lp-bracketing", "tail-sum-moment-bounds", 1.0, 0.0)
            rep.passed = False
            rep.diagnostics["divergent_sum"] = True
            return rep
        lam = float(np.sum(w[f > t])) / W
        S += (C ** (p * k)) * lam
        terms += 1
        k += 1
    lam1 = float(np.sum(w[f > 1.0])) / W
    moment = float(np.sum(w * f**p)) / W
    lower = (1.0 - C ** (-p)) * S + C ** (-p) * lam1
    upper = 1.0 + (C**p - 1.0) * S
    gap = max(lower - moment, moment - upper)
    return check_le("lp-bracketing", "tail-sum-moment-bounds", gap, 0.0,
                    abs_tol=1e-12 * max(1.0, moment),
                    lower=lower, moment=moment, upper=upper,
                    truncation_index=terms)


def vitali_cover(fam: BallFamily) -> np.ndarray:
    """Greedy quarter-radius selection, largest balls first.

    Selected quarter-balls are pairwise disjoint, and every center of the
    family lies in some selected full ball.
    """
    n = len(fam.radii)
    if n == 0:
        raise ValueError("empty ball family")
    order = np.argsort(-fam.radii, kind="stable")
    chosen: list[int] = []
    for i in order:
        ok = True
        for j in chosen:
            d = float(fam.model.distance(fam.centers[i], fam.centers[j]))
            if d < 0.25 * (fam.radii[i] + fam.radii[j]):
                ok = False
                break
        if ok:
            chosen.append(int(i))
    return np.array(chosen, dtype=np.int64)


def vitali_verify(fam: BallFamily, selected: np.ndarray) -> CheckReport:
    """Exhaustive disjointness and coverage audit of a selection."""
    sel = np.asarray(selected, dtype=np.int64)
    worst_overlap = -math.inf
    for ii, i in enumerate(sel):
        for j in sel[ii + 1:]:
            d = float(fam.model.distance(fam.centers[i], fam.centers[j]))
            worst_overlap = max(worst_overlap, 0.25 * (fam.radii[i] + fam.radii[j]) - d)
    uncovered = 0
    for i in range(len(fam.radii)):
        d = fam.model.distance(fam.centers[i], fam.centers[sel])
        if not np.any(d <= fam.radii[sel] + 1e-12):
            uncovered += 1
    rep = check_le("vitali-cover", "quarter-radius-covering",
                   max(worst_overlap, float(uncovered)), 0.0,
                   n_selected=int(len(sel)), uncovered_centers=uncovered,
                   worst_quarter_overlap=worst_overlap)
    return rep
