"""Contact sets: where concave distance-squared paraboloids touch u from below.

For an opening a > 0 and a vertex y, the touching functional is

    F_y(x) = u(x) + (a/2) rho^2(x, y),

minimized over the closed grid ball.  A vertex set E yields the contact set
A(a, E/Omega, u) as the union of all minimizers; by construction every vertex
is covered by at least one contact node.  The a/2 normalization matches the
paraboloid form -(a/2) rho^2 + c, which is the convention every downstream
gradient/Hessian identity relies on.

Exhaustive grid minimization is exact at node resolution; a vectorized
Riemannian Newton refinement upgrades contact locations to sub-cell accuracy
whenever the field carries closed-form derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fields import ScalarField, hess_form
from .geometry import GeodesicBallGrid, ModelSpace
from .report import CheckReport, check_le

__all__ = [
    "ContactPair",
    "ContactSet",
    "compute_contact_set",
    "gradient_contact_residual",
    "check_contact_location",
    "refine_contact_points",
    "dist_sq_half_grad_hess",
]


@dataclass(frozen=True)
class ContactPair:
    x: np.ndarray        # contact point
    y: np.ndarray        # vertex, in E
    a: float             # opening
    c: float             # paraboloid level c_y == achieved infimum
    min_value: float
    x_index: int         # flat node index of the contact node
    y_index: int


@dataclass
class ContactSet:
    model: ModelSpace
    grid: GeodesicBallGrid
    a: float
    vertex_indices: np.ndarray   # flat indices of E
    contact_of: np.ndarray       # primary contact node per vertex (same length)
    min_values: np.ndarray       # achieved infima per vertex
    ties: list = field(default_factory=list)  # (y_index, x_index) beyond the primary

    @property
    def node_indices(self) -> np.ndarray:
        """Distinct contact-node indices (the set A as grid nodes)."""
        extra = np.array([x for _, x in self.ties], dtype=np.int64)
        return np.unique(np.concatenate([self.contact_of, extra])) if len(self.ties) \
            else np.unique(self.contact_of)

    def pairs(self) -> list:
        pts = self.grid.flat_points()
        out = []
        order = np.lexsort((self.contact_of, self.vertex_indices))
        for i in order:
            yi, xi = int(self.vertex_indices[i]), int(self.contact_of[i])
            out.append(ContactPair(pts[xi], pts[yi], self.a,
                                   float(self.min_values[i]), float(self.min_values[i]),
                                   xi, yi))
        for yi, xi in sorted(self.ties):
            pos = int(np.searchsorted(self.vertex_indices, yi))
            out.append(ContactPair(pts[xi], pts[yi], self.a,
                                   float(self.min_values[pos]), float(self.min_values[pos]),
                                   int(xi), int(yi)))
        return out

    def covers_all_vertices(self) -> bool:
        return len(self.contact_of) == len(self.vertex_indices)


def _pairwise_dist_sq(m: ModelSpace, Y, X):
    """rho^2 between each y in Y (rows) and each x in X, vectorized."""
    if m.is_flat_chart:
        q = np.einsum("ij,ij->i", X, X)
        return q[None, :] - 2.0 * (Y @ X.T) + np.einsum("ij,ij->i", Y, Y)[:, None]
    if m.kind == "sphere":
        c = np.clip(m.k * (Y @ X.T), -1.0, 1.0)
        return (np.arccos(c) / math.sqrt(m.k)) ** 2
    c = np.maximum(-m.k * (Y @ (X @ np.diag([1.0, 1.0, -1.0])).T), 1.0)
    return (np.arccosh(c) / math.sqrt(m.k)) ** 2


def compute_contact_set(m: ModelSpace, u: ScalarField, a: float,
                        E: np.ndarray, Omega: Optional[GeodesicBallGrid] = None,
                        tie_tol: float = 1e-12, chunk: int = 128) -> ContactSet:
    """Exhaustive contact-set computation over the grid closure.

    Parameters
    ----------
    E : array of flat node indices (the vertex set, a subset of the grid).
    Omega : defaults to the grid carried by u.
    tie_tol : minimizers within tie_tol of the infimum are all retained.
    """
    grid = Omega if Omega is not None else u.grid
    E = np.asarray(E, dtype=np.int64)
    if E.size == 0:
        raise ValueError("empty vertex set E")
    if not a > 0:
        raise ValueError("opening a must be > 0")
    X = grid.flat_points()
    uf = u.values.reshape(-1)
    Ypts = X[E]
    if m.kind == "sphere":
        dE = float(np.max(m.distance(grid.center, Ypts)))
        if 2.0 * grid.radius + 2.0 * dE >= 0.5 * math.pi / math.sqrt(m.k):
            raise ValueError("sphere domain too large: diam(Omega) + diam(E) "
                             "must stay below pi/(2 sqrt k)")
    n_y = len(E)
    contact = np.empty(n_y, np.int64)
    minval = np.empty(n_y)
    ties = []
    for lo in range(0, n_y, chunk):
        Y = Ypts[lo:lo + chunk]
        F = uf[None, :] + 0.5 * a * _pairwise_dist_sq(m, Y, X)
        amin = np.argmin(F, axis=1)
        rows = np.arange(len(Y))
        best = F[rows, amin]
        contact[lo:lo + chunk] = amin
        minval[lo:lo + chunk] = best
        near = F <= (best + tie_tol)[:, None]
        counts = near.sum(axis=1)
        for r in np.flatnonzero(counts > 1):
            for xi in np.flatnonzero(near[r]):
                if xi != amin[r]:
                    ties.append((int(E[lo + r]), int(xi)))
    return ContactSet(m, grid, float(a), E, contact, minval, ties)


def gradient_contact_residual(m: ModelSpace, u: ScalarField, pair: ContactPair) -> float:
    """|grad u(x) + a rho grad rho_y(x)|: zero certifies an interior contact."""
    if not u.has_derivatives:
        raise ValueError("gradient residual needs a closed-form gradient")
    x, y = pair.x, pair.y
    g = u.grad(x) - pair.a * m.log(x, y)  # a * grad(rho_y^2/2) = -a log_x(y)
    return float(m.tangent_norm(x, g))


def dist_sq_half_grad_hess(m: ModelSpace, x, y):
    """Gradient and Hessian of rho^2(., y)/2 at x (closed forms per model)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    v = m.log(x, y)
    rho = m.tangent_norm(x, v)
    grad = -v
    small = rho < 1e-12
    safe = np.where(small, 1.0, rho)
    er = np.where(small[..., None], 0.0, -v / safe[..., None])
    et = m.rotate90(x, er)
    ht = m.dist_hessian_transverse(rho)
    H = (np.einsum("...i,...j->...ij", er, er)
         + ht[..., None, None] * np.einsum("...i,...j->...ij", et, et))
    if np.any(small):
        e1, e2 = m.tangent_frame(x)
        proj = np.einsum("...i,...j->...ij", e1, e1) + np.einsum("...i,...j->...ij", e2, e2)
        H = np.where(small[..., None, None], proj, H)
    return grad, H


def refine_contact_points(m: ModelSpace, u: ScalarField, a: float,
                          Y: np.ndarray, X0: np.ndarray,
                          iters: int = 12, tol: float = 1e-12) -> np.ndarray:
    """Riemannian Newton descent of F_y from X0, vectorized over vertices.

    Requires closed-form derivatives of u.  Steps are clamped to half the
    grid radius; points whose Hessian degenerates keep their last iterate.
    """
    if not u.has_derivatives:
        raise ValueError("refinement needs closed-form derivatives")
    X = np.array(X0, float)
    cap = 0.5 * u.grid.radius
    for _ in range(iters):
        gd, Hd = dist_sq_half_grad_hess(m, X, Y)
        g = u.grad(X) + a * gd
        H = u.hess(X) + a * Hd
        e1, e2 = m.tangent_frame(X)
        g1 = m.tangent_inner(X, g, e1)
        g2 = m.tangent_inner(X, g, e2)
        h11 = hess_form(m, H, e1, e1)
        h12 = hess_form(m, H, e1, e2)
        h22 = hess_form(m, H, e2, e2)
        det = h11 * h22 - h12 * h12
        ok = np.abs(det) > 1e-14
        dets = np.where(ok, det, 1.0)
        d1 = -(h22 * g1 - h12 * g2) / dets
        d2 = -(h11 * g2 - h12 * g1) / dets
        step = d1[..., None] * e1 + d2[..., None] * e2
        ln = m.tangent_norm(X, step)
        scale = np.where(ln > cap, cap / np.where(ln > cap, ln, 1.0), 1.0)
        step = step * (scale * ok)[..., None]
        X = m.exp(X, step)
        if float(np.max(np.abs(np.stack([g1, g2])))) < tol:
            break
    return X


def check_contact_location(m: ModelSpace, u: ScalarField, a: float,
                           x0, r: float, y0, l: float, t: float) -> CheckReport:
    """Inclusion of the contact set in the inner ball and low sub-level set.

    With u(y0) = l somewhere in the half ball and u >= t on the 5r/6 shell,
    l < t forces A(a, B_{r/6}(y0)/B_r(x0), u) into B_{5r/6}(x0) intersected
    with {u <= l + a r^2/36}.  Premise violations are reported, not raised.
    """
    grid = u.grid
    anchor = "contact-location"
    pre = _location_premises(m, u, x0, r, y0, l, t)
    if pre is not None:
        rep = check_le("contact-location", anchor, 1.0, 0.0)
        rep.passed = False
        rep.diagnostics["violated_premise"] = pre
        return rep
    # vertices must include y0's node so the touching bound below is exact
    E = np.flatnonzero(grid.mask_within(y0, r / 6.0).ravel())
    cs = compute_contact_set(m, u, a, E)
    nodes = cs.node_indices
    pts = grid.flat_points()[nodes]
    d_x0 = m.distance(np.asarray(x0, float), pts)
    uvals = u.values.reshape(-1)[nodes]
    # discrete minimization over nodes reproduces the touching inequality
    # exactly whenever y0 is itself a node, so only float slack is allowed
    grid_tol = 1e-9 * max(1.0, abs(l), a * r * r)
    level = l + a * r * r / 36.0
    worst_d = float(np.max(d_x0))
    worst_u = float(np.max(uvals))
    rep = check_le("contact-location", anchor,
                   max(worst_d - 5.0 * r / 6.0, worst_u - level - grid_tol), 0.0,
                   max_distance=worst_d, ball_bound=5.0 * r / 6.0,
                   max_value=worst_u, level_bound=level, grid_tol=grid_tol,
                   tight_level=l + a * r * r / 72.0,
                   n_contact_nodes=int(len(nodes)))
    return rep


def _location_premises(m, u, x0, r, y0, l, t):
    """Premise screening; u >= t is required on the annulus B_r minus B_{5r/6},
    which is the form the contradiction argument actually consumes."""
    grid = u.grid
    if not l < t:
        return "l < t"
    if m.distance(np.asarray(x0, float), np.asarray(y0, float)) > r / 2.0 + 1e-12:
        return "y0 in closed B_{r/2}(x0)"
    uy0 = float(u.value(y0)) if u.has_closed_form else None
    if uy0 is not None and abs(uy0 - l) > 1e-9 * max(1.0, abs(l)):
        return "u(y0) = l"
    annulus = ~grid.mask_within(x0, 5.0 * r / 6.0)
    if np.any(annulus) and np.min(u.values[annulus]) < t - 1e-12:
        return "u >= t on B_r(x0) minus B_{5r/6}(x0)"
    return None
