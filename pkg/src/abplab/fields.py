"""Scalar fields on geodesic ball grids, with optional analytic derivatives.

A :class:`ScalarField` always carries node samples on a grid.  Fields built
from closed forms additionally expose value / gradient / Hessian evaluators
at arbitrary points, which the contact-set and transport machinery use for
sub-cell refinement.  Gradients are embedding-space tangent vectors; Hessians
are embedding-space symmetric matrices annihilating the normal direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import GeodesicBallGrid, ModelSpace

__all__ = [
    "ScalarField",
    "constant_field",
    "radial_field",
    "quadratic_field",
    "bump_field",
    "sum_fields",
    "random_bump_field",
]


@dataclass
class ScalarField:
    grid: GeodesicBallGrid
    values: np.ndarray  # (n_r, n_theta)
    value_fn: Optional[Callable] = None
    grad_fn: Optional[Callable] = None
    hess_fn: Optional[Callable] = None

    @property
    def has_closed_form(self) -> bool:
        return self.value_fn is not None

    @property
    def has_derivatives(self) -> bool:
        return self.grad_fn is not None and self.hess_fn is not None

    def value(self, p):
        if self.value_fn is None:
            raise ValueError("field has no closed-form evaluator")
        return self.value_fn(np.asarray(p, float))

    def grad(self, p):
        if self.grad_fn is None:
            raise ValueError("field has no closed-form gradient")
        return self.grad_fn(np.asarray(p, float))

    def hess(self, p):
        if self.hess_fn is None:
            raise ValueError("field has no closed-form Hessian")
        return self.hess_fn(np.asarray(p, float))

    def laplacian(self, p):
        """Metric Laplacian: trace of the tangential Hessian."""
        m = self.grid.model
        H = self.hess(p)
        if m.kind == "hyperbolic":
            e1, e2 = m.tangent_frame(np.asarray(p, float))
            return hess_form(m, H, e1, e1) + hess_form(m, H, e2, e2)
        return np.trace(H, axis1=-2, axis2=-1)

    def laplacian_nu(self, p):
        """Weighted Laplacian: Delta u - g(grad u, grad V)."""
        m = self.grid.model
        lap = self.laplacian(p)
        gV = m.grad_V(np.asarray(p, float))
        return lap - m.tangent_inner(p, self.grad(p), gV)

    def check_consistency(self, tol=1e-10) -> float:
        """Max |closed form - node samples|; raises if no closed form."""
        v = self.value(self.grid.points)
        return float(np.max(np.abs(v - self.values)))


_MINK = np.diag([1.0, 1.0, -1.0])


def hess_form(m: ModelSpace, H, X, Y):
    """Evaluate the Hessian bilinear form on tangent vectors.

    H is stored as the frame outer-product matrix sum h_ij e_i@e_j, so on the
    hyperboloid the indices must be lowered with the Minkowski metric before
    contracting.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if m.kind == "hyperbolic":
        X = X @ _MINK
        Y = Y @ _MINK
    return np.einsum("...i,...ij,...j->...", X, H, Y)


def hess_frame_components(m: ModelSpace, H, e1, e2):
    """(h11, h12, h22) of the Hessian in an orthonormal tangent frame."""
    return (
        hess_form(m, H, e1, e1),
        hess_form(m, H, e1, e2),
        hess_form(m, H, e2, e2),
    )


def constant_field(grid: GeodesicBallGrid, c: float) -> ScalarField:
    m = grid.model
    d = m.embedding_dim

    def val(p):
        return np.full(np.asarray(p).shape[:-1], float(c))

    def grad(p):
        return np.zeros(np.asarray(p).shape[:-1] + (d,))

    def hess(p):
        return np.zeros(np.asarray(p).shape[:-1] + (d, d))

    vals = np.full(grid.shape, float(c))
    return ScalarField(grid, vals, val, grad, hess)


def radial_field(grid: GeodesicBallGrid, center, f, df, d2f) -> ScalarField:
    """Field u(x) = f(rho(center, x)) with analytic first/second derivatives.

    f must be even at 0 (df(0) = 0) so the composition is smooth across the
    center.  Gradient and Hessian follow the standard radial decomposition:
    grad u = f' e_r,  Hess u = f'' e_r@e_r + f' (psi'/psi) e_t@e_t.
    """
    m = grid.model
    center = np.asarray(center, float)

    def val(p):
        return f(m.distance(center, p))

    def grad(p):
        p = np.asarray(p, float)
        rho = m.distance(center, p)
        er, _ = _radial_frame(m, center, p, rho)
        return df(rho)[..., None] * er

    def hess(p):
        p = np.asarray(p, float)
        rho = m.distance(center, p)
        er, et = _radial_frame(m, center, p, rho)
        small = rho < 1e-8
        safe = np.where(small, 1.0, rho)
        kt = np.where(small, d2f(rho), df(rho) * m.dpsi(safe) / m.psi(safe))
        rr = np.einsum("...i,...j->...ij", er, er)
        tt = np.einsum("...i,...j->...ij", et, et)
        H = d2f(rho)[..., None, None] * rr + kt[..., None, None] * tt
        if np.any(small):
            # isotropic limit f''(0) * (tangent projector) at the field center
            a1, a2 = m.tangent_frame(p)
            proj = np.einsum("...i,...j->...ij", a1, a1) + np.einsum("...i,...j->...ij", a2, a2)
            H = np.where(small[..., None, None], d2f(rho)[..., None, None] * proj, H)
        return H

    vals = f(m.distance(center, grid.points))
    return ScalarField(grid, vals, val, grad, hess)


def _radial_frame(m: ModelSpace, center, p, rho):
    """(e_r, e_t) at p for the distance function from `center`; zero at p == center."""
    v = m.log(p, center)  # points from p toward the center, norm rho
    small = rho < 1e-12
    safe = np.where(small, 1.0, rho)
    er = -v / safe[..., None]
    er = np.where(small[..., None], 0.0, er)
    et = m.rotate90(p, er)
    return er, et


def quadratic_field(grid: GeodesicBallGrid, center, b: float) -> ScalarField:
    """u = (b/2) * rho(center, .)^2 -- the workhorse equality-case field."""
    m = grid.model
    if m.is_flat_chart:
        c = np.asarray(center, float)

        def val(p):
            d = np.asarray(p, float) - c
            return 0.5 * b * np.einsum("...i,...i->...", d, d)

        def grad(p):
            return b * (np.asarray(p, float) - c)

        def hess(p):
            sh = np.asarray(p).shape[:-1]
            return np.broadcast_to(b * np.eye(2), sh + (2, 2)).copy()

        vals = val(grid.points)
        return ScalarField(grid, vals, val, grad, hess)
    return radial_field(
        grid,
        center,
        lambda r: 0.5 * b * r * r,
        lambda r: b * r,
        lambda r: np.full_like(np.asarray(r, float), b),
    )


def bump_field(grid: GeodesicBallGrid, center, amplitude: float, beta: float) -> ScalarField:
    """u = amplitude * exp(-beta * rho^2): smooth, localized, sign-free Hessian."""

    def f(r):
        return amplitude * np.exp(-beta * r * r)

    def df(r):
        return amplitude * (-2.0 * beta * r) * np.exp(-beta * r * r)

    def d2f(r):
        return amplitude * (4.0 * beta * beta * r * r - 2.0 * beta) * np.exp(-beta * r * r)

    return radial_field(grid, center, f, df, d2f)


def sum_fields(fields: Sequence[ScalarField]) -> ScalarField:
    grid = fields[0].grid
    vals = np.sum([f.values for f in fields], axis=0)
    if all(f.has_derivatives for f in fields):
        def val(p):
            return np.sum([f.value(p) for f in fields], axis=0)

        def grad(p):
            return np.sum([f.grad(p) for f in fields], axis=0)

        def hess(p):
            return np.sum([f.hess(p) for f in fields], axis=0)

        return ScalarField(grid, vals, val, grad, hess)
    return ScalarField(grid, vals)


def random_bump_field(grid: GeodesicBallGrid, rng, n_bumps=4, hess_bound=1.0,
                      beta_range=(2.0, 8.0), center_frac=0.6) -> ScalarField:
    """Seeded random sum of radial bumps with total Hessian norm <= hess_bound.

    Centers are drawn inside center_frac of the grid ball, so every distance
    function involved stays smooth on the working domain.
    """
    m = grid.model
    e1, e2 = grid.frame
    parts = []
    bound = 0.0
    for _ in range(n_bumps):
        beta = rng.uniform(*beta_range)
        amp = rng.uniform(-1.0, 1.0)
        r0 = center_frac * grid.radius * np.sqrt(rng.uniform(0.0, 1.0))
        th0 = rng.uniform(0.0, 2.0 * np.pi)
        c = m.exp(grid.center, r0 * (np.cos(th0) * e1 + np.sin(th0) * e2))
        parts.append((amp, beta, c))
        # |f''| <= 2 beta |amp| and transverse factor is bounded by the same scale
        bound += 2.0 * beta * abs(amp) * max(1.0, _transverse_sup(m, 2.0 * grid.radius))
    scale = hess_bound / bound if bound > 0 else 1.0
    fields = [bump_field(grid, c, scale * amp, beta) for amp, beta, c in parts]
    return sum_fields(fields)


def _transverse_sup(m: ModelSpace, r):
    """Upper bound of the transverse Hessian factor of distance on [0, r]."""
    if m.kind == "hyperbolic":
        return float(m.dist_hessian_transverse(r))
    return 1.0
