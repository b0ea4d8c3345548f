"""
High-accuracy continuous operators used as references by the studies.

Smooth test functions carry analytic gradients and Hessians; plain callables
fall back to central finite differences with step FD_STEP.

Jumps are integrated with the adaptive annulus integrator. Below TAYLOR_RADIUS
the increment phi(x + eta) - phi(x) is replaced by its second order expansion,
whose moments against the density are integrated exactly from 0; this keeps the
compensated integrand free of cancellation noise near the singularity.
"""

from __future__ import annotations

import dataclasses

from typing import Callable, Optional

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper
import ipdehjb.analysis.constants as anconst
from ipdehjb.levy import LevyModel, TruncatedMeasure, annulus_integral
from ipdehjb.problem import ProblemSpec


@dataclasses.dataclass(frozen=True)
class SmoothFunction:
    """ A scalar test function on R^N with optional analytic derivatives.

        Arguments:
            value: (callable) points (n, N) -> (n,).
            grad: (callable) points (n, N) -> (n, N), None for finite differences.
            hess: (callable) points (n, N) -> (n, N, N), None for finite differences.
            dim: (int) N.
            name: (str) label used in reports.
    """
    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    dim: int = 1
    name: str = 'custom'

    def __call__(self, x) -> np.ndarray:
        points = ipdehjb.helper.as_points(x, self.dim)
        return np.broadcast_to(np.asarray(self.value(points), dtype=float), (len(points),)).copy()

    def gradient(self, x) -> np.ndarray:
        points = ipdehjb.helper.as_points(x, self.dim)
        if self.grad is not None:
            return ipdehjb.helper.broadcast_field(self.grad(points), points.shape)
        step = anconst.FD_STEP
        out = np.empty(points.shape)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = step
            out[:, i] = (self(points + e) - self(points - e)) / (2 * step)
        return out

    def hessian(self, x) -> np.ndarray:
        points = ipdehjb.helper.as_points(x, self.dim)
        n, N = points.shape
        if self.hess is not None:
            return ipdehjb.helper.broadcast_field(self.hess(points), (n, N, N))
        step = anconst.FD_STEP
        out = np.empty((n, N, N))
        for i in range(N):
            for j in range(i, N):
                ei, ej = np.zeros(N), np.zeros(N)
                ei[i], ej[j] = step, step
                value = (self(points + ei + ej) - self(points + ei - ej)
                         - self(points - ei + ej) + self(points - ei - ej)) / (4 * step * step)
                out[:, i, j] = out[:, j, i] = value
        return out


def as_smooth(phi, dim: int) -> SmoothFunction:
    """ Wrap a plain callable (derivatives by finite differences); SmoothFunctions pass through. """
    if isinstance(phi, SmoothFunction):
        return phi
    return SmoothFunction(value=phi, dim=dim)


def sine_function(dim: int = 1, frequency: float = 1.0) -> SmoothFunction:
    """ sin(w . x) with w = frequency * (1, ..., 1). """
    w = np.full(dim, float(frequency))
    return SmoothFunction(value=lambda x: np.sin(x @ w),
                          grad=lambda x: np.cos(x @ w)[:, None] * w,
                          hess=lambda x: -np.sin(x @ w)[:, None, None] * np.outer(w, w),
                          dim=dim, name='sine')


def quadratic_function(dim: int = 1) -> SmoothFunction:
    """ |x|^2. """
    return SmoothFunction(value=lambda x: np.sum(x * x, axis=1), grad=lambda x: 2 * x,
                          hess=lambda x: 2 * np.eye(dim), dim=dim, name='quadratic')


def gaussian_function(dim: int = 1, center: float = 0.0, scale: float = 1.0) -> SmoothFunction:
    """ exp(-|x - center|^2 / scale^2). """
    center = np.broadcast_to(np.asarray(center, dtype=float), (dim,))
    s2 = float(scale) ** 2

    def value(x):
        return np.exp(-np.sum((x - center) ** 2, axis=1) / s2)

    def hess(x):
        y = x - center
        g = value(x)[:, None, None]
        return g * (4 * y[:, :, None] * y[:, None, :] / (s2 * s2) - 2 * np.eye(dim) / s2)
    return SmoothFunction(value=value, grad=lambda x: -2 * (x - center) / s2 * value(x)[:, None],
                          hess=hess, dim=dim, name='gaussian')


def affine_function(slope, intercept: float = 0.0) -> SmoothFunction:
    """ slope . x + intercept. """
    slope = np.atleast_1d(np.asarray(slope, dtype=float))
    dim = len(slope)
    return SmoothFunction(value=lambda x: x @ slope + intercept, grad=lambda x: slope,
                          hess=lambda x: np.zeros((dim, dim)), dim=dim, name='affine')


def constant_function(value: float, dim: int = 1) -> SmoothFunction:
    return affine_function(np.zeros(dim), value)


####
# Operators
####

def _increments(spec, v, phi, points, base):
    """ Integrand z -> phi(x + eta1(x) phi_s(z)) - phi(x), shape (n_z, n_x). """
    eta = spec.evaluate('eta1', points, v)
    n, N = points.shape

    def increment(z):
        shift = np.einsum('nij,qj->qni', eta, spec.jump_shape.evaluate(z))
        values = phi((points[None, :, :] + shift).reshape(-1, N))
        return values.reshape(len(z), n) - base[None, :]
    return increment, eta


def truncated_jump_integral(spec: ProblemSpec, measure: TruncatedMeasure, v, phi, points) -> np.ndarray:
    """ The integral of phi(x + eta) - phi(x) against the truncated measure, one value per point. """
    increment, _ = _increments(spec, v, phi, points, phi(points))
    return np.asarray(annulus_integral(measure, measure.r, measure.R, increment), dtype=float)


def full_jump_operator(spec: ProblemSpec, model: LevyModel, v, phi: SmoothFunction, points,
                       outer: Optional[float] = None) -> np.ndarray:
    """ The untruncated jump operator of the problem's form at the points.

        Form F integrates phi(x + eta) - phi(x); form J subtracts eta Dphi(x) on |z| < 1.

        Arguments:
            outer: (float) outer radius of the integral. Defaults to OUTER_DECAY / tail_rate.
    """
    if spec.form == ipdehjb.constants.FORM_F and model.singular and model.alpha >= 1:
        raise ipdehjb.errors.NonConvergentIntegralError(
            f'The jump operator without compensator diverges for alpha={model.alpha}; use form J.')
    points = ipdehjb.helper.as_points(points, spec.dim)
    phi = as_smooth(phi, spec.dim)
    outer = outer if outer is not None else anconst.OUTER_DECAY / model.tail_rate
    shape = spec.jump_shape
    base = phi(points)
    grad = phi.gradient(points)
    hess = phi.hessian(points)
    increment, eta = _increments(spec, v, phi, points, base)
    rho = min(anconst.TAYLOR_RADIUS, 0.5 * outer)

    # Inner ball: second order expansion
    def outer_product(z):
        p = shape.evaluate(z)
        return p[:, :, None] * p[:, None, :]
    second = np.atleast_2d(annulus_integral(model, 0.0, rho, outer_product))
    spread = np.einsum('nik,kl,njl->nij', eta, second, eta)
    total = 0.5 * np.einsum('nij,nij->n', hess, spread)
    if spec.form == ipdehjb.constants.FORM_F:
        first = np.atleast_1d(annulus_integral(model, 0.0, rho, shape.evaluate))
        total = total + np.einsum('nij,j,ni->n', eta, first, grad)

    split = min(1.0, outer)
    if spec.form == ipdehjb.constants.FORM_J:
        def compensated(z):
            drift = np.einsum('nij,qj,ni->qn', eta, shape.evaluate(z), grad)
            return increment(z) - drift
        total = total + annulus_integral(model, rho, split, compensated)
    else:
        total = total + annulus_integral(model, rho, split, increment)
    if outer > split:
        total = total + annulus_integral(model, split, outer, increment)
    return np.asarray(total, dtype=float)


def _local(phi, points, a, b):
    return np.einsum('nij,nij->n', a, phi.hessian(points)) + np.einsum('ni,ni->n', b, phi.gradient(points))


def generator_oracle(spec: ProblemSpec, coeffs, measure: Optional[TruncatedMeasure], v, phi, x) -> np.ndarray:
    """ The generator the semi-discrete scheme approximates as h -> 0.

        tr[a_bar D2 phi] + b_eff . Dphi + int_{r<|z|<R} [phi(x + eta) - phi(x)] nu, with the
        compensated coefficients of coeffs.

        Arguments:
            coeffs: (CompensatedCoefficients) output of compensate for this measure.
            x: points of shape (n, N).
    """
    points = ipdehjb.helper.as_points(x, spec.dim)
    phi = as_smooth(phi, spec.dim)
    result = _local(phi, points, coeffs.diffusion(points, v), coeffs.drift(points, v))
    if spec.jump_shape is not None and measure is not None:
        result = result + truncated_jump_integral(spec, measure, v, phi, points)
    return result


def continuous_generator(spec: ProblemSpec, model: Optional[LevyModel], v, phi, x,
                         outer: Optional[float] = None) -> np.ndarray:
    """ tr[a D2 phi] + b . Dphi + (I or J) phi with a = sigma sigma^T / 2 and the full jump measure. """
    points = ipdehjb.helper.as_points(x, spec.dim)
    phi = as_smooth(phi, spec.dim)
    sigma = spec.evaluate('sigma', points, v)
    a = 0.5 * sigma @ np.swapaxes(sigma, 1, 2)
    result = _local(phi, points, a, spec.evaluate('b', points, v))
    if spec.jump_shape is not None and model is not None:
        result = result + full_jump_operator(spec, model, v, phi, points, outer)
    return result


def continuous_operator_oracle(spec: ProblemSpec, x, v, phi, model: Optional[LevyModel] = None,
                               outer: Optional[float] = None):
    """ tr[a D2 phi] + b . Dphi - c phi + f + (I or J) phi at one point or an array of points.

        The equation holds where the minimum over the controls of this value is 0.

        Arguments:
            spec: (ProblemSpec) the problem; a missing f counts as 0.
            x: a point or points of shape (n, N).
            v: a control value.
            phi: (SmoothFunction or callable) the test function.
            model: (LevyModel) the untruncated jump density, None without jumps.
            outer: (float) outer radius of the jump integral.
    """
    points = ipdehjb.helper.as_points(x, spec.dim)
    phi = as_smooth(phi, spec.dim)
    result = continuous_generator(spec, model, v, phi, points, outer) - spec.evaluate('c', points, v) * phi(points)
    if spec.f is not None:
        result = result + spec.evaluate('f', points, v)
    single = np.ndim(x) <= 1 and (spec.dim > 1 or np.ndim(x) == 0)
    return float(result[0]) if single else result
