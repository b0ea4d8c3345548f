"""
Levy jump densities, two-scale truncation and annulus integrals.

Classes
    LevyModel: a jump density m with singularity exponent alpha and exponential tail rate.
    TruncatedMeasure: the restriction of a model to the annulus r < |z| < R.
    JumpShape: the z-factor phi of a factorized jump amplitude eta1(x, v) phi(z).

Functions
    builtin_model: construct one of the built-in density families by name.
    truncate: build a TruncatedMeasure.
    annulus_integral: adaptive integral of an integrand against the density over an annulus.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math

from typing import Callable, Optional, Sequence

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper

logger = logging.getLogger(__name__)

MODEL_MERTON = 'merton'
MODEL_VARIANCE_GAMMA = 'variance_gamma'
MODEL_TEMPERED_STABLE = 'tempered_stable'
MODEL_KOU = 'kou'
MODEL_CGMY = 'cgmy'
MODEL_NAMES = (MODEL_MERTON, MODEL_VARIANCE_GAMMA, MODEL_TEMPERED_STABLE, MODEL_KOU, MODEL_CGMY)


@dataclasses.dataclass(frozen=True)
class LevyModel:
    """ A Levy jump density.

        Arguments:
            density: (callable) maps an array of shape (n, dim) of nonzero jumps
                to the n nonnegative density values.
            alpha: (float) singularity exponent in [0, 2).
            tail_rate: (float) exponential decay rate of the density for |z| > 1.
            dim: (int) jump dimension M, 1 or 2.
            name: (str) family name, 'custom' for user densities.
            params: (tuple) parameters the model was built from.
            singular: (bool) whether the density is unbounded at 0. Defaults to alpha > 0.
    """
    density: Callable[[np.ndarray], np.ndarray]
    alpha: float
    tail_rate: float
    dim: int = 1
    name: str = 'custom'
    params: tuple = ()
    singular: Optional[bool] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 2.0:
            raise ipdehjb.errors.InvalidParameterError(f'alpha must lie in [0, 2), received {self.alpha}.')
        if not self.tail_rate > 0:
            raise ipdehjb.errors.InvalidParameterError(
                f'tail_rate must be positive, received {self.tail_rate}.')
        if self.dim < 1 or self.dim > ipdehjb.constants.MAX_JUMP_DIM:
            raise ipdehjb.errors.DimensionUnsupportedError(
                f'Jump dimension M={self.dim} is not supported (M <= {ipdehjb.constants.MAX_JUMP_DIM}).')
        if self.singular is None:
            object.__setattr__(self, 'singular', self.alpha > 0)

        values = self.evaluate(_envelope_sample(self.dim))
        if np.any(values < 0) or np.any(np.isnan(values)):
            raise ipdehjb.errors.InvalidParameterError(f'Density of model {self.name} is negative or undefined.')

    def evaluate(self, z) -> np.ndarray:
        """ Density values at the points z (one point or an array of shape (n, dim)). """
        points = ipdehjb.helper.as_points(z, self.dim)
        with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
            values = np.asarray(self.density(points), dtype=float).reshape(-1)
        return values

    def envelope_constants(self):
        """ Empirical envelope constants (small, tail).

            small = max m(z) |z|^(M + alpha) over sampled 0 < |z| <= 1.
            tail = max m(z) exp(tail_rate |z|) over sampled |z| > 1.
        """
        small = _envelope_sample(self.dim, tail=False)
        tail = _envelope_sample(self.dim, small=False)
        rs = np.linalg.norm(small, axis=1)
        rt = np.linalg.norm(tail, axis=1)
        c_small = float(np.max(self.evaluate(small) * rs ** (self.dim + self.alpha)))
        c_tail = float(np.max(self.evaluate(tail) * np.exp(self.tail_rate * rt)))
        return c_small, c_tail


@dataclasses.dataclass(frozen=True)
class JumpShape:
    """ The z-factor of a factorized jump amplitude eta(x, v, z) = eta1(x, v) phi(z).

        Arguments:
            phi: (callable) maps jumps of shape (n, in_dim) to shape (n, out_dim).
            in_dim: (int) jump dimension M.
            out_dim: (int) state dimension N.
            deriv_bound: (float) constant of the exponential envelope of D phi.
            name: (str) label used in reports.
    """
    phi: Callable[[np.ndarray], np.ndarray]
    in_dim: int = 1
    out_dim: int = 1
    deriv_bound: float = 1.0
    name: str = 'custom'

    def evaluate(self, z) -> np.ndarray:
        points = ipdehjb.helper.as_points(z, self.in_dim)
        values = np.asarray(self.phi(points), dtype=float)
        return values.reshape(len(points), self.out_dim)

    def envelope_constant(self) -> float:
        """ Smallest C with |phi(z)| <= C (e^|z| - 1) on the envelope sample. """
        z = _envelope_sample(self.in_dim)
        radius = np.linalg.norm(z, axis=1)
        return float(np.max(np.linalg.norm(self.evaluate(z), axis=1) / np.expm1(radius)))


def identity_shape(dim: int = 1) -> JumpShape:
    """ phi(z) = z. """
    return JumpShape(phi=lambda z: z, in_dim=dim, out_dim=dim, deriv_bound=1.0, name='identity')


def exponential_shape() -> JumpShape:
    """ phi(z) = e^z - 1 (1-D), the log-price jump of exponential Levy models. """
    return JumpShape(phi=np.expm1, in_dim=1, out_dim=1, deriv_bound=1.0, name='exponential')


def linear_shape(direction: Sequence[float]) -> JumpShape:
    """ phi(z) = z * direction, a scalar jump pushed along a fixed direction of R^N. """
    direction = np.asarray(direction, dtype=float).reshape(1, -1)
    return JumpShape(phi=lambda z: z[:, :1] * direction, in_dim=1, out_dim=direction.shape[1],
                     deriv_bound=float(np.linalg.norm(direction)), name='linear')


@dataclasses.dataclass(frozen=True)
class TruncatedMeasure:
    """ The two-scale truncation of a Levy model to the annulus r < |z| < R. """
    model: LevyModel
    r: float
    R: float

    @functools.cached_property
    def mass(self) -> float:
        """ lambda_{r,R}: the total mass of the annulus. """
        return float(annulus_integral(self, self.r, self.R))

    def inner_second_moment(self, shape: JumpShape) -> np.ndarray:
        """ The N x N matrix of integrals of phi phi^T over 0 < |z| < r. """
        def outer(z):
            p = shape.evaluate(z)
            return p[:, :, None] * p[:, None, :]
        return np.atleast_2d(annulus_integral(self.model, 0.0, self.r, outer))

    def inner_first_moment(self, shape: JumpShape) -> np.ndarray:
        """ The integral of phi over 0 < |z| < r (finite for alpha < 1). """
        return np.atleast_1d(annulus_integral(self.model, 0.0, self.r, shape.evaluate))

    def compensator_first_moment(self, shape: JumpShape) -> np.ndarray:
        """ The integral of phi over r < |z| < 1 against the truncated measure. """
        if self.r >= 1.0:
            return np.zeros(shape.out_dim)
        return np.atleast_1d(annulus_integral(self, self.r, 1.0, shape.evaluate))


def truncate(model: LevyModel, r: float, R: float) -> TruncatedMeasure:
    """ Restrict a model to the annulus r < |z| < R.

        Arguments:
            model: (LevyModel) the untruncated density.
            r: (float) inner radius, normally in (0, 1).
            R: (float) outer radius, normally > 1.
    """
    if not r > 0:
        raise ipdehjb.errors.InvalidParameterError(f'Inner radius must be positive, received r={r}.')
    if r >= R:
        raise ipdehjb.errors.DegenerateAnnulusError(f'Degenerate annulus: r={r} >= R={R}.')
    if not r < 1.0 < R:
        logger.warning('Truncation radii r=%g, R=%g do not satisfy r < 1 < R.', r, R)
    return TruncatedMeasure(model=model, r=float(r), R=float(R))


def builtin_model(name: str, params: Sequence[float]) -> LevyModel:
    """ Construct a built-in Levy model.

        Arguments:
            name: (str) one of
                'merton'          params (lam, delta, mu): lam/(delta sqrt(2 pi)) exp(-(z-mu)^2/(2 delta^2))
                'variance_gamma'  params (C, G, M): C exp(-G|z|)/|z| for z < 0, C exp(-M z)/z for z > 0
                'tempered_stable' params (alpha, c_minus, c_plus, lam_minus, lam_plus):
                                  c_pm exp(-lam_pm |z|) / |z|^(1+alpha)
                'kou'             params (lam, p, eta_plus, eta_minus): double exponential jumps
                'cgmy'            params (C, G, M, Y): tempered_stable(Y, C, C, G, M)
            params: (list) parameter values in the order above.
    """
    params = tuple(float(p) for p in params)
    builders = {
        MODEL_MERTON: (_merton, 3),
        MODEL_VARIANCE_GAMMA: (_variance_gamma, 3),
        MODEL_TEMPERED_STABLE: (_tempered_stable, 5),
        MODEL_KOU: (_kou, 4),
        MODEL_CGMY: (_cgmy, 4),
    }
    if name not in builders:
        raise ipdehjb.errors.InvalidParameterError(
            f'Unknown model "{name}". Supported models: {", ".join(MODEL_NAMES)}.')
    builder, n_params = builders[name]
    if len(params) != n_params:
        raise ipdehjb.errors.InvalidParameterError(
            f'Model {name} takes {n_params} parameters, received {len(params)}.')
    return builder(*params)


def _merton(lam, delta, mu):
    if lam < 0 or delta <= 0:
        raise ipdehjb.errors.InvalidParameterError(f'Merton needs lam >= 0 and delta > 0, received {lam}, {delta}.')
    scale = lam / (delta * math.sqrt(2 * math.pi))

    def density(z):
        return scale * np.exp(-(z[:, 0] - mu) ** 2 / (2 * delta ** 2))
    # Any positive rate bounds a Gaussian tail
    return LevyModel(density=density, alpha=0.0, tail_rate=1.0, name=MODEL_MERTON,
                     params=(lam, delta, mu), singular=False)


def _variance_gamma(c, g, m):
    if c < 0 or g <= 0 or m <= 0:
        raise ipdehjb.errors.InvalidParameterError(
            f'Variance gamma needs C >= 0 and G, M > 0, received {c}, {g}, {m}.')

    def density(z):
        x = z[:, 0]
        rate = np.where(x < 0, g, m)
        return c * np.exp(-rate * np.abs(x)) / np.abs(x)
    return LevyModel(density=density, alpha=0.0, tail_rate=min(g, m), name=MODEL_VARIANCE_GAMMA,
                     params=(c, g, m), singular=True)


def _tempered_stable(alpha, c_minus, c_plus, lam_minus, lam_plus):
    if not 0 < alpha < 2:
        raise ipdehjb.errors.InvalidParameterError(f'Tempered stable needs alpha in (0, 2), received {alpha}.')
    if min(c_minus, c_plus, lam_minus, lam_plus) < 0:
        raise ipdehjb.errors.InvalidParameterError('Tempered stable scales and rates must be nonnegative.')
    rates = [lam for c, lam in ((c_minus, lam_minus), (c_plus, lam_plus)) if c > 0]
    tail_rate = min(rates) if rates else 1.0
    if tail_rate <= 0:
        raise ipdehjb.errors.InvalidParameterError(
            'A side with positive scale needs a positive tempering rate for exponential tails.')

    def density(z):
        x = z[:, 0]
        neg = x < 0
        scale = np.where(neg, c_minus, c_plus)
        rate = np.where(neg, lam_minus, lam_plus)
        ax = np.abs(x)
        return scale * np.exp(-rate * ax) / ax ** (1 + alpha)
    return LevyModel(density=density, alpha=alpha, tail_rate=tail_rate, name=MODEL_TEMPERED_STABLE,
                     params=(alpha, c_minus, c_plus, lam_minus, lam_plus), singular=True)


def _kou(lam, p, eta_plus, eta_minus):
    if lam < 0 or not 0 <= p <= 1 or eta_plus <= 0 or eta_minus <= 0:
        raise ipdehjb.errors.InvalidParameterError(
            f'Kou needs lam >= 0, p in [0, 1] and positive rates, received {lam}, {p}, {eta_plus}, {eta_minus}.')

    def density(z):
        x = z[:, 0]
        up = p * eta_plus * np.exp(-eta_plus * np.abs(x))
        down = (1 - p) * eta_minus * np.exp(-eta_minus * np.abs(x))
        return lam * np.where(x > 0, up, down)
    return LevyModel(density=density, alpha=0.0, tail_rate=min(eta_plus, eta_minus), name=MODEL_KOU,
                     params=(lam, p, eta_plus, eta_minus), singular=False)


def _cgmy(c, g, m, y):
    model = _tempered_stable(y, c, c, g, m)
    return dataclasses.replace(model, name=MODEL_CGMY, params=(c, g, m, y))


def _envelope_sample(dim, small=True, tail=True):
    radii = []
    if small:
        lo, hi, n = ipdehjb.constants.ENVELOPE_SMALL_RADII
        radii.append(np.logspace(math.log10(lo), math.log10(hi), n))
    if tail:
        lo, hi, n = ipdehjb.constants.ENVELOPE_TAIL_RADII
        radii.append(np.linspace(lo, hi, n)[1:])
    radii = np.concatenate(radii)
    if dim == 1:
        return np.concatenate([radii, -radii]).reshape(-1, 1)
    theta = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    directions = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return (radii[:, None, None] * directions[None, :, :]).reshape(-1, 2)


####
# Adaptive annulus integration
####

class _ShellIntegrator(object):
    """ Integrates density x integrand over radial shells with a Gauss-Legendre product rule.

        In 1-D a shell [a, b] covers both a < z < b and -b < z < -a. In 2-D it is
        the planar ring a < |z| < b with a periodic trapezoid rule in angle.
    """
    def __init__(self, model: LevyModel, integrand: Optional[Callable]):
        self.model = model
        self.integrand = integrand
        self.order = ipdehjb.constants.ANNULUS_SHELL_ORDER
        self.evaluations = 0

    def rule(self, a, b, order):
        nodes, weights = ipdehjb.helper.gauss_legendre(order)
        rho = 0.5 * (b - a) * nodes + 0.5 * (b + a)
        w = 0.5 * (b - a) * weights
        if self.model.dim == 1:
            z = np.concatenate([rho, -rho]).reshape(-1, 1)
            wz = np.concatenate([w, w])
        else:
            n_ang = ipdehjb.constants.ANNULUS_ANGULAR_FACTOR * order
            theta = 2 * np.pi * np.arange(n_ang) / n_ang
            z = np.stack([np.outer(rho, np.cos(theta)), np.outer(rho, np.sin(theta))], axis=-1).reshape(-1, 2)
            wz = np.repeat(w * rho * (2 * np.pi / n_ang), n_ang)
        return z, wz

    def estimate(self, a, b, order):
        """ (value, size): the integral over the shell and the largest component of the
            integral of |integrand| m, which bounds the cancellation in value.
        """
        z, wz = self.rule(a, b, order)
        weights = wz * self.model.evaluate(z)
        self.evaluations += len(z)
        if self.integrand is None:
            total = np.asarray(np.sum(weights))
            return total, float(total)
        values = np.asarray(self.integrand(z), dtype=float)
        values = values.reshape((len(z),) + values.shape[1:]) if values.ndim else np.full(len(z), values)
        return np.tensordot(weights, values, axes=(0, 0)), _norm(np.tensordot(weights, np.abs(values), axes=(0, 0)))

    def pair(self, a, b):
        """ (coarse, fine, size) of one shell at the base order and twice the base order. """
        coarse, _ = self.estimate(a, b, self.order)
        fine, size = self.estimate(a, b, 2 * self.order)
        return coarse, fine, size

    def adaptive(self, a, b, atol, depth=0):
        coarse, fine, _ = self.pair(a, b)
        if _norm(fine - coarse) <= atol:
            return fine
        if depth >= ipdehjb.constants.ANNULUS_MAX_DEPTH:
            raise ipdehjb.errors.NonConvergentIntegralError(
                f'Annulus integral did not converge on shell [{a:.6g}, {b:.6g}].')
        mid = math.sqrt(a * b) if a > 0 else 0.5 * b
        return self.adaptive(a, mid, 0.5 * atol, depth + 1) + self.adaptive(mid, b, 0.5 * atol, depth + 1)


def _norm(value):
    return float(np.max(np.abs(value))) if np.size(value) else 0.0


def _shell_edges(inner, outer):
    n = max(1, int(math.ceil(math.log2(outer / inner) - 1e-12)))
    edges = inner * 2.0 ** np.arange(n + 1)
    edges[-1] = outer
    return edges


def annulus_integral(measure, inner: float, outer: float, integrand: Optional[Callable] = None,
                     rtol: float = ipdehjb.constants.ANNULUS_RTOL):
    """ Integral of integrand(z) m(z) over inner < |z| < outer.

        Arguments:
            measure: (LevyModel or TruncatedMeasure) the density. For a truncated
                measure the limits are intersected with its annulus.
            inner: (float) inner radius, 0 allowed for integrands vanishing fast enough at 0.
            outer: (float) outer radius.
            integrand: (callable) maps jumps of shape (n, M) to values of shape (n,),
                (n, N) or (n, N, N). None integrates 1.
            rtol: (float) relative tolerance, measured against the integral of the
                absolute shell contributions.
    """
    if isinstance(measure, TruncatedMeasure):
        model = measure.model
        inner, outer = max(inner, measure.r), min(outer, measure.R)
    else:
        model = measure
    if inner < 0:
        raise ipdehjb.errors.InvalidParameterError(f'Inner radius must be nonnegative, received {inner}.')

    shells = _ShellIntegrator(model, integrand)
    if outer <= inner:
        empty, _ = shells.estimate(1.0, 2.0, 2)
        return np.zeros_like(empty)

    if inner > 0:
        edges = _shell_edges(inner, outer)
        intervals = list(zip(edges[:-1], edges[1:]))
        coarse = [shells.pair(a, b) for a, b in intervals]
    else:
        intervals, coarse = _shells_towards_zero(shells, outer, rtol)

    # Odd integrands against symmetric densities cancel within a shell, so the
    # tolerance follows the absolute contributions, not the signed ones
    scale = sum(size for _, _, size in coarse)
    if scale == 0.0:
        return np.zeros_like(coarse[0][1])
    atol = rtol * scale / len(intervals)
    total = None
    for (a, b), (lo, hi, _) in zip(intervals, coarse):
        value = hi if _norm(hi - lo) <= atol else shells.adaptive(a, b, atol)
        total = value if total is None else total + value
    logger.debug('Annulus integral over (%g, %g): %d shells, %d evaluations.',
                 inner, outer, len(intervals), shells.evaluations)
    return total


def _shells_towards_zero(shells, outer, rtol):
    """ Geometric shells outer/2^(j+1) < |z| < outer/2^j until the contributions are negligible. """
    intervals, coarse, norms = [], [], []
    b = outer
    for j in range(ipdehjb.constants.ANNULUS_MAX_SHELLS):
        a = 0.5 * b
        pair = shells.pair(a, b)
        intervals.append((a, b))
        coarse.append(pair)
        norms.append(pair[2])
        b = a

        scale = sum(norms)
        if scale == 0.0 and j + 1 >= ipdehjb.constants.ANNULUS_MIN_SHELLS:
            return intervals, coarse
        if j + 1 < ipdehjb.constants.ANNULUS_MIN_SHELLS or scale == 0.0:
            continue
        recent = norms[-4:]
        if max(recent) <= 1e-3 * rtol * scale:
            return intervals, coarse
        ratios = [recent[i + 1] / recent[i] for i in range(len(recent) - 1) if recent[i] > 0]
        q = max(ratios) if ratios else 0.0
        if q >= ipdehjb.constants.ANNULUS_STALL_RATIO:
            raise ipdehjb.errors.NonConvergentIntegralError(
                'Integrand does not vanish fast enough at z = 0 for an inner radius of 0.')
        # Geometric tail bound of the discarded inner ball
        if norms[-1] * q / (1.0 - q) <= 0.1 * rtol * scale:
            return intervals, coarse
    raise ipdehjb.errors.NonConvergentIntegralError(
        f'Annulus integral towards z = 0 needs more than {ipdehjb.constants.ANNULUS_MAX_SHELLS} shells.')
