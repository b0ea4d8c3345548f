"""
Controlled coefficient fields, the finite control set, assumption validation
and the cutoff to a bounded computational domain.

Coefficient callables are vectorized over points: each receives an array x of
shape (n, N) and one control value v, and returns

    sigma: (n, N, d)    b: (n, N)    c: (n,)    f: (n,)    eta1: (n, N, N)

Outputs that broadcast to these shapes (scalars, constant matrices) are accepted.
Callables must be pure: the solver evaluates them concurrently.
"""

from __future__ import annotations

import collections
import dataclasses
import logging

from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper
from ipdehjb.levy import JumpShape

logger = logging.getLogger(__name__)

FIELDS = ('sigma', 'b', 'c', 'f', 'eta1')

# Default sampling box of validate when the problem declares none
DEFAULT_VALIDATION_BOX = (-1.0, 1.0)


@dataclasses.dataclass(frozen=True)
class ControlSet:
    """ A finite, nonempty list of control values indexed 0..n-1. """
    controls: Tuple

    def __post_init__(self):
        object.__setattr__(self, 'controls', tuple(self.controls))
        if not self.controls:
            raise ipdehjb.errors.InvalidParameterError('The control set must be nonempty.')

    def __len__(self):
        return len(self.controls)

    def __iter__(self):
        return iter(self.controls)

    def __getitem__(self, index):
        return self.controls[index]


@dataclasses.dataclass(frozen=True)
class CutoffSpec:
    """ Radial C1 cutoff: 1 on |x| <= 1/mu, 0 on |x| >= 1/mu + transition_width, cubic smoothstep between. """
    mu: float
    transition_width: float

    def __post_init__(self):
        if not (self.mu > 0 and self.transition_width > 0):
            raise ipdehjb.errors.InvalidParameterError(
                f'Cutoff needs mu > 0 and transition_width > 0, received {self.mu}, {self.transition_width}.')

    @property
    def radius(self) -> float:
        return 1.0 / self.mu

    @property
    def support_radius(self) -> float:
        return self.radius + self.transition_width

    def xi(self, x: np.ndarray) -> np.ndarray:
        """ Cutoff values at points of shape (n, N). """
        t = np.clip((np.linalg.norm(x, axis=1) - self.radius) / self.transition_width, 0.0, 1.0)
        return 1.0 - t * t * (3.0 - 2.0 * t)


@dataclasses.dataclass(frozen=True)
class ProblemSpec:
    """ Coefficients of the HJB integro-PDE over a finite control set.

        Arguments:
            dim: (int) state dimension N.
            controls: (ControlSet) the sampled control values.
            sigma, b, c, f, eta1: (callables) coefficient fields, see the module docstring.
            noise_dim: (int) number of columns d of sigma.
            jump_shape: (JumpShape) z-factor phi of the jumps, None for no jumps.
            form: (str) 'F' for the jump operator without compensator, 'J' for the
                one compensated on |z| < 1.
            lipschitz: (tuple) declared constants (L1, L2), None when undeclared.
            box: (tuple) (lo, hi) arrays of the region sampled by validate.
            name: (str) label used in reports.
            cutoff: (CutoffSpec) the cutoff applied to sigma, b and eta1, if any.
            uncut: (ProblemSpec) the problem the cutoff was applied to.
    """
    dim: int
    controls: ControlSet
    sigma: Callable
    b: Callable
    c: Callable
    f: Optional[Callable]
    eta1: Optional[Callable] = None
    noise_dim: Optional[int] = None
    jump_shape: Optional[JumpShape] = None
    form: str = ipdehjb.constants.FORM_F
    lipschitz: Optional[Tuple[float, float]] = None
    box: Optional[Tuple] = None
    name: str = 'custom'
    cutoff: Optional[CutoffSpec] = None
    uncut: Optional['ProblemSpec'] = dataclasses.field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.controls, ControlSet):
            object.__setattr__(self, 'controls', ControlSet(self.controls))
        if self.noise_dim is None:
            object.__setattr__(self, 'noise_dim', self.dim)
        if self.form not in ipdehjb.constants.FORMS:
            raise ipdehjb.errors.InvalidParameterError(f'Unknown equation form "{self.form}".')
        if self.jump_shape is not None and self.jump_shape.out_dim != self.dim:
            raise ipdehjb.errors.SizeMismatchError(
                f'Jump shape maps into R^{self.jump_shape.out_dim}, the state space is R^{self.dim}.')
        if self.eta1 is None:
            object.__setattr__(self, 'eta1', lambda x, v: 0.0)

    @property
    def control_count(self) -> int:
        return len(self.controls)

    @property
    def has_jumps(self) -> bool:
        return self.jump_shape is not None

    def evaluate(self, field: str, x, v) -> np.ndarray:
        """ Evaluate a coefficient field at points x for the control value v, at full shape. """
        points = ipdehjb.helper.as_points(x, self.dim)
        n, N = points.shape
        shapes = {'sigma': (n, N, self.noise_dim), 'b': (n, N), 'c': (n,), 'f': (n,), 'eta1': (n, N, N)}
        func = getattr(self, field)
        if func is None:
            raise ipdehjb.errors.InvalidParameterError(f'Coefficient {field} is not defined for problem {self.name}.')
        return ipdehjb.helper.broadcast_field(func(points, v), shapes[field])

    def c0(self, points) -> float:
        """ Minimum of c over the given points and all controls. """
        return float(min(np.min(self.evaluate('c', points, v)) for v in self.controls))


ValidationReport = collections.namedtuple(
    'ValidationReport', ['lipschitz', 'min_c', 'passed', 'warnings', 'sample_size'])
ValidationReport.__doc__ = """ Outcome of validate.

    lipschitz: dict field -> empirical Lipschitz estimate (max over controls).
    min_c: minimum of c over the sample.
    passed: dict assumption -> bool, keys 'A2' (Lipschitz bounds) and 'A3' (c >= c0 > 0).
    warnings: list of messages, also logged.
    sample_size: number of sampled points.
"""


def validate(spec: ProblemSpec, sample_budget: int, box=None, seed: int = 0) -> ValidationReport:
    """ Sample the coefficients and check the Lipschitz and discount assumptions.

        Arguments:
            spec: (ProblemSpec) the problem.
            sample_budget: (int) number of sampled points (half grid, half random).
            box: (tuple) (lo, hi) of the sampled region. Defaults to spec.box, then [-1, 1]^N.
            seed: (int) seed of the random sample.
    """
    if sample_budget <= 0:
        raise ipdehjb.errors.InvalidParameterError(f'Sample budget must be positive, received {sample_budget}.')
    lo, hi = _resolve_box(spec, box)
    points = ipdehjb.helper.box_sample(lo, hi, max(2, sample_budget // 2), sample_budget - sample_budget // 2,
                                       seed=seed)
    fields = [f for f in FIELDS if getattr(spec, f) is not None]

    lipschitz = {}
    for field in fields:
        lipschitz[field] = max(_lipschitz_estimate(spec, field, v, points, lo, hi) for v in spec.controls)
    min_c = spec.c0(points)

    warnings = []
    passed = {'A3': bool(min_c > 0)}
    if not passed['A3']:
        warnings.append(f'Discount c is not bounded below by a positive constant (min c = {min_c:.6g}).')

    if spec.lipschitz is None:
        passed['A2'] = all(np.isfinite(v) for v in lipschitz.values())
    else:
        l1, l2 = spec.lipschitz
        first = lipschitz.get('c', 0.0) + lipschitz.get('f', 0.0)
        second = max(lipschitz.get('sigma', 0.0), lipschitz.get('b', 0.0), lipschitz.get('eta1', 0.0))
        passed['A2'] = bool(first <= l1 * (1 + 1e-12) and second <= l2 * (1 + 1e-12))
        if not passed['A2']:
            warnings.append(f'Empirical Lipschitz constants ({first:.6g}, {second:.6g}) exceed '
                            f'the declared ({l1:.6g}, {l2:.6g}).')

    for message in warnings:
        logger.warning('Problem %s: %s', spec.name, message)
    return ValidationReport(lipschitz=lipschitz, min_c=min_c, passed=passed,
                            warnings=warnings, sample_size=len(points))


def _resolve_box(spec, box):
    if box is None:
        box = spec.box
    if box is None:
        lo, hi = DEFAULT_VALIDATION_BOX
        return np.full(spec.dim, lo), np.full(spec.dim, hi)
    lo, hi = box
    return (np.broadcast_to(np.asarray(lo, dtype=float), (spec.dim,)).copy(),
            np.broadcast_to(np.asarray(hi, dtype=float), (spec.dim,)).copy())


def _lipschitz_estimate(spec, field, v, points, lo, hi):
    """ Largest difference quotient over axis neighbours of the grid and over random pairs. """
    n, N = points.shape
    values = spec.evaluate(field, points, v).reshape(n, -1)
    rng = np.random.default_rng(n)
    i, j = rng.integers(0, n, size=(2, 4 * n))
    keep = i != j
    i, j = i[keep], j[keep]

    # Axis neighbours at the grid spacing of the sample
    spacing = (hi - lo) / max(2, int(round(n ** (1.0 / N))))
    shifted, base = [], []
    for axis in range(N):
        step = np.zeros(N)
        step[axis] = spacing[axis] / 4
        shifted.append(points + step)
        base.append(points)
    shifted = np.vstack(shifted)
    base_values = np.vstack([values] * N)
    shifted_values = spec.evaluate(field, shifted, v).reshape(len(shifted), -1)

    dv = np.concatenate([np.linalg.norm(values[i] - values[j], axis=1),
                         np.linalg.norm(shifted_values - base_values, axis=1)])
    dx = np.concatenate([np.linalg.norm(points[i] - points[j], axis=1),
                         np.linalg.norm(shifted - np.vstack(base), axis=1)])
    mask = dx > 0
    return float(np.max(dv[mask] / dx[mask])) if np.any(mask) else 0.0


def apply_cutoff(spec: ProblemSpec, cut: CutoffSpec) -> ProblemSpec:
    """ Multiply sigma, b and eta1 by the cutoff; c and f are unchanged.

        Reapplying a cutoff starts from the uncut coefficients, so applying the
        same CutoffSpec twice returns the same problem.
    """
    if spec.cutoff is not None:
        if spec.cutoff == cut:
            return spec
        spec = spec.uncut

    def scaled(func, ndim):
        def wrapped(x, v):
            value = np.asarray(func(x, v), dtype=float)
            xi = cut.xi(x).reshape((-1,) + (1,) * ndim)
            return xi * value
        return wrapped

    return dataclasses.replace(spec, sigma=scaled(spec.sigma, 2), b=scaled(spec.b, 1),
                               eta1=scaled(spec.eta1, 2), cutoff=cut, uncut=spec)


def exterior_value(spec: ProblemSpec, x) -> np.ndarray:
    """ min over the controls of f/c, the exact solution outside the cutoff support.

        Arguments:
            spec: (ProblemSpec) the problem.
            x: a point or an array of points of shape (n, N).

        Returns a float for a single point, otherwise an array of shape (n,).
    """
    points = ipdehjb.helper.as_points(x, spec.dim)
    ratios = [spec.evaluate('f', points, v) / spec.evaluate('c', points, v) for v in spec.controls]
    value = np.min(np.vstack(ratios), axis=0)
    single = np.ndim(x) <= 1 and (spec.dim > 1 or np.ndim(x) == 0)
    return float(value[0]) if single else value


def exterior_rule(spec: ProblemSpec) -> Callable[[np.ndarray], np.ndarray]:
    """ The exterior value as a vectorized callable for a Triangulation. """
    return lambda points: exterior_value(spec, ipdehjb.helper.as_points(points, spec.dim))


def affine_problem(dim: int, tables: Sequence[Dict], noise_dim: Optional[int] = None,
                   jump_shape: Optional[JumpShape] = None, form: str = ipdehjb.constants.FORM_F,
                   name: str = 'affine') -> ProblemSpec:
    """ Compose a problem from constant + linear-in-x coefficient tables, one table per control.

        Each table maps keys to flat numeric lists:
            'sigma'         N*d entries (row-major), constant
            'b', 'b_linear' N and N*N entries: b(x) = b + B x
            'c', 'c_linear' 1 and N entries: c(x) = c + c_lin . x
            'f', 'f_linear' 1 and N entries
            'eta1'          N*N entries, constant
        Missing keys are zero. The control value passed to the callables is the table index.
    """
    noise_dim = noise_dim or dim

    def table_array(key, shape):
        arrays = []
        for table in tables:
            values = np.asarray(table.get(key, np.zeros(int(np.prod(shape)))), dtype=float)
            if values.size != int(np.prod(shape)):
                raise ipdehjb.errors.SizeMismatchError(
                    f'Affine coefficient {key} needs {int(np.prod(shape))} entries, received {values.size}.')
            arrays.append(values.reshape(shape))
        return arrays

    sigma = table_array('sigma', (dim, noise_dim))
    b0, b1 = table_array('b', (dim,)), table_array('b_linear', (dim, dim))
    c0, c1 = table_array('c', ()), table_array('c_linear', (dim,))
    f0, f1 = table_array('f', ()), table_array('f_linear', (dim,))
    eta = table_array('eta1', (dim, dim))

    return ProblemSpec(
        dim=dim, controls=ControlSet(tuple(range(len(tables)))), noise_dim=noise_dim,
        sigma=lambda x, v: sigma[v],
        b=lambda x, v: b0[v] + x @ b1[v].T,
        c=lambda x, v: c0[v] + x @ c1[v],
        f=lambda x, v: f0[v] + x @ f1[v],
        eta1=lambda x, v: eta[v],
        jump_shape=jump_shape, form=form, name=name)
