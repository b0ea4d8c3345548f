"""
Compensated coefficients and assembly of the fully discrete Bellman system.

Per control v the scheme reads

    u_i = min_v { h f_i + e^{-h c_i} [ e^{-lam h} ((M u)_i + extM_i) + (1 - e^{-lam h}) ((P u)_i + extP_i) ] }

where M averages tent-function values at the diffusion foot points
x_i + h b_eff +- sqrt(D h) sigma_m, P averages them at the jump targets
x_i + eta1(x_i) phi(z_j) with the quadrature weights divided by lam = lam_Q,
and extM, extP collect the exterior values of mass leaving the mesh.
"""

from __future__ import annotations

import collections
import concurrent.futures
import dataclasses
import logging
import math

from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper
import ipdehjb.problem
from ipdehjb.constants import CASE_BOUNDED, CASE_COMPENSATED_F, CASE_COMPENSATED_J
from ipdehjb.levy import LevyModel, TruncatedMeasure, annulus_integral, truncate
from ipdehjb.mesh import Triangulation, build_box_mesh
from ipdehjb.problem import ProblemSpec
from ipdehjb.quadrature import QuadratureRule, build_annulus_rule

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class CompensatedCoefficients:
    """ Drift and diffusion of the truncated, compensated problem.

        Arguments:
            spec: (ProblemSpec) the problem.
            case: (str) one of 'bounded', 'compensated_F', 'compensated_J'.
            root: (array) N x N matrix C, the PSD square root of the small-jump second moment.
            drift_shift: (array) N-vector s with b_eff = b + eta1 s.
    """
    spec: ProblemSpec
    case: str
    root: np.ndarray
    drift_shift: np.ndarray

    @property
    def columns(self) -> int:
        """ Number of stencil directions D. """
        if self.case == CASE_BOUNDED:
            return self.spec.noise_dim
        return max(self.spec.noise_dim, self.spec.dim)

    @property
    def stencil_size(self) -> int:
        return (2 if self.case == CASE_BOUNDED else 4) * self.columns

    def drift(self, x, v) -> np.ndarray:
        """ b_eff at points of shape (n, N). """
        b = self.spec.evaluate('b', x, v)
        if not np.any(self.drift_shift):
            return b
        return b + np.einsum('nij,j->ni', self.spec.evaluate('eta1', x, v), self.drift_shift)

    def sigma_pair(self, x, v) -> Tuple[np.ndarray, np.ndarray]:
        """ (sigma_plus, sigma_minus), each of shape (n, N, D). """
        sigma = self._pad(self.spec.evaluate('sigma', x, v))
        if self.case == CASE_BOUNDED:
            return sigma, sigma
        jump = self._pad(self.spec.evaluate('eta1', x, v) @ self.root)
        return sigma + jump, sigma - jump

    def diffusion(self, x, v) -> np.ndarray:
        """ a_bar = (sigma_+ sigma_+^T + sigma_- sigma_-^T) / 4, shape (n, N, N). """
        plus, minus = self.sigma_pair(x, v)
        return 0.25 * (plus @ np.swapaxes(plus, 1, 2) + minus @ np.swapaxes(minus, 1, 2))

    def displacements(self, x, v, h) -> np.ndarray:
        """ Foot point offsets h b_eff +- sqrt(D h) sigma_m, shape (n, S, N), equal weights 1/S. """
        drift = h * self.drift(x, v)
        scale = math.sqrt(self.columns * h)
        plus, minus = self.sigma_pair(x, v)
        columns = [plus] if self.case == CASE_BOUNDED else [plus, minus]
        offsets = []
        for sigma in columns:
            for m in range(self.columns):
                offsets.append(drift + scale * sigma[:, :, m])
                offsets.append(drift - scale * sigma[:, :, m])
        return np.stack(offsets, axis=1)

    def _pad(self, matrix):
        D = self.columns
        if matrix.shape[2] == D:
            return matrix
        out = np.zeros(matrix.shape[:2] + (D,))
        out[:, :, :matrix.shape[2]] = matrix
        return out


def compensate(spec: ProblemSpec, measure: Optional[TruncatedMeasure],
               small_jumps: bool = True) -> CompensatedCoefficients:
    """ Select the jump case and precompute the measure-side constants.

        Arguments:
            spec: (ProblemSpec) the problem, with eta in factorized form.
            measure: (TruncatedMeasure) the truncated jump measure, None without jumps.
            small_jumps: (bool) replace the jumps below r by a drift and a diffusion.
                False keeps only the drift that belongs to the equation form itself.
    """
    N = spec.dim
    zero_root, zero_shift = np.zeros((N, N)), np.zeros(N)
    if spec.jump_shape is None or measure is None:
        return CompensatedCoefficients(spec, CASE_BOUNDED, zero_root, zero_shift)

    shape = spec.jump_shape
    model = measure.model
    if spec.form == ipdehjb.constants.FORM_F and model.singular and model.alpha >= 1:
        raise ipdehjb.errors.UnsupportedCaseError(
            f'alpha={model.alpha} needs the compensated jump operator (form J); form F was declared.')

    # Form J carries -1_{|z|<1} eta Du; after truncation its drift part is -eta1 int_{r<|z|<1} phi nu
    shift = -measure.compensator_first_moment(shape) if spec.form == ipdehjb.constants.FORM_J else zero_shift

    if not model.singular:
        return CompensatedCoefficients(spec, CASE_BOUNDED, zero_root, shift)

    if spec.form == ipdehjb.constants.FORM_F:
        case = CASE_COMPENSATED_F
        if small_jumps:
            shift = measure.inner_first_moment(shape)
    else:
        case = CASE_COMPENSATED_J
    if not small_jumps:
        return CompensatedCoefficients(spec, CASE_BOUNDED, zero_root, shift)

    root = ipdehjb.helper.sqrtm_psd(measure.inner_second_moment(shape))
    logger.info('Compensated %s coefficients: r=%g, |C|=%.4g, |shift|=%.4g.',
                case, measure.r, np.linalg.norm(root), np.linalg.norm(shift))
    return CompensatedCoefficients(spec, case, root, shift)


@dataclasses.dataclass(frozen=True)
class DiscreteBellmanSystem:
    """ Per-control transition matrices and vectors of the fully discrete scheme.

        Arrays indexed by control have shape (n_controls, n_vertices).
    """
    h: float
    lam: float
    M: Tuple[scipy.sparse.csr_matrix, ...]
    P: Tuple[scipy.sparse.csr_matrix, ...]
    c: np.ndarray
    f: np.ndarray
    ext_M: np.ndarray
    ext_P: np.ndarray
    ext_mass_M: np.ndarray
    ext_mass_P: np.ndarray
    mesh: Triangulation
    case: str = CASE_BOUNDED

    @property
    def n_controls(self) -> int:
        return len(self.M)

    @property
    def n_vertices(self) -> int:
        return self.mesh.n_vertices

    @property
    def c0(self) -> float:
        return float(np.min(self.c))

    @property
    def contraction(self) -> float:
        """ e^{-h c0}, the contraction factor of the Bellman map. """
        return math.exp(-self.h * self.c0)

    @property
    def jump_weight(self) -> float:
        return 1.0 - math.exp(-self.lam * self.h)

    def row_sum_defect(self) -> float:
        """ Largest |row sum + exterior mass - 1| over all matrices. """
        worst = 0.0
        for family, mass in ((self.M, self.ext_mass_M), (self.P, self.ext_mass_P)):
            for v, matrix in enumerate(family):
                sums = np.asarray(matrix.sum(axis=1)).reshape(-1) + mass[v]
                worst = max(worst, float(np.max(np.abs(sums - 1.0))))
        return worst

    def min_entry(self) -> float:
        return float(min(min(m.data.min(initial=0.0), p.data.min(initial=0.0)) for m, p in zip(self.M, self.P)))


def _scatter(mesh: Triangulation, targets: np.ndarray, weights: np.ndarray):
    """ Rows of tent-function values at targets.

        Arguments:
            targets: (array) shape (rows, S, N).
            weights: (array) shape (rows, S) or (S,), the weight of each target.

        Returns (csr matrix rows x nv, exterior value sum, exterior mass).
    """
    rows, S, N = targets.shape
    weights = np.broadcast_to(weights, (rows, S)).reshape(-1)
    points = targets.reshape(-1, N)
    simplex, bary, vertex = mesh.locate_many(points)
    row_index = np.repeat(np.arange(rows), S)

    inside = simplex >= 0
    data = (bary[inside] * weights[inside, None]).reshape(-1)
    cols = vertex[inside].reshape(-1)
    rr = np.repeat(row_index[inside], N + 1)
    matrix = scipy.sparse.coo_matrix((data, (rr, cols)), shape=(rows, mesh.n_vertices)).tocsr()
    matrix.eliminate_zeros()

    outside = ~inside
    ext_value = np.zeros(rows)
    ext_mass = np.zeros(rows)
    if np.any(outside):
        values = np.asarray(mesh.exterior_rule(points[outside]), dtype=float).reshape(-1)
        ext_value = np.bincount(row_index[outside], weights=weights[outside] * values, minlength=rows)
        ext_mass = np.bincount(row_index[outside], weights=weights[outside], minlength=rows)
    return matrix, ext_value, ext_mass


def stencil_matrices(coeffs: CompensatedCoefficients, mesh: Triangulation, h: float, v) -> List:
    """ The matrices M+-_m of one control, one per foot point direction, with unit weights. """
    offsets = coeffs.displacements(mesh.vertices, v, h)
    targets = mesh.vertices[:, None, :] + offsets
    return [_scatter(mesh, targets[:, s:s + 1, :], np.ones(1)) for s in range(offsets.shape[1])]


def _diffusion_rows(coeffs, mesh, h, v):
    offsets = coeffs.displacements(mesh.vertices, v, h)
    S = offsets.shape[1]
    return _scatter(mesh, mesh.vertices[:, None, :] + offsets, np.full(S, 1.0 / S))


def _jump_rows(spec, mesh, rule, v, start, stop):
    x = mesh.vertices[start:stop]
    eta = spec.evaluate('eta1', x, v)                                 # (n, N, N)
    phi = spec.jump_shape.evaluate(rule.nodes)                        # (q, N)
    targets = x[:, None, :] + np.einsum('nij,qj->nqi', eta, phi)
    return _scatter(mesh, targets, rule.weights / rule.total_weight)


def assemble(spec: ProblemSpec, coeffs: CompensatedCoefficients, measure: Optional[TruncatedMeasure],
             mesh: Triangulation, rule: Optional[QuadratureRule], h: float, threads: Optional[int] = None,
             hl_cap: float = ipdehjb.constants.DEFAULT_HLAMBDA_CAP,
             exterior_cap: float = ipdehjb.constants.DEFAULT_EXTERIOR_CAP) -> DiscreteBellmanSystem:
    """ Assemble M(v), P(v), c, f and the exterior contributions on the mesh vertices.

        Arguments:
            spec: (ProblemSpec) the problem (after any cutoff).
            coeffs: (CompensatedCoefficients) output of compensate.
            measure: (TruncatedMeasure) the truncated measure, None without jumps.
            mesh: (Triangulation) the mesh; its exterior rule prices mass leaving the box.
            rule: (QuadratureRule) the annulus rule, None without jumps.
            h: (float) time step in (0, 1].
            threads: (int) workers for the jump rows.
            hl_cap: (float) warn when h * lambda_Q exceeds it.
            exterior_cap: (float) largest mean exterior mass of a matrix family.
    """
    if not 0 < h <= 1:
        raise ipdehjb.errors.InvalidParameterError(f'Time step h must lie in (0, 1], received {h}.')
    threads = ipdehjb.helper.resolve_threads(threads)
    jumps = spec.jump_shape is not None and rule is not None and rule.n_nodes > 0
    lam = rule.total_weight if jumps else 0.0
    if h * lam > hl_cap:
        logger.warning('h * lambda = %.4g exceeds the cap %.4g.', h * lam, hl_cap)

    nv = mesh.n_vertices
    M, P = [], []
    shape = (spec.control_count, nv)
    ext_M, ext_P = np.zeros(shape), np.zeros(shape)
    mass_M, mass_P = np.zeros(shape), np.zeros(shape)
    c = np.vstack([spec.evaluate('c', mesh.vertices, v) for v in spec.controls])
    f = np.vstack([spec.evaluate('f', mesh.vertices, v) for v in spec.controls])

    executor = concurrent.futures.ThreadPoolExecutor(max_workers=threads)
    try:
        for iv, v in enumerate(spec.controls):
            matrix, ext_M[iv], mass_M[iv] = _diffusion_rows(coeffs, mesh, h, v)
            M.append(matrix)

            if jumps:
                chunk = max(1, ipdehjb.constants.ASSEMBLY_CHUNK_POINTS // rule.n_nodes)
                ranges = list(ipdehjb.helper.chunk_ranges(nv, chunk))
                parts = list(executor.map(lambda r: _jump_rows(spec, mesh, rule, v, *r), ranges))
                P.append(scipy.sparse.vstack([p[0] for p in parts], format='csr'))
                ext_P[iv] = np.concatenate([p[1] for p in parts])
                mass_P[iv] = np.concatenate([p[2] for p in parts])
            else:
                P.append(scipy.sparse.identity(nv, format='csr'))
    finally:
        executor.shutdown(wait=True)

    for label, mass in (('M', mass_M), ('P', mass_P)):
        fraction = float(np.max(np.mean(mass, axis=1)))
        if fraction > exterior_cap:
            raise ipdehjb.errors.MeshTooSmallError(
                f'{fraction:.1%} of the {label} transition mass leaves the mesh box '
                f'{mesh.box[0]}..{mesh.box[1]} (cap {exterior_cap:.0%}).')

    system = DiscreteBellmanSystem(h=float(h), lam=float(lam), M=tuple(M), P=tuple(P), c=c, f=f,
                                   ext_M=ext_M, ext_P=ext_P, ext_mass_M=mass_M, ext_mass_P=mass_P,
                                   mesh=mesh, case=coeffs.case)
    logger.info('Assembled %d controls on %d vertices: nnz(M)=%d, nnz(P)=%d, lambda_Q=%.6g, case=%s.',
                spec.control_count, nv, sum(m.nnz for m in M), sum(p.nnz for p in P), lam, coeffs.case)
    return system


def semi_discrete_apply(spec: ProblemSpec, coeffs: CompensatedCoefficients, measure: Optional[TruncatedMeasure],
                        h: float, v, phi, x):
    """ Mesh-free generator e^{-h lam} L_h phi(x) + ((1 - e^{-h lam}) / h) I_h phi(x).

        L_h is the foot point difference quotient of the stencil and I_h phi is the
        mean jump increment (1/lam) int [phi(x + eta) - phi(x)] nu_{r,R}, computed
        by the adaptive annulus integrator with lam the analytic mass.

        Arguments:
            phi: (callable) maps points of shape (n, N) to (n,).
            x: one point or an array of points of shape (n, N).
    """
    points = ipdehjb.helper.as_points(x, spec.dim)
    base = np.asarray(phi(points), dtype=float).reshape(-1)
    offsets = coeffs.displacements(points, v, h)                      # (n, S, N)
    n, S, N = offsets.shape
    feet = np.asarray(phi((points[:, None, :] + offsets).reshape(-1, N)), dtype=float).reshape(n, S)
    local = (feet.mean(axis=1) - base) / h

    jumps = spec.jump_shape is not None and measure is not None
    lam = measure.mass if jumps else 0.0
    result = math.exp(-h * lam) * local
    if jumps and lam > 0:
        eta = spec.evaluate('eta1', points, v)

        def increment(z):
            shift = np.einsum('nij,qj->qni', eta, spec.jump_shape.evaluate(z))
            values = np.asarray(phi((points[None, :, :] + shift).reshape(-1, N)), dtype=float)
            return values.reshape(len(z), n) - base[None, :]
        mean_jump = annulus_integral(measure, measure.r, measure.R, increment) / lam
        result = result + (1.0 - math.exp(-h * lam)) / h * mean_jump
    single = np.ndim(x) <= 1 and (spec.dim > 1 or np.ndim(x) == 0)
    return float(result[0]) if single else result


def reach(spec: ProblemSpec, coeffs: CompensatedCoefficients, measure: Optional[TruncatedMeasure],
          h: float, points: np.ndarray) -> float:
    """ Largest one-step displacement over the given points: drift, diffusion and jumps. """
    radius = 0.0
    for v in spec.controls:
        offsets = coeffs.displacements(points, v, h)
        radius = max(radius, float(np.max(np.linalg.norm(offsets, axis=2))))
        if spec.jump_shape is not None and measure is not None:
            eta = np.linalg.norm(spec.evaluate('eta1', points, v), ord=2, axis=(1, 2))
            z = _radial_sample(measure)
            phi = float(np.max(np.linalg.norm(spec.jump_shape.evaluate(z), axis=1)))
            radius = max(radius, float(np.max(eta)) * phi)
    return radius


def _radial_sample(measure):
    radii = np.linspace(0.0, measure.R, 257)[1:]
    if measure.model.dim == 1:
        return np.concatenate([radii, -radii]).reshape(-1, 1)
    theta = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    return (radii[:, None, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)[None]).reshape(-1, 2)


def effective_box(spec: ProblemSpec, coeffs: CompensatedCoefficients, measure: Optional[TruncatedMeasure],
                  h: float, box, samples: int = 512):
    """ The box enlarged by the largest one-step reach of its sampled points. """
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (spec.dim,)).copy()
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (spec.dim,)).copy()
    points = ipdehjb.helper.box_sample(lo, hi, samples, 0)
    width = reach(spec, coeffs, measure, h, points)
    return lo - width, hi + width


####
# End-to-end discretization
####

Discretization = collections.namedtuple('Discretization', ['system', 'coeffs', 'measure', 'rule', 'mesh'])
Discretization.__doc__ = """ The assembled system together with the pieces it was built from. """


def cells_for_size(box, dim: int, k: float) -> Tuple[int, ...]:
    """ Cells per axis of the coarsest Kuhn grid of the box whose cell diagonal is at most k. """
    lo, hi = _box_bounds(box, dim)
    return tuple(max(1, int(math.ceil((hi[i] - lo[i]) * math.sqrt(dim) / k - 1e-9))) for i in range(dim))


def _box_bounds(box, dim):
    return (np.broadcast_to(np.asarray(box[0], dtype=float), (dim,)).copy(),
            np.broadcast_to(np.asarray(box[1], dtype=float), (dim,)).copy())


def build_system(spec: ProblemSpec, model: Optional[LevyModel], h: float, box, cells=None,
                 k: Optional[float] = None, dz: Optional[float] = None, r: Optional[float] = None,
                 R: Optional[float] = None, exterior_rule=None, threads: Optional[int] = None,
                 small_jumps: bool = True, max_nodes: int = ipdehjb.constants.DEFAULT_MAX_NODES,
                 exterior_cap: float = ipdehjb.constants.DEFAULT_EXTERIOR_CAP) -> Discretization:
    """ Truncate, compensate, mesh, build the quadrature and assemble.

        Arguments:
            spec: (ProblemSpec) the problem.
            model: (LevyModel) the jump density, None without jumps.
            h: (float) time step.
            box: (tuple) (lo, hi) of the mesh.
            cells: (list of int) cells per axis; derived from k when omitted.
            k: (float) mesh size, used when cells is omitted.
            dz: (float) quadrature spacing. Defaults to the mesh size.
            r, R: (float) truncation radii. r defaults to a negligible radius for bounded densities.
            exterior_rule: (callable) exterior values. Defaults to min_v f/c of the problem.
            small_jumps: (bool) passed to compensate.
    """
    if cells is None:
        if k is None:
            raise ipdehjb.errors.InvalidParameterError('Either the cells per axis or the mesh size k is required.')
        cells = cells_for_size(box, spec.dim, k)
    lo, hi = _box_bounds(box, spec.dim)
    if exterior_rule is None:
        exterior_rule = ipdehjb.problem.exterior_rule(spec)
    mesh = build_box_mesh((lo, hi), cells, exterior_rule)

    measure, rule = None, None
    if spec.jump_shape is not None and model is not None:
        if r is None:
            if model.singular:
                raise ipdehjb.errors.InvalidParameterError(
                    f'Model {model.name} is singular at 0 and needs an inner truncation radius r.')
            r = ipdehjb.constants.BOUNDED_INNER_RADIUS
        measure = truncate(model, r, R if R is not None else ipdehjb.constants.DEFAULT_OUTER_RADIUS)
        rule = build_annulus_rule(measure, dz if dz is not None else mesh.k, max_nodes=max_nodes)
    coeffs = compensate(spec, measure, small_jumps=small_jumps)
    system = assemble(spec, coeffs, measure, mesh, rule, h, threads=threads, exterior_cap=exterior_cap)
    return Discretization(system=system, coeffs=coeffs, measure=measure, rule=rule, mesh=mesh)
