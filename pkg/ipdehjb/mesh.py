"""
Simplicial triangulations of a box with barycentric point location and
piecewise-linear interpolation.

Classes
    Triangulation: vertices, simplices, mesh size k, regularity rho, box and exterior rule.
    BarycentricHit: the containing simplex and barycentric weights of one point.

Functions
    build_box_mesh: Kuhn/Freudenthal subdivision of a structured grid.
    locate, interpolate: single-point services.
    write_mesh, read_mesh: the flat text format `N vcount scount` + vertex lines + simplex lines.
"""

from __future__ import annotations

import collections
import itertools
import logging
import math

from typing import Callable, Optional, Sequence

import numpy as np
import scipy.spatial

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.helper

logger = logging.getLogger(__name__)

BarycentricHit = collections.namedtuple('BarycentricHit', ['simplex_index', 'weights', 'vertex_indices'])


class _Exterior(object):
    """ Marker returned by locate for points outside the mesh. """
    def __repr__(self):
        return 'EXTERIOR'

    def __bool__(self):
        return False


EXTERIOR = _Exterior()


def _zero_rule(points):
    return np.zeros(len(points))


class Triangulation(object):
    """ A conforming simplicial mesh of an axis-aligned box.

        Arguments:
            vertices: (array) shape (nv, N).
            simplices: (int array) shape (ns, N+1) of vertex indices.
            box: (tuple) (lo, hi) arrays. Defaults to the bounding box of the vertices.
            exterior_rule: (callable) values at points of shape (n, N) outside the mesh.
                Defaults to 0.
            cells_per_axis: (list) grid size when the mesh is a structured Kuhn mesh;
                enables arithmetic point location.
    """
    def __init__(self, vertices, simplices, box=None, exterior_rule: Optional[Callable] = None,
                 cells_per_axis: Optional[Sequence[int]] = None):
        self.vertices = np.array(vertices, dtype=float)
        self.simplices = np.array(simplices, dtype=np.int64)
        if self.vertices.ndim != 2 or self.simplices.ndim != 2 \
                or self.simplices.shape[1] != self.vertices.shape[1] + 1:
            raise ipdehjb.errors.SizeMismatchError('Simplices must list N+1 vertex indices in R^N.')
        self.vertices.setflags(write=False)
        self.simplices.setflags(write=False)
        self.dim = self.vertices.shape[1]

        if box is None:
            box = (self.vertices.min(axis=0), self.vertices.max(axis=0))
        self.box = (np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
        self.exterior_rule = exterior_rule or _zero_rule
        self.cells_per_axis = None if cells_per_axis is None else np.asarray(cells_per_axis, dtype=np.int64)

        self._neighbours = None
        self._compute_geometry()
        if self.cells_per_axis is not None:
            self._build_kuhn_structures()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_simplices(self) -> int:
        return len(self.simplices)

    def with_exterior_rule(self, exterior_rule: Callable) -> 'Triangulation':
        """ A mesh sharing this mesh's geometry with another exterior rule. """
        clone = object.__new__(Triangulation)
        clone.__dict__.update(self.__dict__)
        clone.exterior_rule = exterior_rule
        return clone

    ####
    # Geometry
    ####

    def _compute_geometry(self):
        N = self.dim
        corners = self.vertices[self.simplices]                       # (ns, N+1, N)
        edges = corners[:, 1:, :] - corners[:, :1, :]                 # (ns, N, N)
        volumes = np.abs(np.linalg.det(edges)) / math.factorial(N)
        if np.any(volumes <= 0):
            raise ipdehjb.errors.InvalidParameterError('The mesh contains degenerate simplices.')

        diam = np.zeros(len(corners))
        for i, j in itertools.combinations(range(N + 1), 2):
            diam = np.maximum(diam, np.linalg.norm(corners[:, i] - corners[:, j], axis=1))

        facet_area = np.zeros(len(corners))
        for skip in range(N + 1):
            face = np.delete(corners, skip, axis=1)                   # (ns, N, N)
            if N == 1:
                facet_area += 1.0
                continue
            fe = face[:, 1:, :] - face[:, :1, :]                      # (ns, N-1, N)
            gram = fe @ np.swapaxes(fe, 1, 2)
            facet_area += np.sqrt(np.clip(np.linalg.det(gram), 0, None)) / math.factorial(N - 1)
        inradius = N * volumes / facet_area

        self.volumes = volumes
        self.k = float(np.max(diam))
        self.rho = float(np.min(2 * inradius) / self.k)

        # Inverse barycentric maps: lambda_{1..N} = T^-1 (x - x_0)
        self._origin = corners[:, 0, :]
        self._inverse = np.linalg.inv(np.swapaxes(edges, 1, 2))

    def _build_kuhn_structures(self):
        N = self.dim
        self._cell_size = (self.box[1] - self.box[0]) / self.cells_per_axis
        perms = list(itertools.permutations(range(N)))
        self._perm_codes = {}
        for index, perm in enumerate(perms):
            self._perm_codes[_perm_code(np.asarray(perm)[None, :], N)[0]] = index
        self._perm_lookup = np.full(N ** N, -1, dtype=np.int64)
        for code, index in self._perm_codes.items():
            self._perm_lookup[code] = index
        self._n_perms = len(perms)

    def _build_walk_structures(self):
        N = self.dim
        facets = {}
        neighbours = np.full((self.n_simplices, N + 1), -1, dtype=np.int64)
        for s, simplex in enumerate(self.simplices):
            for skip in range(N + 1):
                key = tuple(sorted(np.delete(simplex, skip)))
                if key in facets:
                    other, other_skip = facets.pop(key)
                    neighbours[s, skip] = other
                    neighbours[other, other_skip] = s
                else:
                    facets[key] = (s, skip)
        self._neighbours = neighbours
        self._tree = scipy.spatial.cKDTree(self.vertices[self.simplices].mean(axis=1))

    ####
    # Point location
    ####

    def barycentric(self, points: np.ndarray, simplex_index: np.ndarray) -> np.ndarray:
        """ Barycentric coordinates of points with respect to the given simplices. """
        local = np.einsum('nij,nj->ni', self._inverse[simplex_index], points - self._origin[simplex_index])
        return np.concatenate([1.0 - local.sum(axis=1, keepdims=True), local], axis=1)

    def locate_many(self, points):
        """ Locate many points at once.

            Returns (simplex_index, weights, vertex_indices) with shapes (n,), (n, N+1)
            and (n, N+1); exterior points have simplex_index -1, zero weights and
            vertex index 0.
        """
        points = ipdehjb.helper.as_points(points, self.dim)
        inside = np.all((points >= self.box[0] - ipdehjb.constants.SNAP_TOLERANCE)
                        & (points <= self.box[1] + ipdehjb.constants.SNAP_TOLERANCE), axis=1)
        n = len(points)
        simplex = np.full(n, -1, dtype=np.int64)
        weights = np.zeros((n, self.dim + 1))
        idx = np.flatnonzero(inside)
        if len(idx):
            if self.cells_per_axis is not None:
                s, w = self._locate_kuhn(points[idx])
                bad = np.any(w < -ipdehjb.constants.SNAP_TOLERANCE, axis=1)
                if np.any(bad):
                    s[bad], w[bad] = self._locate_walk(points[idx[bad]])
            else:
                s, w = self._locate_walk(points[idx])
            simplex[idx] = s
            weights[idx] = w

        found = simplex >= 0
        w = weights[found]
        w[w < 0] = 0.0
        weights[found] = w / w.sum(axis=1, keepdims=True)
        vertex_indices = np.zeros((n, self.dim + 1), dtype=np.int64)
        vertex_indices[found] = self.simplices[simplex[found]]
        return simplex, weights, vertex_indices

    def _locate_kuhn(self, points):
        N = self.dim
        scaled = (points - self.box[0]) / self._cell_size
        cell = np.clip(np.floor(scaled).astype(np.int64), 0, self.cells_per_axis - 1)
        t = np.clip(scaled - cell, 0.0, 1.0)
        # Kuhn simplex: axes sorted by decreasing local coordinate
        perm = np.argsort(-t, axis=1, kind='stable')
        perm_index = self._perm_lookup[_perm_code(perm, N)]
        cell_index = np.ravel_multi_index(tuple(cell.T), tuple(self.cells_per_axis), order='F')
        simplex = cell_index * self._n_perms + perm_index
        ts = np.take_along_axis(t, perm, axis=1)
        w = np.empty((len(points), N + 1))
        w[:, 0] = 1.0 - ts[:, 0]
        w[:, 1:N] = ts[:, :-1] - ts[:, 1:]
        w[:, N] = ts[:, -1]
        return simplex, w

    def _locate_walk(self, points):
        N = self.dim
        n = len(points)
        if self._neighbours is None:
            self._build_walk_structures()
        _, start = self._tree.query(points)
        simplex = np.asarray(start, dtype=np.int64).reshape(n)
        weights = np.zeros((n, N + 1))
        for i in range(n):
            s = simplex[i]
            for _ in range(self.n_simplices + 1):
                w = self.barycentric(points[i:i + 1], np.array([s]))[0]
                worst = int(np.argmin(w))
                if w[worst] >= -ipdehjb.constants.SNAP_TOLERANCE:
                    break
                nxt = self._neighbours[s, worst]
                if nxt < 0:
                    s = -1
                    break
                s = nxt
            else:
                s = -1
            simplex[i] = s
            if s >= 0:
                weights[i] = w
        return simplex, weights

    def interpolate_many(self, nodal_values, points) -> np.ndarray:
        """ Piecewise-linear values at many points; exterior points use the exterior rule. """
        values = np.asarray(nodal_values, dtype=float)
        if values.shape != (self.n_vertices,):
            raise ipdehjb.errors.SizeMismatchError(
                f'Expected {self.n_vertices} nodal values, received {values.shape}.')
        points = ipdehjb.helper.as_points(points, self.dim)
        simplex, weights, vertex_indices = self.locate_many(points)
        out = np.sum(weights * values[vertex_indices], axis=1)
        outside = simplex < 0
        if np.any(outside):
            out[outside] = self.exterior_rule(points[outside])
        return out


def _perm_code(perm, N):
    return (perm * (N ** np.arange(N))).sum(axis=1)


def build_box_mesh(box, cells_per_axis: Sequence[int], exterior_rule: Optional[Callable] = None) -> Triangulation:
    """ Kuhn/Freudenthal triangulation of a box: each grid cell is split into N! simplices.

        Arguments:
            box: (tuple) (lo, hi), each a float or a list of N floats.
            cells_per_axis: (list of int) number of cells along each axis.
            exterior_rule: (callable) value used outside the box.
    """
    cells = np.atleast_1d(np.asarray(cells_per_axis, dtype=np.int64))
    N = len(cells)
    if N > ipdehjb.constants.MAX_MESH_DIM:
        raise ipdehjb.errors.DimensionUnsupportedError(
            f'Box meshes support N <= {ipdehjb.constants.MAX_MESH_DIM}, received N={N}.')
    if np.any(cells < 1):
        raise ipdehjb.errors.InvalidParameterError(f'Cell counts must be positive, received {list(cells)}.')
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (N,)).copy()
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (N,)).copy()
    if np.any(hi <= lo):
        raise ipdehjb.errors.InvalidParameterError('Box upper bounds must exceed the lower bounds.')

    # Vertex multi-index in Fortran order: the first axis varies fastest
    axes = [np.linspace(lo[i], hi[i], cells[i] + 1) for i in range(N)]
    grid = np.meshgrid(*axes, indexing='ij')
    vertices = np.stack([g.ravel(order='F') for g in grid], axis=1)
    strides = np.cumprod(np.concatenate([[1], (cells + 1)[:-1]]))

    corner_index = np.stack(np.meshgrid(*[np.arange(c) for c in cells], indexing='ij'), axis=-1)
    corner_index = corner_index.reshape(-1, N, order='F')            # cell order matches ravel order='F'
    corner = corner_index @ strides

    simplices = []
    for perm in itertools.permutations(range(N)):
        offsets = [0]
        for axis in perm:
            offsets.append(offsets[-1] + strides[axis])
        simplices.append(corner[:, None] + np.asarray(offsets)[None, :])
    # (n_cells, N!, N+1) so that simplex = cell * N! + perm
    simplices = np.stack(simplices, axis=1).reshape(-1, N + 1)

    mesh = Triangulation(vertices, simplices, box=(lo, hi), exterior_rule=exterior_rule, cells_per_axis=cells)
    logger.debug('Built Kuhn mesh: %d vertices, %d simplices, k=%.4g, rho=%.4g.',
                 mesh.n_vertices, mesh.n_simplices, mesh.k, mesh.rho)
    return mesh


def locate(mesh: Triangulation, x):
    """ The containing simplex and barycentric weights of a point, or EXTERIOR. """
    simplex, weights, vertex_indices = mesh.locate_many(ipdehjb.helper.as_points(x, mesh.dim)[:1])
    if simplex[0] < 0:
        return EXTERIOR
    return BarycentricHit(simplex_index=int(simplex[0]), weights=weights[0], vertex_indices=vertex_indices[0])


def interpolate(mesh: Triangulation, nodal_values, x) -> float:
    """ The piecewise-linear interpolant of nodal_values at one point. """
    return float(mesh.interpolate_many(nodal_values, ipdehjb.helper.as_points(x, mesh.dim)[:1])[0])


def solution_lipschitz(mesh: Triangulation, nodal_values) -> float:
    """ Largest difference quotient of nodal values along mesh edges. """
    values = np.asarray(nodal_values, dtype=float)
    best = 0.0
    for i, j in itertools.combinations(range(mesh.dim + 1), 2):
        a, b = mesh.simplices[:, i], mesh.simplices[:, j]
        length = np.linalg.norm(mesh.vertices[a] - mesh.vertices[b], axis=1)
        best = max(best, float(np.max(np.abs(values[a] - values[b]) / length)))
    return best


def write_mesh(mesh: Triangulation, path):
    """ Write a mesh in the flat text format. """
    fmt = ipdehjb.constants.FLOAT_FORMAT
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(f'{mesh.dim} {mesh.n_vertices} {mesh.n_simplices}\n')
        for vertex in mesh.vertices:
            handle.write(' '.join(fmt % c for c in vertex) + '\n')
        for simplex in mesh.simplices:
            handle.write(' '.join(str(int(i)) for i in simplex) + '\n')


def read_mesh(path, exterior_rule: Optional[Callable] = None) -> Triangulation:
    """ Read a mesh in the flat text format; point location walks between neighbours. """
    with open(path, 'r', encoding='utf-8') as handle:
        lines = [line.split() for line in handle if line.strip() and not line.startswith('#')]
    try:
        N, nv, ns = (int(v) for v in lines[0])
        vertices = np.array([[float(c) for c in line] for line in lines[1:1 + nv]])
        simplices = np.array([[int(c) for c in line] for line in lines[1 + nv:1 + nv + ns]])
    except (ValueError, IndexError):
        raise ipdehjb.errors.InvalidParameterError(f'Malformed mesh file {path}.')
    if vertices.shape != (nv, N) or simplices.shape != (ns, N + 1):
        raise ipdehjb.errors.SizeMismatchError(f'Mesh file {path} does not match its header.')
    return Triangulation(vertices, simplices, exterior_rule=exterior_rule)
