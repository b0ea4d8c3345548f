from __future__ import annotations

import functools
import os

from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

import ipdehjb.constants
import ipdehjb.errors


def as_points(x, dim: int) -> np.ndarray:
    """ Coerce a point or a list of points into a float array of shape (n, dim).

        A 1-D input of length `dim` is read as a single point; for dim == 1
        a flat input is read as a list of scalar points.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ipdehjb.errors.SizeMismatchError(
            f'Expected points of dimension {dim}, received shape {np.shape(x)}.')
    return arr


def broadcast_field(value, shape: Tuple[int, ...]) -> np.ndarray:
    """ Broadcast the output of a coefficient callable to its full shape. """
    arr = np.asarray(value, dtype=float)
    try:
        return np.array(np.broadcast_to(arr, shape), dtype=float)
    except ValueError:
        raise ipdehjb.errors.SizeMismatchError(
            f'Coefficient output of shape {arr.shape} does not broadcast to {shape}.')


def fit_order(abscissa: Sequence[float], errors: Sequence[float],
              min_levels: int = 4) -> Optional[float]:
    """ Least-squares slope of log(errors) against log(abscissa).

        Returns None (no fit) for fewer than `min_levels` points or when any
        error is not strictly positive.
    """
    x = np.asarray(abscissa, dtype=float)
    y = np.asarray(errors, dtype=float)
    if len(x) < min_levels or np.any(~np.isfinite(y)) or np.any(y <= 0) or np.any(x <= 0):
        return None
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """ Symmetric positive semidefinite square root of a symmetric matrix.

        Negative eigenvalues within roundoff of zero are clipped to zero.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    a = 0.5 * (a + a.T)
    eigval, eigvec = np.linalg.eigh(a)
    scale = max(1.0, float(np.max(np.abs(eigval)))) if eigval.size else 1.0
    if np.any(eigval < -1e-10 * scale):
        raise ipdehjb.errors.InvalidParameterError(
            f'Matrix is not positive semidefinite (eigenvalues {eigval}).')
    root = (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T
    return 0.5 * (root + root.T)


@functools.lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """ Gauss-Legendre nodes and weights on [-1, 1] (cached). """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def resolve_threads(threads: Optional[int] = None) -> int:
    """ Worker count: explicit argument, then the environment variable, then machine parallelism. """
    if threads is None:
        env = os.environ.get(ipdehjb.constants.ENV_THREADS)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ipdehjb.errors.ConfigError(ipdehjb.constants.ENV_THREADS, 'must be an integer')
        else:
            threads = ipdehjb.constants.DEFAULT_THREADS
    if threads < 1:
        raise ipdehjb.errors.InvalidParameterError(f'Thread count must be positive, received {threads}.')
    return int(threads)


def chunk_ranges(n: int, chunk: int) -> Iterator[Tuple[int, int]]:
    """ Consecutive [start, stop) ranges covering range(n). """
    chunk = max(1, int(chunk))
    for start in range(0, n, chunk):
        yield start, min(n, start + chunk)


def box_sample(lo: np.ndarray, hi: np.ndarray, n_grid: int, n_random: int,
               seed: int = 0) -> np.ndarray:
    """ Deterministic sample of a box: a tensor grid plus uniform random points. """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dim = len(lo)
    per_axis = max(2, int(round(n_grid ** (1.0 / dim))))
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(dim)]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, dim)
    rng = np.random.default_rng(seed)
    random = lo + (hi - lo) * rng.random((max(0, n_random), dim))
    return np.vstack([grid, random])


def sup_norm(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.max(np.abs(arr))) if arr.size else 0.0

