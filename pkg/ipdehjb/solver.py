"""
Value and policy iteration for the fully discrete Bellman system, and the
solution dump format.
"""

from __future__ import annotations

import dataclasses
import inspect
import logging
import math

from typing import Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse
import scipy.sparse.linalg

import ipdehjb.base
import ipdehjb.constants
import ipdehjb.errors
from ipdehjb.scheme import DiscreteBellmanSystem

logger = logging.getLogger(__name__)

# scipy renamed the relative tolerance of its Krylov solvers from `tol` to `rtol`
_KRYLOV_TOL = 'rtol' if 'rtol' in inspect.signature(scipy.sparse.linalg.bicgstab).parameters else 'tol'


@dataclasses.dataclass(frozen=True)
class SolveOutcome:
    """ Result of a solve.

        Arguments:
            nodal_solution: (array) value per vertex.
            policy: (int array) argmin control index per vertex.
            iterations: (int) Bellman sweeps (value iteration) or outer sweeps (policy iteration).
            residual: (float) sup-norm of the last update.
            converged: (bool) whether the stopping rule was met.
            method: (str) 'value' or 'policy'.
            updates: (tuple) sup-norm of every update, in order.
    """
    nodal_solution: np.ndarray
    policy: np.ndarray
    iterations: int
    residual: float
    converged: bool
    method: str
    updates: Tuple[float, ...] = ()

    def update_ratios(self) -> np.ndarray:
        """ Ratios of successive sup-norm updates, skipping zero updates. """
        u = np.asarray(self.updates, dtype=float)
        if len(u) < 2:
            return np.zeros(0)
        mask = u[:-1] > 0
        return u[1:][mask] / u[:-1][mask]


def _check_size(system, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (system.n_vertices,):
        raise ipdehjb.errors.SizeMismatchError(
            f'Expected a nodal vector of length {system.n_vertices}, received shape {u.shape}.')
    return u


def _candidates(system: DiscreteBellmanSystem, u: np.ndarray) -> np.ndarray:
    """ Right-hand side of the Bellman map for every control, shape (n_controls, n_vertices). """
    stay = math.exp(-system.lam * system.h)
    jump = 1.0 - stay
    out = np.empty((system.n_controls, system.n_vertices))
    for v in range(system.n_controls):
        expected = stay * (system.M[v] @ u + system.ext_M[v])
        if jump > 0:
            expected = expected + jump * (system.P[v] @ u + system.ext_P[v])
        out[v] = system.h * system.f[v] + np.exp(-system.h * system.c[v]) * expected
    return out


def bellman_apply(system: DiscreteBellmanSystem, u) -> Tuple[np.ndarray, np.ndarray]:
    """ One application of the Bellman map: (min over controls, argmin with lowest index on ties). """
    candidates = _candidates(system, _check_size(system, u))
    policy = np.argmin(candidates, axis=0)
    return candidates[policy, np.arange(system.n_vertices)], policy


def _stopping_threshold(system, tol):
    q = system.contraction
    return tol * (1.0 - q) / q


def solve_value_iteration(system: DiscreteBellmanSystem, tol: float = ipdehjb.constants.DEFAULT_SOLVER_TOL,
                          max_iter: int = ipdehjb.constants.DEFAULT_MAX_ITER,
                          initial: Optional[np.ndarray] = None) -> SolveOutcome:
    """ Iterate the Bellman map from 0 until the distance to the fixed point is below tol.

        The sup-norm update d_n bounds the distance to the fixed point by d_n q / (1 - q)
        with q = e^{-h c0}; iteration stops once that bound is below tol.

        Arguments:
            system: (DiscreteBellmanSystem) the assembled system.
            tol: (float) certified distance to the fixed point.
            max_iter: (int) iteration cap; reaching it returns the last iterate flagged non-converged.
            initial: (array) starting vector, zeros by default.
    """
    if not tol > 0:
        raise ipdehjb.errors.InvalidParameterError(f'Solver tolerance must be positive, received {tol}.')
    threshold = _stopping_threshold(system, tol)
    u = np.zeros(system.n_vertices) if initial is None else _check_size(system, initial).copy()
    updates = []
    policy = np.zeros(system.n_vertices, dtype=np.int64)
    converged = False
    for _ in range(max_iter):
        new, policy = bellman_apply(system, u)
        delta = float(np.max(np.abs(new - u))) if len(u) else 0.0
        updates.append(delta)
        u = new
        if delta < threshold or delta == 0.0:
            converged = True
            break
    if not converged:
        logger.warning('Value iteration stopped after %d iterations with update %.3e (threshold %.3e).',
                       max_iter, updates[-1] if updates else float('nan'), threshold)
    logger.info('Value iteration: %d iterations, residual %.3e.', len(updates), updates[-1] if updates else 0.0)
    return SolveOutcome(nodal_solution=u, policy=policy, iterations=len(updates),
                        residual=updates[-1] if updates else 0.0, converged=converged,
                        method=ipdehjb.constants.METHOD_VALUE, updates=tuple(updates))


def _policy_operator(system, policy):
    """ (K, g) with u = K u + g the fixed-point system of a frozen policy. """
    stay = math.exp(-system.lam * system.h)
    jump = 1.0 - stay
    nv = system.n_vertices
    K = scipy.sparse.csr_matrix((nv, nv))
    g = np.zeros(nv)
    for v in range(system.n_controls):
        mask = (policy == v).astype(float)
        if not mask.any():
            continue
        discount = mask * np.exp(-system.h * system.c[v])
        rows = stay * system.M[v]
        if jump > 0:
            rows = rows + jump * system.P[v]
        K = K + scipy.sparse.diags(discount) @ rows
        g += mask * system.h * system.f[v] + discount * (stay * system.ext_M[v] + jump * system.ext_P[v])
    return K.tocsr(), g


def _evaluate_policy(system, policy, u, tol):
    """ Solve u = K u + g for a frozen policy, polished by fixed-point sweeps to tol. """
    K, g = _policy_operator(system, policy)
    nv = system.n_vertices
    A = (scipy.sparse.identity(nv, format='csr') - K).tocsc()
    if nv <= ipdehjb.constants.DIRECT_SOLVE_MAX_ROWS:
        u = scipy.sparse.linalg.spsolve(A, g)
    else:
        kwargs = {_KRYLOV_TOL: 1e-14, 'atol': 0.0, 'maxiter': 10 * nv}
        solution, info = scipy.sparse.linalg.bicgstab(A.tocsr(), g, x0=u, **kwargs)
        if info == 0 and np.all(np.isfinite(solution)):
            u = solution
        else:
            logger.warning('BiCGSTAB did not converge (info=%s); continuing with fixed-point sweeps.', info)
    u = np.asarray(u, dtype=float).reshape(nv)

    threshold = _stopping_threshold(system, tol)
    for _ in range(ipdehjb.constants.INNER_MAX_SWEEPS):
        new = K @ u + g
        delta = float(np.max(np.abs(new - u))) if nv else 0.0
        u = new
        if delta < max(threshold, _roundoff(u)):
            break
    return u


def _roundoff(u):
    return 64 * np.finfo(float).eps * (1.0 + (float(np.max(np.abs(u))) if len(u) else 0.0))


def solve_policy_iteration(system: DiscreteBellmanSystem, tol: float = ipdehjb.constants.DEFAULT_SOLVER_TOL,
                           max_outer: int = ipdehjb.constants.DEFAULT_MAX_OUTER) -> SolveOutcome:
    """ Howard's algorithm: evaluate the frozen policy, improve it, repeat until stable.

        Arguments:
            system: (DiscreteBellmanSystem) the assembled system.
            tol: (float) tolerance of the final residual; evaluations run to tol / 10.
            max_outer: (int) cap on improvement sweeps.
    """
    if not tol > 0:
        raise ipdehjb.errors.InvalidParameterError(f'Solver tolerance must be positive, received {tol}.')
    threshold = _stopping_threshold(system, tol)
    u = np.zeros(system.n_vertices)
    _, policy = bellman_apply(system, u)
    rows = np.arange(system.n_vertices)
    updates = []
    for outer in range(1, max_outer + 1):
        u = _evaluate_policy(system, policy, u, tol / 10.0)
        candidates = _candidates(system, u)
        best = candidates.min(axis=0)
        improved = best
        # Keep the current control on numerical ties so the policy cannot cycle
        tied = candidates[policy, rows] <= best + _roundoff(best)
        new_policy = np.where(tied, policy, np.argmin(candidates, axis=0))
        residual = float(np.max(np.abs(improved - u))) if len(u) else 0.0
        updates.append(residual)
        stable = np.array_equal(new_policy, policy)
        policy = new_policy
        if stable and residual < max(threshold, _roundoff(u)):
            policy = np.argmin(candidates, axis=0)
            logger.info('Policy iteration: %d outer sweeps, residual %.3e.', outer, residual)
            return SolveOutcome(nodal_solution=improved, policy=policy, iterations=outer, residual=residual,
                                converged=True, method=ipdehjb.constants.METHOD_POLICY, updates=tuple(updates))
    raise ipdehjb.errors.MaxIterationsExceededError(
        f'Policy iteration did not stabilize within {max_outer} outer sweeps.')


def solve(system: DiscreteBellmanSystem, method: str = ipdehjb.constants.METHOD_POLICY,
          tol: float = ipdehjb.constants.DEFAULT_SOLVER_TOL,
          max_iter: int = ipdehjb.constants.DEFAULT_MAX_ITER) -> SolveOutcome:
    """ Dispatch to value or policy iteration. For policy iteration max_iter caps the outer sweeps. """
    if method == ipdehjb.constants.METHOD_VALUE:
        return solve_value_iteration(system, tol=tol, max_iter=max_iter)
    if method == ipdehjb.constants.METHOD_POLICY:
        return solve_policy_iteration(system, tol=tol, max_outer=min(max_iter, ipdehjb.constants.DEFAULT_MAX_OUTER))
    raise ipdehjb.errors.InvalidParameterError(f'Unknown solver method "{method}".')


####
# Solution dump
####

def solution_frame(system: DiscreteBellmanSystem, outcome: SolveOutcome) -> pd.DataFrame:
    """ One row per vertex: index, coordinates, value and policy index. """
    coords = {f'x{i}': system.mesh.vertices[:, i] for i in range(system.mesh.dim)}
    frame = pd.DataFrame(coords)
    frame.insert(0, 'vertex_index', np.arange(system.n_vertices))
    frame['value'] = outcome.nodal_solution
    frame['policy_index'] = np.asarray(outcome.policy, dtype=np.int64)
    return frame


def write_solution(path, system: DiscreteBellmanSystem, outcome: SolveOutcome, header):
    """ Write the solution dump: comment header, then `vertex_index x_coords... value policy_index` lines.

        Arguments:
            path: (str) output file.
            header: (dict) resolved settings; h, lambda_Q, iterations and residual are added.
    """
    items = dict(header)
    items.update({'h': system.h, 'lambda_Q': system.lam, 'iterations': outcome.iterations,
                  'residual': outcome.residual, 'converged': outcome.converged})
    frame = solution_frame(system, outcome)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(ipdehjb.base.format_header(items))
        frame.to_csv(handle, sep=' ', header=False, index=False,
                     float_format=ipdehjb.constants.FLOAT_FORMAT, lineterminator='\n')


def read_solution(path):
    """ Read a solution dump; returns (frame, header dict of strings). """
    header = {}
    with open(path, 'r', encoding='utf-8') as handle:
        for line in handle:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].partition('=')
            header[key.strip()] = value.strip()
    frame = pd.read_csv(path, sep=' ', comment='#', header=None)
    n_coords = frame.shape[1] - 3
    frame.columns = ['vertex_index'] + [f'x{i}' for i in range(n_coords)] + ['value', 'policy_index']
    return frame, header
