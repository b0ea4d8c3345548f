"""
Monotone compound midpoint quadrature over the truncation annulus.

Weights fold in the density (cell measure x m at the cell center), so every
weight is nonnegative and integrate(rule, g) approximates the integral of g
against the truncated measure.
"""

from __future__ import annotations

import dataclasses
import logging
import math

from typing import Callable, Optional

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
from ipdehjb.levy import TruncatedMeasure

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class QuadratureRule:
    """ Nodes strictly inside r < |z| < R with nonnegative weights.

        Arguments:
            nodes: (array) shape (n, M).
            weights: (array) shape (n,).
            dz: (float) refinement parameter, the largest cell width.
            measure: (TruncatedMeasure) the measure the rule discretizes.
    """
    nodes: np.ndarray
    weights: np.ndarray
    dz: float
    measure: Optional[TruncatedMeasure] = None

    @property
    def n_nodes(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        """ lambda_Q, the rule's own normalization constant. """
        return float(np.sum(self.weights))


def integrate(rule: QuadratureRule, g: Callable[[np.ndarray], np.ndarray]):
    """ Sum of g(z_j) w_j. g maps nodes of shape (n, M) to (n,) or (n, ...). """
    values = np.asarray(g(rule.nodes), dtype=float)
    if values.ndim == 0:
        return float(values) * rule.total_weight
    weighted = values * rule.weights.reshape((-1,) + (1,) * (values.ndim - 1))
    # numpy's pairwise summation along the node axis is deterministic
    result = np.sum(weighted, axis=0)
    return float(result) if result.ndim == 0 else result


def _shells(measure: TruncatedMeasure, dz: float, graded: bool):
    """ (inner, outer, spacing) triples covering (r, R). """
    r, R = measure.r, measure.R
    if not graded:
        return [(r, R, dz)]
    grading = ipdehjb.constants.GRADING_RADIUS
    shells = []
    a = r
    while a < min(R, grading):
        b = min(2 * a, R, grading)
        shells.append((a, b, dz * a / grading))
        a = b
    if a < R:
        shells.append((a, R, dz))
    return shells


def build_annulus_rule(measure: TruncatedMeasure, dz: float,
                       max_nodes: int = ipdehjb.constants.DEFAULT_MAX_NODES,
                       graded: Optional[bool] = None) -> QuadratureRule:
    """ Compound midpoint rule of spacing at most dz on the annulus of a truncated measure.

        Arguments:
            measure: (TruncatedMeasure) the measure; its model's dim must be 1 or 2.
            dz: (float) largest cell width.
            max_nodes: (int) node budget.
            graded: (bool) shrink the spacing geometrically below radius 1 (spacing
                dz * radius in each ratio-2 shell). Defaults to the model's singular flag.
    """
    if not dz > 0:
        raise ipdehjb.errors.InvalidParameterError(f'dz must be positive, received {dz}.')
    dim = measure.model.dim
    if dim > ipdehjb.constants.MAX_JUMP_DIM:
        raise ipdehjb.errors.DimensionUnsupportedError(f'Quadrature supports M <= 2, received M={dim}.')
    if graded is None:
        graded = bool(measure.model.singular)
    shells = _shells(measure, dz, graded)

    estimate = 0
    for a, b, s in shells:
        estimate += 2 * math.ceil((b - a) / s - 1e-9) if dim == 1 else math.pi * (b * b - a * a) / (s * s)
    if estimate > max_nodes:
        raise ipdehjb.errors.BudgetExceededError(
            f'Quadrature with dz={dz} needs about {int(estimate)} nodes (budget {max_nodes}).')

    nodes, cell = [], []
    for index, (a, b, s) in enumerate(shells):
        last = index == len(shells) - 1
        if dim == 1:
            n = max(1, math.ceil((b - a) / s - 1e-9))
            width = (b - a) / n
            centers = a + (np.arange(n) + 0.5) * width
            nodes.append(np.concatenate([-centers[::-1], centers]).reshape(-1, 1))
            cell.append(np.full(2 * n, width))
        else:
            n = max(1, math.ceil(2 * b / s - 1e-9))
            width = 2 * b / n
            axis = -b + (np.arange(n) + 0.5) * width
            grid = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
            radius = np.linalg.norm(grid, axis=1)
            keep = (radius > a) & ((radius < b) if last else (radius <= b))
            keep &= (radius > measure.r) & (radius < measure.R)
            nodes.append(grid[keep])
            cell.append(np.full(int(np.sum(keep)), width * width))

    nodes = np.vstack(nodes)
    weights = np.concatenate(cell) * measure.model.evaluate(nodes)
    if dim == 1:
        order = np.argsort(nodes[:, 0], kind='stable')
        nodes, weights = nodes[order], weights[order]
    keep = weights > 0
    nodes, weights = nodes[keep], weights[keep]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    logger.debug('Annulus rule (r=%g, R=%g, dz=%g): %d nodes in %d shells.',
                 measure.r, measure.R, dz, len(weights), len(shells))
    return QuadratureRule(nodes=nodes, weights=weights, dz=float(dz), measure=measure)
