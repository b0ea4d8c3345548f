"""
Coupling of the truncation radii, mesh size and quadrature spacing to the time step.
"""

import collections
import logging
import math

import ipdehjb.constants
import ipdehjb.errors
from ipdehjb.constants import COUPLING_BOUNDED, COUPLING_CASE_I, COUPLING_CASE_II, COUPLING_FIRST_ORDER

logger = logging.getLogger(__name__)

Coupling = collections.namedtuple('Coupling', ['h', 'r', 'R', 'k', 'dz'])
Coupling.__doc__ = """ Discretization parameters coupled to one time step h. r is None for bounded densities. """


def select_parameters(h: float, alpha: float, ell: float, case: str) -> Coupling:
    """ Choose (r, R, k, dz) for the time step h.

        R = max(2, ln(1/h) / ell) keeps the tail term e^{-ell R} below h. The mesh size and
        quadrature spacing are k = dz = h^(5/4), or h^(3/2) for first order problems, which
        keeps the spatial penalty (k + dz) / h at the rate of the time discretization.

        Arguments:
            h: (float) time step in (0, 1].
            alpha: (float) singularity exponent of the density in [0, 2).
            ell: (float) exponential tail rate of the density.
            case: (str) 'bounded', 'first_order', 'i' (alpha < 1, r = h^(3/(6+alpha)))
                or 'ii' (alpha in (1, 2), r = h^(3/(3+5 alpha))).
    """
    if not 0 < h <= 1:
        raise ipdehjb.errors.InvalidParameterError(f'Time step h must lie in (0, 1], received {h}.')
    if not 0 <= alpha < 2:
        raise ipdehjb.errors.InvalidParameterError(f'alpha must lie in [0, 2), received {alpha}.')
    if not ell > 0:
        raise ipdehjb.errors.InvalidParameterError(f'Tail rate ell must be positive, received {ell}.')
    if case not in ipdehjb.constants.COUPLING_CASES:
        raise ipdehjb.errors.InvalidParameterError(
            f'Unknown coupling case "{case}". Supported cases: {", ".join(ipdehjb.constants.COUPLING_CASES)}.')
    if case == COUPLING_CASE_I and not alpha < 1:
        raise ipdehjb.errors.InvalidParameterError(f'Coupling case i needs alpha < 1, received {alpha}.')
    if case == COUPLING_CASE_II and not 1 < alpha < 2:
        raise ipdehjb.errors.InvalidParameterError(f'Coupling case ii needs alpha in (1, 2), received {alpha}.')

    R = max(ipdehjb.constants.MIN_COUPLED_OUTER_RADIUS, math.log(1.0 / h) / ell)
    step = h ** 1.5 if case == COUPLING_FIRST_ORDER else h ** 1.25
    if case == COUPLING_CASE_I:
        r = h ** (3.0 / (6.0 + alpha))
    elif case == COUPLING_CASE_II:
        r = h ** (3.0 / (3.0 + 5.0 * alpha))
    else:
        r = None
    logger.debug('Coupling for h=%g (case %s): r=%s, R=%g, k=dz=%g.', h, case, r, R, step)
    return Coupling(h=float(h), r=r, R=float(R), k=float(step), dz=float(step))


def coupling_case(alpha: float, has_diffusion: bool, singular: bool) -> str:
    """ The coupling case matching a density and the presence of diffusion. """
    if not singular:
        return COUPLING_BOUNDED if has_diffusion else COUPLING_FIRST_ORDER
    return COUPLING_CASE_I if alpha < 1 else COUPLING_CASE_II
