"""
Built-in problems selectable by name from a run configuration.

Each preset bundles a ProblemSpec, its Levy model (None without jumps) and the
configuration defaults that make it solvable at desk scale. Configuration
values given explicitly override the defaults.
"""

import collections

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.levy
from ipdehjb.constants import COUPLING_BOUNDED, COUPLING_CASE_I, COUPLING_CASE_II, COUPLING_FIRST_ORDER
from ipdehjb.problem import ControlSet, ProblemSpec

PRESET_CONSTANT = 'constant'
PRESET_FIRST_ORDER_1D = 'first_order_1d'
PRESET_DIFFUSION_MERTON_1D = 'diffusion_merton_1d'
PRESET_TEMPERED_STABLE_CASE_I = 'tempered_stable_1d_case_i'
PRESET_TEMPERED_STABLE_CASE_II = 'tempered_stable_1d_case_ii'
PRESET_DIFFUSION_JUMPS_2D = 'diffusion_jumps_2d'
PRESET_NAMES = (PRESET_CONSTANT, PRESET_FIRST_ORDER_1D, PRESET_DIFFUSION_MERTON_1D,
                PRESET_TEMPERED_STABLE_CASE_I, PRESET_TEMPERED_STABLE_CASE_II, PRESET_DIFFUSION_JUMPS_2D)

Preset = collections.namedtuple('Preset', ['name', 'spec', 'model', 'defaults'])


def _constant():
    spec = ProblemSpec(dim=1, controls=ControlSet((0,)), sigma=lambda x, v: 0.0, b=lambda x, v: 0.0,
                       c=lambda x, v: 1.0, f=lambda x, v: 1.0, lipschitz=(0.0, 0.0),
                       box=((-1.0,), (1.0,)), name=PRESET_CONSTANT)
    defaults = {'discretization.h': 0.1, 'discretization.box': (-1.0, 1.0), 'discretization.cells': (4,),
                'discretization.case': COUPLING_BOUNDED}
    return Preset(PRESET_CONSTANT, spec, None, defaults)


def _first_order_1d():
    model = ipdehjb.levy.builtin_model('merton', (1.0, 0.3, 0.0))
    spec = ProblemSpec(dim=1, controls=ControlSet((-0.5, 0.0, 0.5)),
                       sigma=lambda x, v: 0.0,
                       b=lambda x, v: v,
                       c=lambda x, v: 1.0,
                       f=lambda x, v: 1.0 + 0.5 * np.sin(x[:, 0]) + 0.5 * v * v,
                       eta1=lambda x, v: 0.3,
                       jump_shape=ipdehjb.levy.identity_shape(1), form=ipdehjb.constants.FORM_F,
                       lipschitz=(0.5, 0.0), box=((-3.0,), (3.0,)), name=PRESET_FIRST_ORDER_1D)
    defaults = {'discretization.h': 2.0 ** -4, 'discretization.box': (-3.0, 3.0),
                'discretization.auto': True, 'discretization.case': COUPLING_FIRST_ORDER}
    return Preset(PRESET_FIRST_ORDER_1D, spec, model, defaults)


def _diffusion_merton_1d():
    model = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.0))
    spec = ProblemSpec(dim=1, controls=ControlSet((0.2, 0.5)),
                       sigma=lambda x, v: v,
                       b=lambda x, v: -0.2 * np.tanh(x[:, :1]),
                       c=lambda x, v: 1.0,
                       f=lambda x, v: 1.0 + 0.5 * np.cos(x[:, 0]) + v,
                       eta1=lambda x, v: 0.2,
                       jump_shape=ipdehjb.levy.identity_shape(1), form=ipdehjb.constants.FORM_F,
                       lipschitz=(0.5, 0.2), box=((-3.0,), (3.0,)), name=PRESET_DIFFUSION_MERTON_1D)
    defaults = {'discretization.h': 2.0 ** -4, 'discretization.box': (-3.0, 3.0),
                'discretization.auto': True, 'discretization.case': COUPLING_BOUNDED}
    return Preset(PRESET_DIFFUSION_MERTON_1D, spec, model, defaults)


def _tempered_stable_1d(alpha, form, name, case):
    model = ipdehjb.levy.builtin_model('tempered_stable', (alpha, 1.0, 1.0, 1.0, 1.0))
    spec = ProblemSpec(dim=1, controls=ControlSet((-0.3, 0.3)),
                       sigma=lambda x, v: 0.2,
                       b=lambda x, v: v,
                       c=lambda x, v: 1.0,
                       f=lambda x, v: 1.0 + 0.5 * np.sin(x[:, 0]) + 0.2 * v,
                       eta1=lambda x, v: 0.2,
                       jump_shape=ipdehjb.levy.identity_shape(1), form=form,
                       lipschitz=(0.5, 0.0), box=((-3.0,), (3.0,)), name=name)
    defaults = {'discretization.h': 2.0 ** -4, 'discretization.box': (-3.0, 3.0),
                'discretization.auto': True, 'discretization.case': case}
    return Preset(name, spec, model, defaults)


def _diffusion_jumps_2d():
    model = ipdehjb.levy.builtin_model('merton', (1.0, 0.5, 0.0))
    spec = ProblemSpec(dim=2, controls=ControlSet((0.2, 0.4)), noise_dim=2,
                       sigma=lambda x, v: v * np.eye(2),
                       b=lambda x, v: 0.0,
                       c=lambda x, v: 1.0,
                       f=lambda x, v: 1.0 + 0.5 * np.cos(x[:, 0]) * np.sin(x[:, 1]) + v,
                       eta1=lambda x, v: 0.2 * np.eye(2),
                       jump_shape=ipdehjb.levy.linear_shape((1.0, 0.5)), form=ipdehjb.constants.FORM_F,
                       lipschitz=(0.5, 0.0), box=((-2.0, -2.0), (2.0, 2.0)), name=PRESET_DIFFUSION_JUMPS_2D)
    defaults = {'discretization.h': 2.0 ** -3, 'discretization.box': (-2.0, 2.0),
                'discretization.cells': (16, 16), 'discretization.dz': 2.0 ** -5,
                'discretization.case': COUPLING_BOUNDED}
    return Preset(PRESET_DIFFUSION_JUMPS_2D, spec, model, defaults)


_BUILDERS = {
    PRESET_CONSTANT: _constant,
    PRESET_FIRST_ORDER_1D: _first_order_1d,
    PRESET_DIFFUSION_MERTON_1D: _diffusion_merton_1d,
    PRESET_TEMPERED_STABLE_CASE_I: lambda: _tempered_stable_1d(
        0.5, ipdehjb.constants.FORM_F, PRESET_TEMPERED_STABLE_CASE_I, COUPLING_CASE_I),
    PRESET_TEMPERED_STABLE_CASE_II: lambda: _tempered_stable_1d(
        1.5, ipdehjb.constants.FORM_J, PRESET_TEMPERED_STABLE_CASE_II, COUPLING_CASE_II),
    PRESET_DIFFUSION_JUMPS_2D: _diffusion_jumps_2d,
}


def get_preset(name: str) -> Preset:
    """ Build the named preset.

        Arguments:
            name: (str) one of PRESET_NAMES.
    """
    if name not in _BUILDERS:
        raise ipdehjb.errors.InvalidParameterError(
            f'Unknown preset "{name}". Supported presets: {", ".join(PRESET_NAMES)}.')
    return _BUILDERS[name]()
