"""
Run configuration: a flat `key = value` text format with dotted keys.

    # comments start with '#'
    problem.preset = diffusion_merton_1d
    discretization.h = 0.0625
    solver.tol = 1e-8

Numeric lists are comma separated. Affine problems are given per control as
`problem.control.<i>.<coefficient> = <numbers>`. Preset defaults fill every key
the file leaves unset; unknown keys are an error.
"""

import collections
import dataclasses
import logging
import re

from typing import Any, Dict, Optional

import numpy as np

import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.levy
import ipdehjb.presets
import ipdehjb.problem
import ipdehjb.analysis.constants as anconst
import ipdehjb.analysis.manufactured
from ipdehjb.analysis.parameters import coupling_case, select_parameters
from ipdehjb.errors import ConfigError

logger = logging.getLogger(__name__)

AUTO = 'auto'

JUMP_SHAPE_NONE = 'none'
JUMP_SHAPES = (JUMP_SHAPE_NONE, 'identity', 'exponential')

STUDY_CONVERGENCE = 'convergence'
STUDY_CONSISTENCY = 'consistency'
STUDY_TRUNCATION = 'truncation'
STUDY_BLOWUP = 'blowup'
STUDY_DEPENDENCE = 'dependence'
STUDY_DISCRETIZATION = 'discretization'
STUDY_KINDS = (STUDY_CONVERGENCE, STUDY_CONSISTENCY, STUDY_TRUNCATION, STUDY_BLOWUP, STUDY_DEPENDENCE,
               STUDY_DISCRETIZATION)

# Coefficients of one affine control table
AFFINE_KEYS = ('sigma', 'b', 'b_linear', 'c', 'c_linear', 'f', 'f_linear', 'eta1')
_CONTROL_KEY = re.compile(r'^problem\.control\.(\d+)\.(\w+)$')


####
# Value parsers
####

def _string(key, text):
    if not text:
        raise ConfigError(key, 'must not be empty')
    return text


def _float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f'must be a number, received "{text}"')


def _positive_float(key, text):
    value = _float(key, text)
    if not value > 0:
        raise ConfigError(key, 'must be positive')
    return value


def _positive_int(key, text):
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(key, f'must be an integer, received "{text}"')
    if value < 1:
        raise ConfigError(key, 'must be positive')
    return value


def _bool(key, text):
    lowered = text.lower()
    if lowered in ('true', 'yes', '1', 'on'):
        return True
    if lowered in ('false', 'no', '0', 'off'):
        return False
    raise ConfigError(key, f'must be true or false, received "{text}"')


def _float_list(key, text):
    return tuple(_float(key, item.strip()) for item in text.split(',') if item.strip())


def _positive_list(key, text):
    values = _float_list(key, text)
    if not values or any(v <= 0 for v in values):
        raise ConfigError(key, 'must be a list of positive numbers')
    return values


def _nonnegative_list(key, text):
    values = _float_list(key, text)
    if not values or any(v < 0 for v in values):
        raise ConfigError(key, 'must be a list of nonnegative numbers')
    return values


def _int_list(key, text):
    values = tuple(_positive_int(key, item.strip()) for item in text.split(',') if item.strip())
    if not values:
        raise ConfigError(key, 'must be a list of positive integers')
    return values


def _radius(key, text):
    return AUTO if text.lower() == AUTO else _positive_float(key, text)


def _choice(options):
    def parse(key, text):
        if text not in options:
            raise ConfigError(key, f'must be one of {", ".join(options)}, received "{text}"')
        return text
    return parse


# key -> (parser, default)
SCHEMA = collections.OrderedDict([
    ('problem.preset', (_choice(ipdehjb.presets.PRESET_NAMES), None)),
    ('problem.dim', (_positive_int, None)),
    ('problem.noise_dim', (_positive_int, None)),
    ('problem.form', (_choice(ipdehjb.constants.FORMS), ipdehjb.constants.FORM_F)),
    ('problem.jump_shape', (_choice(JUMP_SHAPES), JUMP_SHAPE_NONE)),
    ('measure.name', (_choice(ipdehjb.levy.MODEL_NAMES), None)),
    ('measure.params', (_float_list, None)),
    ('measure.r', (_radius, None)),
    ('measure.R', (_radius, None)),
    ('measure.ell', (_positive_float, None)),
    ('discretization.h', (_positive_float, None)),
    ('discretization.k', (_positive_float, None)),
    ('discretization.dz', (_positive_float, None)),
    ('discretization.auto', (_bool, False)),
    ('discretization.case', (_choice(ipdehjb.constants.COUPLING_CASES), None)),
    ('discretization.box', (_float_list, None)),
    ('discretization.cells', (_int_list, None)),
    ('cutoff.mu', (_positive_float, None)),
    ('cutoff.width', (_positive_float, None)),
    ('solver.method', (_choice(ipdehjb.constants.METHODS), ipdehjb.constants.METHOD_POLICY)),
    ('solver.tol', (_positive_float, ipdehjb.constants.DEFAULT_SOLVER_TOL)),
    ('solver.max_iter', (_positive_int, ipdehjb.constants.DEFAULT_MAX_ITER)),
    ('output.dir', (_string, '.')),
    ('output.timings', (_bool, False)),
    ('study.kind', (_choice(STUDY_KINDS), STUDY_CONVERGENCE)),
    ('study.case', (_choice(ipdehjb.analysis.manufactured.BUILTIN_CASES), None)),
    ('study.law', (_choice(anconst.LAWS), anconst.LAW_MASS)),
    ('study.h_list', (_positive_list, None)),
    ('study.r_list', (_positive_list, None)),
    ('study.s_list', (_nonnegative_list, None)),
    ('study.k_list', (_positive_list, None)),
])

# Study case run by default for a preset
PRESET_STUDY_CASES = {
    ipdehjb.presets.PRESET_FIRST_ORDER_1D: ipdehjb.analysis.manufactured.CASE_FIRST_ORDER_1D,
    ipdehjb.presets.PRESET_DIFFUSION_MERTON_1D: ipdehjb.analysis.manufactured.CASE_GENERAL_1D,
    ipdehjb.presets.PRESET_TEMPERED_STABLE_CASE_I: ipdehjb.analysis.manufactured.CASE_I_1D,
    ipdehjb.presets.PRESET_TEMPERED_STABLE_CASE_II: ipdehjb.analysis.manufactured.CASE_II_1D,
}


ResolvedRun = collections.namedtuple(
    'ResolvedRun', ['spec', 'model', 'h', 'box', 'cells', 'k', 'dz', 'r', 'R', 'case', 'items'])
ResolvedRun.__doc__ = """ The problem and discretization parameters of a run, after presets and auto coupling.

    items: list of (key, value) pairs of the resolved configuration, in schema order.
"""


@dataclasses.dataclass
class RunConfig:
    """ A parsed run configuration.

        Arguments:
            command: (str) 'solve', 'study' or 'check'.
            values: (dict) parsed values of the keys given in the file.
            controls: (dict) affine control tables, index -> {coefficient: numbers}.
    """
    command: str
    values: Dict[str, Any] = dataclasses.field(default_factory=dict)
    controls: Dict[int, Dict[str, tuple]] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        """ Check the combination of keys that cannot be checked one at a time. """
        if self.command not in ipdehjb.constants.COMMANDS:
            raise ConfigError('command', f'must be one of {", ".join(ipdehjb.constants.COMMANDS)}')
        if self.controls and 'problem.preset' in self.values:
            raise ConfigError('problem.control', 'cannot be combined with problem.preset')

    def is_set(self, key) -> bool:
        return key in self.values

    def get(self, key):
        """ The file value, else the preset default, else the schema default. """
        if key in self.values:
            return self.values[key]
        preset = self.preset
        if preset is not None and key in preset.defaults:
            return preset.defaults[key]
        return SCHEMA[key][1]

    def set(self, key, text):
        """ Parse and store one value given as text. """
        self.values[key] = _parse_value(key, text)

    @property
    def preset_name(self) -> Optional[str]:
        name = self.values.get('problem.preset')
        if name is None and not self.controls:
            name = ipdehjb.presets.PRESET_CONSTANT
        return name

    @property
    def preset(self):
        name = self.preset_name
        return ipdehjb.presets.get_preset(name) if name is not None else None

    ####
    # Resolution
    ####

    def problem(self):
        """ (spec, model) of the run. """
        preset = self.preset
        if preset is not None:
            spec, model = preset.spec, preset.model
        else:
            spec, model = self._affine_problem(), None
        if self.is_set('measure.name'):
            params = self.get('measure.params')
            if params is None:
                raise ConfigError('measure.params', 'is required with measure.name')
            try:
                model = ipdehjb.levy.builtin_model(self.get('measure.name'), params)
            except ipdehjb.errors.InvalidParameterError as exc:
                raise ConfigError('measure.params', f'are invalid: {exc}')
        if spec.jump_shape is not None and model is not None and model.dim != spec.jump_shape.in_dim:
            raise ConfigError('problem.jump_shape', f'takes {spec.jump_shape.in_dim}-D jumps, the measure is '
                                                    f'{model.dim}-D')
        if self.is_set('cutoff.mu'):
            if not self.is_set('cutoff.width'):
                raise ConfigError('cutoff.width', 'is required with cutoff.mu')
            cut = ipdehjb.problem.CutoffSpec(self.get('cutoff.mu'), self.get('cutoff.width'))
            spec = ipdehjb.problem.apply_cutoff(spec, cut)
        return spec, model

    def _affine_problem(self):
        dim = self.get('problem.dim')
        if dim is None:
            raise ConfigError('problem.dim', 'is required for affine control tables')
        indices = sorted(self.controls)
        if indices != list(range(len(indices))):
            raise ConfigError('problem.control', f'indices must run 0..n-1, received {indices}')
        shape_name = self.get('problem.jump_shape')
        shape = None
        if shape_name == 'identity':
            shape = ipdehjb.levy.identity_shape(dim)
        elif shape_name == 'exponential':
            if dim != 1:
                raise ConfigError('problem.jump_shape', 'exponential needs problem.dim = 1')
            shape = ipdehjb.levy.exponential_shape()
        try:
            return ipdehjb.problem.affine_problem(dim, [self.controls[i] for i in indices],
                                                  noise_dim=self.get('problem.noise_dim'), jump_shape=shape,
                                                  form=self.get('problem.form'), name='affine')
        except ipdehjb.errors.SizeMismatchError as exc:
            raise ConfigError('problem.control', str(exc))

    def resolve(self) -> ResolvedRun:
        """ Resolve the problem, apply auto coupling and validate the discretization. """
        spec, model = self.problem()
        jumps = spec.jump_shape is not None and model is not None
        h = self.get('discretization.h')
        if h is None:
            raise ConfigError('discretization.h', 'is required')
        if h > 1:
            raise ConfigError('discretization.h', 'must not exceed 1')

        box = self._box(spec)
        alpha = model.alpha if jumps else 0.0
        ell = self.get('measure.ell') or (model.tail_rate if jumps else 1.0)
        case = self.get('discretization.case')
        if case is None:
            diffusive = any(np.any(spec.evaluate('sigma', np.vstack(box), v) != 0) for v in spec.controls)
            case = coupling_case(alpha, diffusive, jumps and model.singular)

        k, dz, r, R = (self.get('discretization.k'), self.get('discretization.dz'),
                       self.get('measure.r'), self.get('measure.R'))
        if self.get('discretization.auto') or AUTO in (r, R):
            try:
                coupled = select_parameters(h, alpha, ell, case)
            except ipdehjb.errors.InvalidParameterError as exc:
                raise ConfigError('discretization.case', str(exc))
            if self.get('discretization.auto'):
                k = k if k is not None else coupled.k
                dz = dz if dz is not None else coupled.dz
                r = coupled.r if r in (None, AUTO) else r
                R = coupled.R if R in (None, AUTO) else R
            else:
                r = coupled.r if r == AUTO else r
                R = coupled.R if R == AUTO else R

        cells = self.get('discretization.cells')
        if cells is not None and len(cells) != spec.dim:
            raise ConfigError('discretization.cells', f'needs {spec.dim} entries')
        if cells is None and k is None:
            raise ConfigError('discretization.k', 'is required unless discretization.cells or '
                                                  'discretization.auto is set')
        if jumps:
            if r is None and model.singular:
                raise ConfigError('measure.r', f'is required for the singular model {model.name}')
            if r is not None and R is not None and r >= R:
                raise ConfigError('measure.r', f'must be below measure.R ({R})')

        resolved = collections.OrderedDict(
            [('command', self.command), ('problem', spec.name), ('measure', model.name if jumps else 'none'),
             ('measure.params', model.params if jumps else ()), ('form', spec.form),
             ('discretization.h', h), ('discretization.k', k), ('discretization.dz', dz), ('measure.r', r),
             ('measure.R', R), ('discretization.case', case), ('discretization.box', tuple(np.concatenate(box))),
             ('discretization.cells', cells)])
        logger.info('Resolved %s run of %s: h=%g, k=%s, dz=%s, r=%s, R=%s, case %s.', self.command, spec.name,
                    h, k, dz, r, R, case)
        for key in SCHEMA:
            if key.startswith(('solver.', 'cutoff.', 'study.')) and self.get(key) is not None:
                resolved[key] = self.get(key)
        return ResolvedRun(spec=spec, model=model if jumps else None, h=h, box=box, cells=cells, k=k, dz=dz,
                           r=r, R=R, case=case, items=[(key, '' if v is None else v) for key, v in resolved.items()])

    def _box(self, spec):
        values = self.get('discretization.box')
        if values is None:
            if spec.box is None:
                raise ConfigError('discretization.box', 'is required')
            return (np.broadcast_to(np.asarray(spec.box[0], dtype=float), (spec.dim,)).copy(),
                    np.broadcast_to(np.asarray(spec.box[1], dtype=float), (spec.dim,)).copy())
        if len(values) == 2:
            lo, hi = np.full(spec.dim, values[0]), np.full(spec.dim, values[1])
        elif len(values) == 2 * spec.dim:
            lo, hi = np.asarray(values[:spec.dim]), np.asarray(values[spec.dim:])
        else:
            raise ConfigError('discretization.box', f'needs 2 or {2 * spec.dim} numbers')
        if np.any(hi <= lo):
            raise ConfigError('discretization.box', 'upper bounds must exceed the lower bounds')
        return lo, hi

    def study_case(self) -> str:
        case = self.get('study.case')
        if case is None:
            case = PRESET_STUDY_CASES.get(self.preset_name)
        if case is None:
            raise ConfigError('study.case', 'is required for this study')
        return case


def _parse_value(key, text):
    match = _CONTROL_KEY.match(key)
    if match is not None:
        if match.group(2) not in AFFINE_KEYS:
            raise ConfigError(key, f'is not an affine coefficient ({", ".join(AFFINE_KEYS)})')
        return _float_list(key, text)
    if key not in SCHEMA:
        raise ConfigError(key, 'is not a known setting')
    return SCHEMA[key][0](key, text.strip())


def parse_config(text: str, command: str) -> RunConfig:
    """ Parse the text of a configuration file. """
    config = RunConfig(command=command)
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f'line {number}', 'is not a key = value line')
        parsed = _parse_value(key, value.strip())
        match = _CONTROL_KEY.match(key)
        if match is not None:
            config.controls.setdefault(int(match.group(1)), {})[match.group(2)] = parsed
        else:
            config.values[key] = parsed
    config.validate()
    return config


def load_config(path, command: str) -> RunConfig:
    """ Read and parse a configuration file. """
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError('--config', f'cannot be read: {exc}')
    return parse_config(text, command)
