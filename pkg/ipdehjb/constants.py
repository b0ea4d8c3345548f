import os
import pathlib

# The path to the ipdehjb package
IPDEHJB_PATH = pathlib.Path(__file__).parent.absolute()

# Environment variable consulted when no --threads flag is given
ENV_THREADS = 'IPDE_HJB_THREADS'

# Name of the log file written by setup_logger
LOG_FILENAME = 'ipdehjb.log'

# Default number of worker threads
DEFAULT_THREADS = os.cpu_count() or 1

# Barycentric weights in [-SNAP_TOLERANCE, 0) are snapped to 0
SNAP_TOLERANCE = 1e-12

# Row sum + exterior mass must equal 1 within this tolerance
ROW_SUM_TOLERANCE = 1e-12

# Default relative tolerance of the adaptive annulus integrator
ANNULUS_RTOL = 1e-10

# Gauss-Legendre order of the coarse per-shell rule (the fine rule doubles it)
ANNULUS_SHELL_ORDER = 16

# Angular points per radial node in 2-D shells (coarse rule)
ANNULUS_ANGULAR_FACTOR = 4

# Maximum bisection depth within one shell
ANNULUS_MAX_DEPTH = 40

# Maximum number of geometric shells towards an inner radius of 0
ANNULUS_MAX_SHELLS = 400

# Shells inspected before deciding that an integrand does not vanish at 0
ANNULUS_MIN_SHELLS = 8

# Decay ratio above which successive shells are considered non-decaying
ANNULUS_STALL_RATIO = 0.999

# Radii are sampled over [1e-4, 1] and (1, 30] for envelope checks
ENVELOPE_SMALL_RADII = (1e-4, 1.0, 41)
ENVELOPE_TAIL_RADII = (1.0, 30.0, 59)

# Largest supported jump dimension M
MAX_JUMP_DIM = 2

# Largest supported state dimension N for the box mesher
MAX_MESH_DIM = 3

# Quadrature defaults
DEFAULT_MAX_NODES = 4_000_000                # node budget of build_annulus_rule
DEFAULT_OUTER_RADIUS = 2.0                   # outer truncation radius when none is configured
GRADING_RADIUS = 1.0                         # radius below which spacing shrinks geometrically

# Inner radius used when a natively bounded model is truncated without a coupling
BOUNDED_INNER_RADIUS = 1e-12

# Assembly defaults
DEFAULT_HLAMBDA_CAP = 1.0                    # h*lambda above this cap triggers a warning
DEFAULT_EXTERIOR_CAP = 0.25                  # mean exterior mass above this fraction is an error
ASSEMBLY_CHUNK_POINTS = 2_000_000            # jump targets located per chunk

# Solver defaults
DEFAULT_SOLVER_TOL = 1e-8
DEFAULT_MAX_ITER = 200_000
DEFAULT_MAX_OUTER = 200
DIRECT_SOLVE_MAX_ROWS = 3000                 # above this size policy evaluation uses BiCGSTAB
INNER_MAX_SWEEPS = 100_000

# Jump cases
CASE_BOUNDED = 'bounded'
CASE_COMPENSATED_F = 'compensated_F'
CASE_COMPENSATED_J = 'compensated_J'
CASES = (CASE_BOUNDED, CASE_COMPENSATED_F, CASE_COMPENSATED_J)

# Target equation forms
FORM_F = 'F'
FORM_J = 'J'
FORMS = (FORM_F, FORM_J)

# Solver methods
METHOD_VALUE = 'value'
METHOD_POLICY = 'policy'
METHODS = (METHOD_VALUE, METHOD_POLICY)

# Commands of the command line interface
COMMAND_SOLVE = 'solve'
COMMAND_STUDY = 'study'
COMMAND_CHECK = 'check'
COMMANDS = (COMMAND_SOLVE, COMMAND_STUDY, COMMAND_CHECK)

# Output file names
FILENAME_SOLUTION = 'solution.txt'
FILENAME_STUDY = 'study.csv'
FILENAME_CHECK = 'check.txt'

# Exit statuses
EXIT_OK = 0
EXIT_GATE_FAILED = 1
EXIT_CONFIG_ERROR = 2

# Number formatting for text artifacts
FLOAT_FORMAT = '%.17g'

# Parameter couplings of select_parameters
COUPLING_BOUNDED = 'bounded'                 # bounded density, diffusion present: r unused, k = dz = h^(5/4)
COUPLING_FIRST_ORDER = 'first_order'         # sigma = 0 and bounded density: k = dz = h^(3/2)
COUPLING_CASE_I = 'i'                        # alpha < 1, form F: r = h^(3/(6+alpha))
COUPLING_CASE_II = 'ii'                      # alpha in (1, 2), form J: r = h^(3/(3+5 alpha))
COUPLING_CASES = (COUPLING_BOUNDED, COUPLING_FIRST_ORDER, COUPLING_CASE_I, COUPLING_CASE_II)

# Smallest outer truncation radius of the coupled parameters
MIN_COUPLED_OUTER_RADIUS = 2.0
