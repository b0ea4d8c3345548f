
# Status flags of a study
STATUS_STUDY_FAILED = -1                      # a level raised an error
STATUS_STUDY_NEW = 0                          # new study
STATUS_STUDY_COMPLETE = 1                     # all levels finished and the report is built
STATUS_STUDY_RUNNING = 2                      # levels are being computed

STATUS_STUDY_OPTIONS = (STATUS_STUDY_FAILED,
                        STATUS_STUDY_NEW,
                        STATUS_STUDY_COMPLETE,
                        STATUS_STUDY_RUNNING,
                       )

# Least-squares order fits need at least this many levels
MIN_FIT_LEVELS = 4

# Errors at or below this level count as exact (the order fit is skipped)
ROUNDOFF_FLOOR = 1e-12

# Slack subtracted from theoretical exponents in the rate gates
RATE_SLACK = 0.1

# Default level lists
CONSISTENCY_H_LIST = tuple(2.0 ** -j for j in range(3, 9))
TRUNCATION_R_LIST = tuple(2.0 ** -j for j in range(3, 9))
# The blow-up laws are asymptotic: above r = 2^-8 the bounded part of the integrals still bends the slope
BLOWUP_R_LIST = tuple(2.0 ** -j for j in range(14, 20))
FIRST_ORDER_H_LIST = tuple(2.0 ** -j for j in range(4, 9))
GENERAL_H_LIST = tuple(2.0 ** -j for j in range(2, 7))
DEPENDENCE_S_LIST = tuple(2.0 ** -j for j in range(2, 7))
DISCRETIZATION_K_LIST = tuple(2.0 ** -j for j in range(3, 8))

# Gates
CONSISTENCY_MIN_ORDER = 0.9
TRUNCATION_TOLERANCE = 0.15
BLOWUP_TOLERANCE = 0.05
FIRST_ORDER_MIN_ORDER = 0.5 - RATE_SLACK
GENERAL_MIN_ORDER = 0.25
DEPENDENCE_TARGET = 1.0
DEPENDENCE_TOLERANCE = 0.1
DISCRETIZATION_MIN_ORDER = 0.9

# Oracle settings
ORACLE_TOL = 1e-8                             # nominal accuracy of the continuous operator oracle
ORACLE_RESIDUAL_POINTS = 50                   # points of the manufactured residual gate
ORACLE_RESIDUAL_FACTOR = 10.0                 # residual gate is this multiple of ORACLE_TOL
FD_STEP = 1e-5                                # finite difference step for callables without derivatives
TAYLOR_RADIUS = 1e-5                          # jumps below this radius use the second order expansion
OUTER_DECAY = 40.0                            # untruncated integrals stop at OUTER_DECAY / tail_rate

# Boundary layer widening used to guard against boundary pollution
BOUNDARY_WIDENING_CELLS = 1
BOUNDARY_MAX_CHANGE = 0.2

# Names of the blow-up laws
LAW_MASS = 'mass'
LAW_DRIFT = 'drift'
LAW_THIRD_MOMENT = 'third_moment'
LAWS = (LAW_MASS, LAW_DRIFT, LAW_THIRD_MOMENT)
