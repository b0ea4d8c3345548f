""" ipdehjb solves Hamilton-Jacobi-Bellman integro-PDEs with Levy jumps by a
    semi-Lagrangian scheme on simplicial meshes.

    The jump measure is truncated to an annulus, the small jumps are replaced by
    a compensating drift and diffusion, and the resulting Bellman system is
    solved by value or policy iteration. The analysis sub-package measures the
    consistency, truncation and convergence orders of the scheme.
"""

__version__ = '0.1.0'
