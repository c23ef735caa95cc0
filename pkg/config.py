"""
config.py
Numerical defaults shared by the services, the CLI and the Flask app.

The Flask factory loads this class with app.config.from_object(Config);
services read the same attributes as their keyword defaults.
"""


class Config:
    # Flask
    SECRET_KEY = 'dev-secret-key'
    JSON_SORT_KEYS = False

    # hilbert: truncation of the monomial basis
    DEFAULT_DEGREE_1D = 64
    DEFAULT_TOTAL_DEGREE = 16

    # shell exhaustion, rho_j = 1 - 2**-j
    SHELL_J_MIN = 4
    SHELL_J_MAX = 14
    CONVERGENT_RATIO = 0.95
    DIVERGENT_RATIO = 1.05
    SHELL_NODES = 24

    # quasi-Monte Carlo fallback
    RHO_MAX = 1 - 2 ** -10
    QMC_POINTS = 2 ** 14
    QMC_REPLICATES = 4
    QMC_SEED = 20240101
    SPHERE_POINTS = 512

    # balanced test
    BALANCE_REL_TOL = 1e-4
    SAMPLE_RADII = 8
    SAMPLE_ANGLES = 3
    SAMPLE_RHO_MAX = 0.8

    # entropy bisection
    ENTROPY_TOL = 0.05
    MAX_SEED_STEPS = 20
    MAX_PROBES = 60

    THREADS = 1
