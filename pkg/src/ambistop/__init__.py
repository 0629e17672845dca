"""ambistop: optimal exercise timing of integral-type option contracts under
drift ambiguity on a geometric Brownian motion.

The public surface:

* model primitives and payoffs (:mod:`ambistop.model`)
* confluent hypergeometric kernels (:mod:`ambistop.hyper`)
* fundamental solutions, scale/speed densities (:mod:`ambistop.fundamentals`)
* the pasted excessive family U_c (:mod:`ambistop.excessive`)
* boundary/value solvers (:mod:`ambistop.solvers`)
* the finite-difference obstacle oracle (:mod:`ambistop.oracle_fd`)
* Monte Carlo verification (:mod:`ambistop.simulate`)
* the acceptance suite (:mod:`ambistop.acceptance`) and CLI (:mod:`ambistop.cli`)
"""

__version__ = "0.1.0"

from .errors import AmbistopError
from .model import (
    CharacteristicRoots,
    DriftSign,
    ModelParams,
    Payoff,
    PayoffKind,
    characteristic_roots,
    make_model,
)
from .hyper import HypergeometricEval, kummer_m, log_gamma, tricomi_u
from .fundamentals import (
    FundamentalPair,
    eval_p,
    eval_q,
    fundamental_pair,
    scale_density,
    speed_density,
    wronskian_b,
)
from .excessive import (
    INFINITY,
    ZERO,
    ExcessiveFunction,
    build_excessive,
    delta_c,
    eval_u,
    solve_hat_z,
    z_bar,
)
from .solvers import (
    Regime,
    StoppingSolution,
    critical_kappa_floor,
    exchange_boundary,
    exchange_solve,
    floor_solve,
    hitting_probability,
    integral_boundary,
    integral_solve,
    solve,
    stopping_set_test,
    upper_boundary_solve,
    value,
    worst_case_generator,
)
from .oracle_fd import GridSolution, GridSpec, compare, solve_obstacle
from .simulate import (
    CONSTANT_MINUS_KAPPA,
    CONSTANT_PLUS_KAPPA,
    WORST_CASE,
    McEstimate,
    SimConfig,
    martingale_check,
    nash_check,
    simulate_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
