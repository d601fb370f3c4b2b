"""Hyperbolic mean curvature flow of convex plane curves.

The flow is integrated through the support function S(theta, tau) of the
evolving curve; see ``solver`` for the equation and ``diagnostics`` for the
monitored quantities. ``oracles`` holds the exact radial solutions and
``string_solver`` the relativistic-string counterpart.
"""
from .errors import (ContractViolation, DegenerateParametrization, HMCFError,
                     HyperbolicityLost, InvalidConfig, NotApplicable,
                     NumericalFailure, TimelikeViolation, TooFewRecords)
from .geometry import ThetaGrid, make_initial
from .kernels import BACKEND
from .solver import (FlowConfig, SupportState, Termination, Trajectory,
                     estimate_collapse_time, evolve, evolve_lockstep)
from .diagnostics import finalize_residuals
from .oracles import circle_flow, collapse_time_quadrature, string_circle
from .string_solver import StringConfig, StringState, string_evolve

__version__ = "0.1.0"
