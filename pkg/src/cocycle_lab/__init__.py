"""Finite groupoid cocycles: coboundary solvers and bounded-orbit checks."""

from .bundle import (BundleVector, Cocycle, HilbertBundle, IsometricAction, Section, affine_apply,
                     birkhoff_cocycle, birkhoff_cocycle_on, check_cnd, check_cocycle, coboundary,
                     cocycle_defects, complete_action, involution_W, psi, trivial_action,
                     validate_action)
from .groupoid import (FiniteGroupoid, TransformationSystem, WindowedTG,
                       build_transformation_groupoid, fiber, is_minimal, orbits, validate_groupoid)
from .meb import Ball, min_enclosing_ball
from .scenario import Scenario, gen_scenario, load_scenario
from .solvers import (boundedness_probe, modulus_of_continuity_estimate, midpoint_check,
                      orbit_hull_invariance_check, solve_by_center, solve_least_squares,
                      solve_transfer_function, uniform_convexity_delta)
from .verify import TheoremReport, emit_csv, emit_report, run_verify

__version__ = "0.1.0"
