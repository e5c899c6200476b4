"""Critical long-range percolation on Z as a random electric network.

Exact samplers for the beta-LRP edge law, effective-resistance solvers with
supernode condensation and constrained (forced-passage) variants, the
multi-scale good/very-good interval machinery, the dyadic spreading process,
and Monte Carlo campaigns that probe the polynomial growth of the resistance.
"""

from .errors import (DependencyError, DivergentIntegral, InsufficientData,
                     InvalidArgument, InvalidFlow, LrpError, SolverFailure,
                     UnsupportedGeometry)
from .model import (LrpParams, LrpWindow, edge_key, edge_probability,
                    rectangle_mass, rectangle_no_edge_probability,
                    sample_boundary_multiplicity, sample_window, spawn_rng)
from .network import (SNK, SRC, Complement, CondensedNetwork, FlowField,
                      HalfExit, HatInterval, HatN, Interval, ResistanceResult,
                      TildeN, Vertices, brute_force_resistance, condense,
                      effective_resistance, flow_decompose, hat_resistance,
                      network_from_conductances)
from .multiscale import (GoodPairQuery, ScaleLedger, build_scale_ledger,
                         check_event_E, check_event_F, good_pair_probability,
                         is_good_pair, is_very_good_pair, xi_sum_tail,
                         xi_vector)
from .firework import (SpreadState, brute_force_spread, run_spread,
                       sample_reach, spread_decay, spread_from_reaches)
from .experiments import (QuantileTable, ScanResult, box_scan,
                          cutedge_baseline, dominance_check,
                          estimate_quantiles, fit_exponent, point_scan,
                          quantile_from_samples, recursion_check)

__version__ = "0.1.0"
