"""Reference solvers used to check the message passing engine and device proxes."""
from app.oracle.brute_force import brute_force_solve
from app.oracle.centralized import CentralizedResult, centralized_solve
from app.oracle.grid import GridSpec, grid_minimize, prox_oracle
from app.oracle.optimality import feasible_probes, prox_optimality_gap
