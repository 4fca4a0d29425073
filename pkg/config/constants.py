"""
Constants used throughout the application.
"""


# Device kinds
class DeviceKind:
    GENERATOR = "generator"
    TRANSMISSION_LINE = "transmission_line"
    BATTERY = "battery"
    FIXED_LOAD = "fixed_load"
    THERMAL_LOAD = "thermal_load"
    DEFERRABLE_LOAD = "deferrable_load"
    CURTAILABLE_LOAD = "curtailable_load"
    ELECTRIC_VEHICLE = "electric_vehicle"
    EXTERNAL_TIE = "external_tie"

    # Devices with one terminal
    SINGLE_TERMINAL = [
        GENERATOR, BATTERY, FIXED_LOAD, THERMAL_LOAD, DEFERRABLE_LOAD,
        CURTAILABLE_LOAD, ELECTRIC_VEHICLE, EXTERNAL_TIE
    ]

    # Devices the benchmark generator knows how to sample
    GENERATED = [GENERATOR, BATTERY, FIXED_LOAD, DEFERRABLE_LOAD, CURTAILABLE_LOAD]

    # Devices whose desired consumption is scaled by load perturbations
    LOADS = [FIXED_LOAD, CURTAILABLE_LOAD, DEFERRABLE_LOAD]

    # List of all device kinds
    ALL = SINGLE_TERMINAL + [TRANSMISSION_LINE]


# Generator classes sampled by the benchmark generator
class GeneratorClass:
    LARGE = "large"
    MEDIUM = "medium"
    SMALL = "small"

    ALL = [SMALL, MEDIUM, LARGE]

    # (P_min, P_max, R_max, alpha, beta)
    TABLE = {
        LARGE: (0.0, 50.0, 3.0, 0.001, 0.1),
        MEDIUM: (0.0, 20.0, 5.0, 0.005, 0.2),
        SMALL: (0.0, 10.0, 10.0, 0.02, 1.0),
    }


# Fraction of one-terminal devices attached to generated nets
DEFAULT_DEVICE_MIX = {
    DeviceKind.GENERATOR: 0.2,
    DeviceKind.BATTERY: 0.1,
    DeviceKind.FIXED_LOAD: 0.5,
    DeviceKind.DEFERRABLE_LOAD: 0.1,
    DeviceKind.CURTAILABLE_LOAD: 0.1,
}


# Network topologies produced by the generator
class Topology:
    GEOMETRIC = "geometric"
    TREE = "tree"

    ALL = [GEOMETRIC, TREE]


# Termination status of a solve
class SolveStatus:
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    PROX_FAILURE = "prox_failure"

    ALL = [CONVERGED, MAX_ITER, PROX_FAILURE]


# Termination status of the dense QP kernel
class QpStatus:
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    PRIMAL_INFEASIBLE = "primal_infeasible"

    ALL = [OPTIMAL, MAX_ITER, PRIMAL_INFEASIBLE]


# Process exit codes of the command line
class ExitCode:
    CONVERGED = 0
    MAX_ITER = 1
    INPUT_ERROR = 2
    INTERNAL_FAILURE = 3


# Named random substreams; each purpose draws from its own generator
class RngStream:
    TOPOLOGY = "topology"
    MIX = "mix"
    PARAMS = "params"
    CALIBRATION = "calibration"
    PERTURBATION = "perturbation"

    ALL = [TOPOLOGY, MIX, PARAMS, CALIBRATION, PERTURBATION]


# Columns of the iteration trace table
class TraceColumn:
    ITERATION = "k"
    RHO = "rho"
    PRIMAL_RESIDUAL = "r_norm"
    DUAL_RESIDUAL = "s_norm"
    OBJECTIVE = "objective"
    PRIMAL_INFEASIBILITY = "primal_infeasibility"
    RELATIVE_SUBOPTIMALITY = "relative_suboptimality"
    DEVICE_PHASE_TIME = "device_phase_s"
    NET_PHASE_TIME = "net_phase_s"

    ALL = [
        ITERATION, RHO, PRIMAL_RESIDUAL, DUAL_RESIDUAL, OBJECTIVE,
        PRIMAL_INFEASIBILITY, RELATIVE_SUBOPTIMALITY, DEVICE_PHASE_TIME, NET_PHASE_TIME
    ]
