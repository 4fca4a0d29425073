import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_float(name, default):
    return float(os.getenv(name, default))


def _env_int(name, default):
    return int(os.getenv(name, default))


def _env_bool(name, default):
    return os.getenv(name, str(default)).strip().lower() in ("1", "true", "yes", "on")


class Config:
    """Base configuration class."""
    ENV = os.getenv("ENV", "development")
    DEBUG = ENV == "development"

    APP_TITLE = "Prox-Average Power Scheduler"
    APP_VERSION = "1.0.0"

    # Logging configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG" if DEBUG else "INFO")
    LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} {level} {message}"
    LOG_DIR = os.getenv("LOG_DIR", "logs")
    LOG_TO_FILE = _env_bool("LOG_TO_FILE", False)

    # Prox-average message passing
    EPS_ABS = _env_float("EPS_ABS", 1e-3)
    RHO0 = _env_float("RHO0", 1.0)
    RHO_LAMBDA = _env_float("RHO_LAMBDA", 0.005)
    RHO_MU = _env_float("RHO_MU", 0.01)
    MAX_ITER = _env_int("MAX_ITER", 5000)
    RHO_FREEZE_ITER = _env_int("RHO_FREEZE_ITER", 1000)
    THREADS = _env_int("THREADS", 1)
    DETERMINISTIC = _env_bool("DETERMINISTIC", True)
    LOG_EVERY = _env_int("LOG_EVERY", 50)

    # Device prox tolerances
    KKT_TOL = 1e-8
    FEAS_TOL = 1e-6
    QP_MAX_ITER = 100
    ROOT_TOL = 1e-10

    # Transmission line calibration pre-solve
    CALIBRATION_EPSILON = 1e-3
    CALIBRATION_MAX_ITER = _env_int("CALIBRATION_MAX_ITER", 5000)

    # Oracles
    CENTRALIZED_MAX_VARIABLES = _env_int("CENTRALIZED_MAX_VARIABLES", 20000)
    CENTRALIZED_QP_TOL = 1e-9
    GRID_POINT_BUDGET = int(1e8)
    GRID_LEVEL_POINTS = _env_int("GRID_LEVEL_POINTS", 200000)

    # File formats
    SCENARIO_FORMAT_VERSION = 1


class DevelopmentConfig(Config):
    """Development configuration."""
    pass


class TestingConfig(Config):
    """Testing configuration."""
    ENV = "testing"
    DEBUG = True
    LOG_LEVEL = "DEBUG"
    LOG_TO_FILE = False
    THREADS = 1
    LOG_EVERY = 100


class BenchmarkConfig(Config):
    """Benchmark configuration."""
    ENV = "benchmark"
    DEBUG = False

    # Keep the console quiet while timing solves
    LOG_LEVEL = "WARNING"
    THREADS = _env_int("THREADS", 8)


# Configuration dictionary to select the right configuration based on environment
config_by_name = {
    "development": DevelopmentConfig,
    "testing": TestingConfig,
    "benchmark": BenchmarkConfig
}

# Get the current configuration
current_config = config_by_name[os.getenv("ENV", "development")]
