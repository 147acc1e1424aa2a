"""Multi-position calibration of low-cost IMUs with an erasure-coded gyro link."""

from .calibration import CalibrationResult, calibrate
from .config import RunConfig, load_config, parse_config
from .errors import ImucalError
from .model import AccelParams, CalibrationParams, GyroParams, load_params, save_params
from .static_detector import DetectorConfig
from .solver import SolverConfig
from .stream import SampleStream, read_stream, write_stream

__version__ = "0.1.0"
