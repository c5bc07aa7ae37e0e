"""
Logging setup and filters for UVDS.
"""
import logging

from uvds.settings import get_settings

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Records tagged with this attribute come from the Q-step inner loop
INNER_ITERATION_FLAG = "uvds_inner"

# Third-party loggers kept at WARNING
NOISY_LOGGERS = ("dotenv.main", "concurrent.futures")


class IgnoreIterationNoise(logging.Filter):
    """
    Filter to drop per-inner-iteration DEBUG records of the Q-step,
    which are harmless but noisy
    """

    def __init__(self, trace_inner: bool = False):
        super().__init__()
        self.trace_inner = trace_inner

    def filter(self, record):
        if self.trace_inner:
            return True
        return not getattr(record, INNER_ITERATION_FLAG, False)


def configure_logging(level: str = None, trace_inner: bool = None) -> None:
    """
    Configure root logging once; later calls only adjust the level.

    Unset arguments come from the environment settings. Logs go to stderr
    so stdout stays reserved for command output.
    """
    settings = get_settings()
    if level is None:
        level = settings.log_level
    if trace_inner is None:
        trace_inner = settings.trace_inner

    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=level.upper(), format=LOG_FORMAT)
        for handler in root.handlers:
            handler.addFilter(IgnoreIterationNoise(trace_inner))
    root.setLevel(level.upper())

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
