from .telemetry import telemetry
from .dat import dat
from .metrics import metrics
from .experiment import experiment
from .simulation import simulation

__all__ = ['telemetry', 'dat', 'metrics', 'experiment', 'simulation']
