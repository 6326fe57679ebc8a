"""Online deterministic annealing for clustering and classification."""
from .core import Codevector, OdaConfig, OdaModel, TemperatureSchedule, gibbs_weights
from .divergence import Divergence, DivergenceKind
from .estimator import ODAClassifier, ODAClustering
from .report import LevelRecord, RunReport

__all__ = [
    "Codevector",
    "Divergence",
    "DivergenceKind",
    "LevelRecord",
    "ODAClassifier",
    "ODAClustering",
    "OdaConfig",
    "OdaModel",
    "RunReport",
    "TemperatureSchedule",
    "gibbs_weights",
]

__version__ = "0.1.0"
