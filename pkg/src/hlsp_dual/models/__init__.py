from .problem import LevelData, HlspProblem, HlspSolution  # noqa: F401
from .config import AdmmConfig, IpmConfig  # noqa: F401
from .report import PhaseTimings, SolveReport  # noqa: F401
from .bench import BenchRecord, BenchSummary, ExperimentConfig  # noqa: F401
