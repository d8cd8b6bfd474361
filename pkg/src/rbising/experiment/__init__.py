from .fitting import FitResult, fit_powerlaw
from .seeds import derive_seed, task_rng

__all__ = ["FitResult", "fit_powerlaw", "derive_seed", "task_rng"]
