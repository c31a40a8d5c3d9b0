"""Bond-based peridynamic simulation of dynamic brittle fracture in 2D."""

__version__ = "0.1.0"

from .config import RunConfig, parse_config, serialize_config  # noqa: E402
from .constitutive import MaterialConstants, ModelParams, calibrate  # noqa: E402
from .simulation import RunResult, Simulation, run  # noqa: E402

__all__ = [
    "__version__",
    "MaterialConstants",
    "ModelParams",
    "RunConfig",
    "RunResult",
    "Simulation",
    "calibrate",
    "parse_config",
    "run",
    "serialize_config",
]
