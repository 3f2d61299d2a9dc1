__version__ = "0.1.0"

from .adapter import (
    AdapterManifest,
    IoError,
    extract_neural_features,
    load_schema_manifest,
    validate_schema,
)
from .scorers import default_scorers

__all__ = [
    "__version__",
    "AdapterManifest",
    "IoError",
    "extract_neural_features",
    "load_schema_manifest",
    "validate_schema",
    "default_scorers",
]
