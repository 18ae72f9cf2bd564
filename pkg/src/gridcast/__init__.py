"""gridcast: short-term residential load forecasting at 5-minute resolution.

The package covers the whole experiment pipeline: CSV ingestion and
weather interpolation, min-max scaling and chronological splitting,
from-scratch MLP and LSTM models trained with Adam and early stopping,
persistence baselines, evaluation metrics with seasonal stratification,
a deterministic synthetic household generator, and a config-driven CLI.
"""

__version__ = "0.1.0"

from gridcast.types import (  # noqa: F401
    MergedFrame,
    MeterRecord,
    Season,
    TimePoint,
    WeatherDay,
    season_of,
    time_decimal,
)
