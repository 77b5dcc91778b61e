"""vnfmigplots: chart rendering for vnfmigsim result files."""

__version__ = "0.1.0"

from .charts import ChartSpec, SchemaError, extract_series, render  # noqa: F401
