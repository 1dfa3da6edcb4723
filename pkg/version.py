"""
Project version information
"""

__version__ = "1.0.0"
__version_info__ = (1, 0, 0)

# Version history
# 1.0.0 (2026-10-18): Initial release - ingest, flow summaries, ADF/ARCH tests, AR+GARCH rolling forecasts, trade-network centrality, OLS/LAD elasticities
