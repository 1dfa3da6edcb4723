"""
Carbon Market Analysis - Numerical Analysis
Statistical tests, rolling AR+GARCH forecasts, trade-network centrality
and price elasticity estimation
"""

__version__ = "1.0.0"
