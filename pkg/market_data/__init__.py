"""
Carbon Market Analysis - Market Data
Domain types, calendar utilities, CSV readers and ingest transformations
"""

__version__ = "1.0.0"
