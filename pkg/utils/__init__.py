"""
Carbon Market Analysis - Utilities
Shared error types, console output, configuration and artifact writing
"""

__version__ = "1.0.0"
