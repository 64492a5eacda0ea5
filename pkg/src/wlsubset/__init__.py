"""Workload characterisation and subsetting from microarchitectural metrics."""

__version__ = "0.1.0"
