"""
CLI Package

Run configuration, mode orchestration and export of plot-ready data files.
"""
