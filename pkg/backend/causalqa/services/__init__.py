"""
Service package: the pipeline's algorithms.
"""
