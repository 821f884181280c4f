"""
Repository package for file-backed artifact storage.
"""
