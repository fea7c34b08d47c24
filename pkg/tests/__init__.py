# tests/__init__.py
"""
Test suite for the learning-with-rejection toolkit.
"""
