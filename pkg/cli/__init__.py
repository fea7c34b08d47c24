# cli/__init__.py
"""
Command-line interface: train, eval, sweep and synth.
"""
from .main import cli, main

__all__ = ['cli', 'main']
