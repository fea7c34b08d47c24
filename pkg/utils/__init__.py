# utils/__init__.py
"""
Utility modules: logging, data files and run outputs.
"""
from .logger import log
from .file_handler import load_dataset, load_probabilities, write_dataset, write_probabilities
from .run_store import load_json, save_json, write_curve

__all__ = [
    'log',
    'load_dataset',
    'load_probabilities',
    'write_dataset',
    'write_probabilities',
    'load_json',
    'save_json',
    'write_curve'
]
