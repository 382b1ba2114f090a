"""
BNSL - File Formats
Datasets, local score files, structural constraints and network output.
"""

from .dataset import Dataset, DatasetParser, parse_dataset
from .constraints import EdgeConstraint, parse_constraints

__all__ = [
    "Dataset",
    "DatasetParser",
    "parse_dataset",
    "EdgeConstraint",
    "parse_constraints",
]
