"""Domain-type guided software model checking for MiniC programs."""

__version__ = "0.1.0"
