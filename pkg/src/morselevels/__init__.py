"""Homology of level sets of Morse functions: chain complexes, level-set
extraction, topology-change rules and mechanical examples."""

__version__ = "0.1.0"
