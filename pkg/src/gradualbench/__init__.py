"""Curriculum environment engine, evaluation harness and computational-mechanics toolkit."""

__version__ = "0.1.0"
