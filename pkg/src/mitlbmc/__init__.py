"""Bounded model checking of timed automata networks against MITL formulas
with one-sided time bounds, over super-dense time."""

__version__ = "0.1.0"
