"""Workbench for unification in modal logics with a universal box or nominals.

Compiles two-counter machine programs into modal formulas, builds explicit
unifiers for reachable target configurations, and certifies non-unifiability
for unreachable ones with a finite labeled frame.
"""

__version__ = "0.1.0"
