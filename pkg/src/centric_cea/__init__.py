"""Cellular evolutionary algorithm with tunable centric selection.

Modules: ``grid`` (engine), ``qap`` and ``nk`` (problem backends),
``equilibrium`` (selection-only takeover dynamics), ``pem`` (improvement
probability model) and ``cli``.
"""

__version__ = "0.1.0"
