"""Exact information measures, two-party protocols, correlated sampling and
message compression on finite distributions, with a direct-product harness.

Modules: ``info`` (distributions and measures), ``exact`` (rational logs),
``protocols``, ``randomness`` and ``sampling`` (shared randomness),
``hashing`` and ``compression``, ``problems`` (pointer chasing, k-fold
products), ``harness`` and ``cli``.
"""

__version__ = "0.1.0"
