"""Hard-concrete L0 gates at the representation a classifier reads from.

Subpackages: ``numcore`` (autodiff, Adam, RNG), ``backbones`` and ``datasets``;
modules ``gate``, ``schedule``, ``metrics``, ``robustness``, ``trainer``,
``runner`` and ``cli``.
"""
__version__ = "0.1.0"
