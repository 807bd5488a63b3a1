"""pgk: empirical checks of prime-power gap inequalities and Kummer-type tests."""

__version__ = "0.1.0"
