"""Apsidal angles of central-force orbits and a rigorous replay of the
monotonicity argument for the logarithmic potential."""

__version__ = "0.1.0"
