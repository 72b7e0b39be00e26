"""
squidsim: multiphoton transitions and population inversion in a
microwave-driven rf-SQUID flux qubit.

Circuit potential, flux eigenproblem, four-level Lindblad dynamics,
Landau-Zener rate analytics and bias x power sweeps.
"""

__version__ = "0.1.0"
