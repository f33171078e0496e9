"""
Trajectories Package

Quantum-trajectory simulation of one-by-one atom detection and the
waiting-time statistics of the resulting records.
"""
