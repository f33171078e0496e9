"""
Fock Package

Two-mode algebra of the trapped levels: sectors, states in the number and
symmetric/antisymmetric bases, the cos(phi) operator and log-space combinatorics.
"""
