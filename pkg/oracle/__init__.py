"""
Oracle Package

Brute-force exact references on tiny, explicitly truncated Fock spaces.
"""
