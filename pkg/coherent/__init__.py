"""
Coherent Package

Unitary outcoupling into level 0 followed by a snapshot count n0, and the
relative-phase distribution that count leaves behind.
"""
