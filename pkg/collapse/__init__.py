"""
Collapse Package

One-dimensional measurement collapse: a state measured through a
non-monotonous function collapses onto every root of f(x) = f0.
"""
