"""
Interference Package

Number-difference statistics of post-measurement states: fringe spacing,
visibility under counting errors, and pooling over initial-number fluctuations.
"""
