"""Optimal cut-points of binomial group testing procedures"""

