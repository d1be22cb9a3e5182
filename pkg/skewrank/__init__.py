"""skewrank - rank aggregation by skew-symmetric low-rank matrix completion."""

__version__ = "1.0.0"
__author__ = "skewrank Team"
__description__ = "Rank items from sparse ratings via pairwise aggregation and low-rank matrix completion"
